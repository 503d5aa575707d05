//! `daestruct index | tran | device`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use daestruct_core::mna::BoundOptions;
use daestruct_core::pipeline::{run_device, run_index, run_probes, run_tran};
use daestruct_core::report::{format_float, to_report_json};
use daestruct_core::sim::TransientResult;
use daestruct_core::Error;

#[derive(Parser)]
#[command(name = "daestruct", version, about = "Structural DAE index analysis for circuits with generalized elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Index bound, hypothesis trace and (linear circuits) pencil oracle.
    Index {
        netlist: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Rank tolerance for topology decisions.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "on")]
        oracle: OnOff,
    },
    /// Implicit-Euler transient of a linear netlist.
    Tran {
        netlist: PathBuf,
        #[arg(long)]
        tend: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        /// Write the trajectory CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Run the netlist's .probe directives and write their JSON here.
        #[arg(long)]
        probe_json: Option<PathBuf>,
    },
    /// Build a field device from a spec file and classify it.
    Device {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io { path: p.display().to_string(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn trajectory_csv(run: &TransientResult) -> Result<String, Error> {
    let io = |e: csv::Error| Error::Usage(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("t").chain(run.names.iter().map(String::as_str)).collect();
    w.write_record(&header).map_err(io)?;
    for (t, z) in run.times.iter().zip(&run.states) {
        let row: Vec<String> = std::iter::once(*t).chain(z.iter().copied()).map(format_float).collect();
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Index { netlist, json, tol, oracle } => {
            if tol.is_some_and(|t| !(t >= 0.0)) {
                return Err(Error::Usage("--tol must be non-negative".into()));
            }
            let opts = BoundOptions { tol, oracle: matches!(oracle, OnOff::On), ..Default::default() };
            let report = run_index(&netlist, &opts)?;
            emit(json.as_deref(), &to_report_json(&report)?)
        }
        Command::Tran { netlist, tend, h, csv, probe_json } => {
            let result = run_tran(&netlist, tend, h)?;
            emit(csv.as_deref(), &trajectory_csv(&result)?)?;
            if let Some(p) = probe_json {
                let probes = run_probes(&netlist)?;
                emit(Some(&p), &to_report_json(&serde_json::json!({ "probes": probes }))?)?;
            }
            Ok(())
        }
        Command::Device { spec, out } => {
            let report = run_device(&spec, &out)?;
            let text = to_report_json(&report)?;
            emit(Some(&out.join("report.json")), &text)?;
            emit(None, &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_status() as u8)
        }
    }
}

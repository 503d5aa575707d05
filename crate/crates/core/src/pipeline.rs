//! File-to-report pipelines behind the command-line tool.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::devspec::parse_devspec;
use crate::elements::{classify, ClassificationReport, ClassifyOptions};
use crate::fit::DeviceChecks;
use crate::linalg::mtx::write_mtx;
use crate::mna::{assemble, index_bound, BoundOptions, IndexReport, MnaSystem};
use crate::netlist::{parse_netlist, to_model, Directive, Netlist};
use crate::sim::{integrate, perturbation_probe, ProbeReport, TransientResult, PROBE_OMEGAS};
use crate::Error;

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_netlist(path: &Path) -> Result<(Netlist, MnaSystem), Error> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let wrap = |source| Error::Parse { path: path.display().to_string(), source };
    let net = parse_netlist(&text, base).map_err(wrap)?;
    let model = to_model(&net).map_err(wrap)?;
    let sys = assemble(&model)?;
    Ok((net, sys))
}

pub fn run_index(path: &Path, opts: &BoundOptions) -> Result<IndexReport, Error> {
    let (_, sys) = load_netlist(path)?;
    Ok(index_bound(&sys, opts)?)
}

/// Transient run; `t_end`/`h` fall back to the netlist's `.tran` line.
pub fn run_tran(path: &Path, t_end: Option<f64>, h: Option<f64>) -> Result<TransientResult, Error> {
    let (net, sys) = load_netlist(path)?;
    let directive = net.directives.iter().find_map(|d| match d {
        Directive::Tran { t_end, h } => Some((*t_end, *h)),
        _ => None,
    });
    let (t_end, h) = match (t_end, h, directive) {
        (Some(t), Some(h), _) => (t, h),
        (t, h, Some((dt, dh))) => (t.unwrap_or(dt), h.unwrap_or(dh)),
        _ => return Err(Error::Usage("no --tend/--h given and the netlist has no .tran line".into())),
    };
    Ok(integrate(&sys, 0.0, t_end, h, None)?)
}

/// Every `.probe` directive of the netlist.
pub fn run_probes(path: &Path) -> Result<Vec<ProbeReport>, Error> {
    let (net, sys) = load_netlist(path)?;
    let mut out = Vec::new();
    for d in &net.directives {
        if let Directive::Probe { source, epsilon } = d {
            out.push(perturbation_probe(&sys, source, epsilon, &PROBE_OMEGAS)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub device: String,
    pub n_x: usize,
    pub n_p: usize,
    pub checks: DeviceChecks,
    pub classification: ClassificationReport,
    pub files: Vec<String>,
}

pub const DESCRIPTOR_FILE: &str = "descriptor.mtx";

/// Builds the device, writes its matrices (`K_x.mtx` … and the stacked
/// `descriptor.mtx` usable from a netlist X line) into `out_dir`, and
/// returns the classification report.
pub fn run_device(spec_path: &Path, out_dir: &Path) -> Result<DeviceReport, Error> {
    let text = read(spec_path)?;
    let spec = parse_devspec(&text).map_err(|source| Error::Parse { path: spec_path.display().to_string(), source })?;
    let mut dev = spec.build()?;
    dev.element.label = spec.kind.as_str().into();
    let (class, _) = classify(&dev.element, &ClassifyOptions::default());
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let el = &dev.element;
    let parts = [
        ("K_x.mtx", &el.k_x),
        ("K_i.mtx", &el.k_i),
        ("K_v.mtx", &el.k_v),
        ("L_x.mtx", &el.l_x),
        ("L_i.mtx", &el.l_i),
        ("L_v.mtx", &el.l_v),
    ];
    let mut files = Vec::new();
    for (name, m) in parts {
        write(&out_dir.join(name), &write_mtx(m))?;
        files.push(name.to_string());
    }
    write(&out_dir.join(DESCRIPTOR_FILE), &write_mtx(&el.stacked()))?;
    files.push(DESCRIPTOR_FILE.into());
    Ok(DeviceReport {
        device: spec.kind.as_str().into(),
        n_x: el.n_x,
        n_p: el.n_p,
        checks: dev.checks,
        classification: class,
        files,
    })
}

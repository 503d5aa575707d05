//! Line-oriented netlist format (a small SPICE-flavoured subset).
//!
//! ```text
//! # comment
//! .nodes 3                  optional; otherwise max node index + 1
//! R1 1 2 R=1k               or a bare value: R1 1 2 1000
//! L1 2 0 L=1m form=flux     form=flux|current (default current)
//! C1 2 0 C=1u form=charge   form=charge|voltage (default voltage)
//! V1 1 0 sin 0 1 50         dc V | sin OFF AMP FREQ [PHASE] | pwl T V T V ...
//! I1 0 2 dc 1m
//! X1 3 0 class=L descriptor=em.mtx port=1 element=EM strong=verify
//! .index
//! .tran 1e-3 1e-6
//! .probe V1 eps=1e-3
//! .end
//! ```
//!
//! Keywords are case-insensitive. Node 0 is ground. X lines sharing an
//! `element=` name form one multiport element (ports ordered by `port=`);
//! the descriptor is a single Matrix Market file holding `[K | L]`.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::elements::DescriptorElement;
use crate::linalg::mtx::read_mtx_file;
use crate::matrix::Matrix;
use crate::mna::{CircuitModel, Strength};
use crate::topology::BranchClass;
use crate::waveform::Waveform;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchSpec {
    R(f64),
    L { value: f64, flux: bool },
    C { value: f64, charge: bool },
    V(Waveform),
    I(Waveform),
    X { element: String, class: BranchClass, port: usize, descriptor: PathBuf, asserted: bool, witness: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchLine {
    pub line: usize,
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub spec: BranchSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Index,
    Tran { t_end: f64, h: f64 },
    Probe { source: String, epsilon: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub node_count: usize,
    pub branches: Vec<BranchLine>,
    pub directives: Vec<Directive>,
}

/// Number with an optional engineering suffix (`f p n u m k meg g t`).
pub fn parse_value(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let lower = s.to_ascii_lowercase();
    let suffixes: [(&str, f64); 9] =
        [("meg", 1e6), ("f", 1e-15), ("p", 1e-12), ("n", 1e-9), ("u", 1e-6), ("m", 1e-3), ("k", 1e3), ("g", 1e9), ("t", 1e12)];
    for (suf, scale) in suffixes {
        if let Some(head) = lower.strip_suffix(suf) {
            if let Ok(v) = head.parse::<f64>() {
                return Some(v * scale);
            }
        }
    }
    None
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

fn value(line: usize, s: &str) -> Result<f64, ParseError> {
    parse_value(s).filter(|v| v.is_finite()).ok_or_else(|| err(line, format!("invalid number '{s}'")))
}

fn parse_waveform(line: usize, toks: &[&str]) -> Result<Waveform, ParseError> {
    let Some(kind) = toks.first() else {
        return Err(err(line, "missing source waveform"));
    };
    let nums = |t: &[&str]| t.iter().map(|s| value(line, s)).collect::<Result<Vec<_>, _>>();
    match kind.to_ascii_lowercase().as_str() {
        "dc" => match nums(&toks[1..])?.as_slice() {
            [v] => Ok(Waveform::dc(*v)),
            _ => Err(err(line, "dc takes one value")),
        },
        "sin" => match nums(&toks[1..])?.as_slice() {
            [o, a, f] => Ok(Waveform::sin(*o, *a, *f)),
            [o, a, f, p] => Ok(Waveform::Sin { offset: *o, amplitude: *a, freq_hz: *f, phase: *p }),
            _ => Err(err(line, "sin takes OFFSET AMPLITUDE FREQ [PHASE]")),
        },
        "pwl" => {
            let v = nums(&toks[1..])?;
            if v.len() < 2 || v.len() % 2 != 0 {
                return Err(err(line, "pwl takes pairs T V"));
            }
            Waveform::pwl(v.chunks(2).map(|c| (c[0], c[1])).collect()).map_err(|m| err(line, m))
        }
        _ if toks.len() == 1 => Ok(Waveform::dc(value(line, kind)?)),
        other => Err(err(line, format!("unknown waveform '{other}'"))),
    }
}

/// Splits `key=value` tokens off the positional ones (keys lower-cased).
fn split_params(toks: &[&str]) -> (Vec<String>, BTreeMap<String, String>) {
    let mut pos = Vec::new();
    let mut kv = BTreeMap::new();
    for t in toks {
        match t.split_once('=') {
            Some((k, v)) => {
                kv.insert(k.to_ascii_lowercase(), v.to_string());
            }
            None => pos.push(t.to_string()),
        }
    }
    (pos, kv)
}

fn two_terminal_value(line: usize, key: &str, pos: &[String], kv: &BTreeMap<String, String>) -> Result<f64, ParseError> {
    match (kv.get(key), pos) {
        (Some(v), []) => value(line, v),
        (None, [v]) => value(line, v),
        (None, []) => Err(err(line, format!("missing value ({}=...)", key.to_ascii_uppercase()))),
        _ => Err(err(line, "expected exactly one value")),
    }
}

fn check_keys(line: usize, kv: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), ParseError> {
    match kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(err(line, format!("unknown parameter '{k}'"))),
        None => Ok(()),
    }
}

/// Parses netlist text; relative descriptor paths resolve against `base`.
pub fn parse_netlist(text: &str, base: &Path) -> Result<Netlist, ParseError> {
    let mut net = Netlist::default();
    let mut declared: Option<(usize, usize)> = None;
    let mut ids = HashSet::new();
    let mut max_node = 0usize;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let cleaned: String = body.chars().map(|c| if matches!(c, '(' | ')' | ',') { ' ' } else { c }).collect();
        let toks: Vec<&str> = cleaned.split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };

        if let Some(dir) = head.strip_prefix('.') {
            match dir.to_ascii_lowercase().as_str() {
                "end" => break,
                "nodes" => {
                    let n = toks.get(1).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| err(line, ".nodes takes a count"))?;
                    declared = Some((n, line));
                }
                "index" => net.directives.push(Directive::Index),
                "tran" => {
                    if toks.len() != 3 {
                        return Err(err(line, ".tran takes T_END H"));
                    }
                    let (t_end, h) = (value(line, toks[1])?, value(line, toks[2])?);
                    if !(h > 0.0) || t_end < 0.0 {
                        return Err(err(line, ".tran needs H > 0 and T_END >= 0"));
                    }
                    net.directives.push(Directive::Tran { t_end, h });
                }
                "probe" => {
                    let (pos, kv) = split_params(&toks[1..]);
                    check_keys(line, &kv, &["eps"])?;
                    let [source] = pos.as_slice() else {
                        return Err(err(line, ".probe takes one source id"));
                    };
                    let epsilon = match kv.get("eps") {
                        Some(v) => v.split(';').map(|s| value(line, s)).collect::<Result<_, _>>()?,
                        None => vec![1e-3],
                    };
                    net.directives.push(Directive::Probe { source: source.clone(), epsilon });
                }
                other => return Err(err(line, format!("unknown directive '.{other}'"))),
            }
            continue;
        }

        let letter = head.chars().next().expect("non-empty").to_ascii_uppercase();
        if !"RLCVIX".contains(letter) {
            return Err(err(line, format!("unknown element class '{letter}' (expected R, L, C, V, I or X)")));
        }
        if toks.len() < 3 {
            return Err(err(line, "expected ID FROM TO ..."));
        }
        let node = |s: &str| s.parse::<usize>().map_err(|_| err(line, format!("invalid node '{s}'")));
        let (from, to) = (node(toks[1])?, node(toks[2])?);
        if from == to {
            return Err(err(line, format!("branch '{head}' connects node {from} to itself")));
        }
        if !ids.insert(head.to_string()) {
            return Err(err(line, format!("duplicate branch id '{head}'")));
        }
        max_node = max_node.max(from).max(to);
        let rest = &toks[3..];
        let spec = match letter {
            'V' => BranchSpec::V(parse_waveform(line, rest)?),
            'I' => BranchSpec::I(parse_waveform(line, rest)?),
            _ => {
                let (pos, kv) = split_params(rest);
                match letter {
                    'R' => {
                        check_keys(line, &kv, &["r"])?;
                        BranchSpec::R(two_terminal_value(line, "r", &pos, &kv)?)
                    }
                    'L' => {
                        check_keys(line, &kv, &["l", "form"])?;
                        let flux = match kv.get("form").map(|s| s.to_ascii_lowercase()) {
                            None => false,
                            Some(f) if f == "current" => false,
                            Some(f) if f == "flux" => true,
                            Some(f) => return Err(err(line, format!("unknown inductor form '{f}'"))),
                        };
                        BranchSpec::L { value: two_terminal_value(line, "l", &pos, &kv)?, flux }
                    }
                    'C' => {
                        check_keys(line, &kv, &["c", "form"])?;
                        let charge = match kv.get("form").map(|s| s.to_ascii_lowercase()) {
                            None => false,
                            Some(f) if f == "voltage" => false,
                            Some(f) if f == "charge" => true,
                            Some(f) => return Err(err(line, format!("unknown capacitor form '{f}'"))),
                        };
                        BranchSpec::C { value: two_terminal_value(line, "c", &pos, &kv)?, charge }
                    }
                    _ => parse_x(line, head, &pos, &kv, base)?,
                }
            }
        };
        net.branches.push(BranchLine { line, id: head.to_string(), from, to, spec });
    }
    net.node_count = match declared {
        Some((n, dline)) => {
            if let Some(b) = net.branches.iter().find(|b| b.from >= n || b.to >= n) {
                return Err(err(b.line, format!("node {} exceeds the {n} nodes declared on line {dline}", b.from.max(b.to))));
            }
            n
        }
        None => max_node + 1,
    };
    if net.branches.is_empty() {
        return Err(err(text.lines().count().max(1), "netlist has no branches"));
    }
    Ok(net)
}

fn parse_x(
    line: usize,
    id: &str,
    pos: &[String],
    kv: &BTreeMap<String, String>,
    base: &Path,
) -> Result<BranchSpec, ParseError> {
    check_keys(line, kv, &["class", "descriptor", "port", "element", "strong", "witness"])?;
    if !pos.is_empty() {
        return Err(err(line, "X lines take key=value parameters only"));
    }
    let class = match kv.get("class").map(|s| s.to_ascii_uppercase()).as_deref() {
        Some("L") => BranchClass::L,
        Some("C") => BranchClass::C,
        Some("R") => BranchClass::R,
        Some(o) => return Err(err(line, format!("class must be L, C or R, got '{o}'"))),
        None => return Err(err(line, "X line needs class=L|C|R")),
    };
    let descriptor = base.join(kv.get("descriptor").ok_or_else(|| err(line, "X line needs descriptor=FILE"))?);
    let port = match kv.get("port") {
        Some(p) => p.parse::<usize>().ok().filter(|p| *p >= 1).ok_or_else(|| err(line, format!("invalid port '{p}'")))?,
        None => 1,
    };
    let asserted = match kv.get("strong").map(|s| s.to_ascii_lowercase()).as_deref() {
        None | Some("verify") => false,
        Some("asserted") => true,
        Some(o) => return Err(err(line, format!("strong must be verify or asserted, got '{o}'"))),
    };
    let witness = kv.get("witness").map(|w| base.join(w));
    if witness.is_some() && !asserted {
        return Err(err(line, "witness= only applies to strong=asserted"));
    }
    let element = kv.get("element").cloned().unwrap_or_else(|| id.to_string());
    Ok(BranchSpec::X { element, class, port, descriptor, asserted, witness })
}

/// Builds the circuit model, loading descriptor files (errors keep the
/// line of the first X line that references the failing element).
pub fn to_model(net: &Netlist) -> Result<CircuitModel, ParseError> {
    let mut m = CircuitModel::new(net.node_count);
    let mut groups: BTreeMap<String, Vec<&BranchLine>> = BTreeMap::new();
    let mut order = Vec::new();
    for b in &net.branches {
        match &b.spec {
            BranchSpec::R(v) => {
                m.resistor(&b.id, b.from, b.to, *v);
            }
            BranchSpec::L { value, flux: false } => {
                m.inductor(&b.id, b.from, b.to, *value);
            }
            BranchSpec::L { value, flux: true } => {
                m.flux_inductor(&b.id, b.from, b.to, *value);
            }
            BranchSpec::C { value, charge: false } => {
                m.capacitor(&b.id, b.from, b.to, *value);
            }
            BranchSpec::C { value, charge: true } => {
                m.charge_capacitor(&b.id, b.from, b.to, *value);
            }
            BranchSpec::V(w) => {
                m.vsource(&b.id, b.from, b.to, w.clone());
            }
            BranchSpec::I(w) => {
                m.isource(&b.id, b.from, b.to, w.clone());
            }
            BranchSpec::X { element, .. } => {
                if !groups.contains_key(element) {
                    order.push(element.clone());
                }
                groups.entry(element.clone()).or_default().push(b);
            }
        }
    }
    for name in order {
        let mut lines = groups.remove(&name).expect("grouped");
        lines.sort_by_key(|b| match b.spec {
            BranchSpec::X { port, .. } => port,
            _ => 0,
        });
        let first = lines[0];
        let BranchSpec::X { class, descriptor, asserted, witness, .. } = &first.spec else { unreachable!() };
        for (k, b) in lines.iter().enumerate() {
            let BranchSpec::X { class: c, descriptor: d, asserted: a, port, .. } = &b.spec else { unreachable!() };
            if c != class || d != descriptor || a != asserted {
                return Err(err(b.line, format!("ports of element '{name}' disagree on class, descriptor or strength")));
            }
            if *port != k + 1 {
                return Err(err(b.line, format!("ports of element '{name}' must be numbered 1..n without gaps")));
            }
        }
        let stacked = read_mtx_file(descriptor).map_err(|e| err(first.line, format!("{}: {e}", descriptor.display())))?;
        let desc = DescriptorElement::from_stacked(&name, &stacked).map_err(|e| err(first.line, e.to_string()))?;
        if desc.n_p != lines.len() {
            return Err(err(first.line, format!("descriptor has {} ports, netlist connects {}", desc.n_p, lines.len())));
        }
        let strength = if *asserted {
            let samples: Vec<Matrix<f64>> = match witness {
                Some(w) => vec![read_mtx_file(w).map_err(|e| err(first.line, format!("{}: {e}", w.display())))?],
                None => vec![],
            };
            Strength::Asserted { samples }
        } else {
            Strength::Verify
        };
        let ports: Vec<(usize, usize)> = lines.iter().map(|b| (b.from, b.to)).collect();
        m.element(&name, *class, desc, &ports, strength);
    }
    Ok(m)
}

//! Key–value device specification.
//!
//! ```text
//! # full-wave device on a 3x3x3 grid
//! device   = em            # em | eqs | mqs
//! cells    = 3 3 3
//! spacing  = 1 1 1         # optional, default 1 1 1
//! boundary = shell         # shell | planar | six of dirichlet/neumann (x- x+ y- y+ z- z+)
//! eps      = 1             # uniform ε, ν (defaults 1)
//! nu       = 1
//! conductor = 1:1 1:1 1:1 2.0   # cell box (inclusive ranges) and σ; repeatable
//! coil      = 1:2 1:2 0:0 1.0   # cell box and τ_eq (mqs); repeatable
//! terminal  = 0:0 1:2 1:2       # point box; one per terminal, in port order
//! allow_large = false
//! enforce_support = true        # mqs: project the winding instead of rejecting it
//! ```

use std::ops::RangeInclusive;

use crate::fit::{
    build_em_device, build_eqs_device, build_mqs_device, winding_from_coil, Boundary, Device, FaceKind, FitError,
    MaterialField, MqsOptions, StaggeredGrid,
};
use crate::netlist::{parse_value, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Em,
    Eqs,
    Mqs,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Em => "em",
            DeviceKind::Eqs => "eqs",
            DeviceKind::Mqs => "mqs",
        }
    }
}

type BoxRange = [RangeInclusive<usize>; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub kind: DeviceKind,
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
    pub boundary: Boundary,
    pub eps: f64,
    pub nu: f64,
    pub conductors: Vec<(BoxRange, f64)>,
    pub coils: Vec<(BoxRange, f64)>,
    pub terminals: Vec<BoxRange>,
    pub allow_large: bool,
    pub enforce_support: bool,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

fn range(line: usize, s: &str) -> Result<RangeInclusive<usize>, ParseError> {
    let bad = || err(line, format!("invalid index range '{s}' (expected A:B or A)"));
    match s.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let a = s.parse().map_err(|_| bad())?;
            Ok(a..=a)
        }
    }
}

fn boxed(line: usize, toks: &[&str]) -> Result<BoxRange, ParseError> {
    Ok([range(line, toks[0])?, range(line, toks[1])?, range(line, toks[2])?])
}

fn flag(line: usize, s: &str) -> Result<bool, ParseError> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(line, format!("expected true or false, got '{s}'"))),
    }
}

pub fn parse_devspec(text: &str) -> Result<DeviceSpec, ParseError> {
    let mut kind = None;
    let mut cells = None;
    let mut spec = DeviceSpec {
        kind: DeviceKind::Em,
        cells: [0; 3],
        spacing: [1.0; 3],
        boundary: Boundary::dirichlet_shell(),
        eps: 1.0,
        nu: 1.0,
        conductors: vec![],
        coils: vec![],
        terminals: vec![],
        allow_large: false,
        enforce_support: true,
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, val) = body.split_once('=').ok_or_else(|| err(line, "expected KEY = VALUE"))?;
        let key = key.trim().to_ascii_lowercase();
        let toks: Vec<&str> = val.split_whitespace().collect();
        let num = |s: &str| parse_value(s).filter(|v| v.is_finite()).ok_or_else(|| err(line, format!("invalid number '{s}'")));
        let arity = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(err(line, format!("{key} takes {n} value(s), got {}", toks.len())))
            }
        };
        match key.as_str() {
            "device" => {
                arity(1)?;
                kind = Some(match toks[0].to_ascii_lowercase().as_str() {
                    "em" => DeviceKind::Em,
                    "eqs" => DeviceKind::Eqs,
                    "mqs" => DeviceKind::Mqs,
                    o => return Err(err(line, format!("unknown device '{o}'"))),
                });
            }
            "cells" => {
                arity(3)?;
                let mut c = [0; 3];
                for a in 0..3 {
                    c[a] = toks[a].parse().map_err(|_| err(line, format!("invalid cell count '{}'", toks[a])))?;
                }
                cells = Some(c);
            }
            "spacing" => {
                arity(3)?;
                for a in 0..3 {
                    spec.spacing[a] = num(toks[a])?;
                }
            }
            "boundary" => {
                spec.boundary = match toks.as_slice() {
                    [s] if s.eq_ignore_ascii_case("shell") => Boundary::dirichlet_shell(),
                    [s] if s.eq_ignore_ascii_case("planar") => Boundary::planar(),
                    six if six.len() == 6 => {
                        let mut faces = [FaceKind::Dirichlet; 6];
                        for (f, s) in six.iter().enumerate() {
                            faces[f] = match s.to_ascii_lowercase().as_str() {
                                "dirichlet" | "d" => FaceKind::Dirichlet,
                                "neumann" | "n" => FaceKind::Neumann,
                                o => return Err(err(line, format!("unknown face kind '{o}'"))),
                            };
                        }
                        Boundary { faces }
                    }
                    _ => return Err(err(line, "boundary is shell, planar, or six face kinds")),
                };
            }
            "eps" => {
                arity(1)?;
                spec.eps = num(toks[0])?;
            }
            "nu" => {
                arity(1)?;
                spec.nu = num(toks[0])?;
            }
            "conductor" => {
                arity(4)?;
                spec.conductors.push((boxed(line, &toks)?, num(toks[3])?));
            }
            "coil" => {
                arity(4)?;
                spec.coils.push((boxed(line, &toks)?, num(toks[3])?));
            }
            "terminal" => {
                arity(3)?;
                spec.terminals.push(boxed(line, &toks)?);
            }
            "allow_large" => {
                arity(1)?;
                spec.allow_large = flag(line, toks[0])?;
            }
            "enforce_support" => {
                arity(1)?;
                spec.enforce_support = flag(line, toks[0])?;
            }
            other => return Err(err(line, format!("unknown key '{other}'"))),
        }
    }
    let last = text.lines().count().max(1);
    spec.kind = kind.ok_or_else(|| err(last, "missing 'device'"))?;
    spec.cells = cells.ok_or_else(|| err(last, "missing 'cells'"))?;
    Ok(spec)
}

fn expand(b: &BoxRange) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for z in b[2].clone() {
        for y in b[1].clone() {
            for x in b[0].clone() {
                out.push([x, y, z]);
            }
        }
    }
    out
}

impl DeviceSpec {
    pub fn grid(&self) -> Result<StaggeredGrid, FitError> {
        StaggeredGrid::new(self.cells, self.spacing)
    }

    pub fn materials(&self, grid: &StaggeredGrid) -> Result<MaterialField, FitError> {
        let mut mat = MaterialField::uniform(grid);
        mat.eps.iter_mut().for_each(|e| *e = self.eps);
        mat.nu.iter_mut().for_each(|n| *n = self.nu);
        let cell = |c: [usize; 3]| -> Result<usize, FitError> {
            if (0..3).any(|a| c[a] >= grid.cells[a]) {
                return Err(FitError::InvalidGrid(format!("cell {c:?} is outside the grid")));
            }
            Ok(grid.cell(c))
        };
        for (b, sigma) in &self.conductors {
            for c in expand(b) {
                mat.set_conductor(cell(c)?, *sigma);
            }
        }
        for (b, tau) in &self.coils {
            for c in expand(b) {
                mat.set_source(cell(c)?, *tau);
            }
        }
        Ok(mat)
    }

    pub fn coil_cells(&self, grid: &StaggeredGrid) -> Vec<usize> {
        self.coils.iter().flat_map(|(b, _)| expand(b)).map(|c| grid.cell(c)).collect()
    }

    pub fn terminal_points(&self) -> Vec<Vec<[usize; 3]>> {
        self.terminals.iter().map(expand).collect()
    }

    pub fn build(&self) -> Result<Device, FitError> {
        let grid = self.grid()?;
        let mat = self.materials(&grid)?;
        match self.kind {
            DeviceKind::Em => build_em_device(&grid, &self.boundary, &mat, &self.terminal_points(), self.allow_large),
            DeviceKind::Eqs => build_eqs_device(&grid, &self.boundary, &mat, &self.terminal_points(), self.allow_large),
            DeviceKind::Mqs => {
                let w = winding_from_coil(&grid, &self.coil_cells(&grid));
                let opts = MqsOptions { enforce_support: self.enforce_support, allow_large: self.allow_large };
                build_mqs_device(&grid, &self.boundary, &mat, &w, &opts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_em_spec() {
        let s = parse_devspec("device = em\ncells = 3 3 3\nterminal = 0 1:2 1:2\nterminal = 3 1:2 1:2\n").unwrap();
        assert_eq!(s.kind, DeviceKind::Em);
        assert_eq!(s.terminal_points()[1].len(), 4);
        assert!(s.build().is_ok());
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_devspec("device = em\n\ncells = 3 3\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_devspec("cells = 3 3 3").is_err());
        assert_eq!(parse_devspec("device = em\nfoo = 1").unwrap_err().line, 2);
    }
}

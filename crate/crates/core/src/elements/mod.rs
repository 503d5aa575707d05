//! Linear descriptor elements
//!
//! ```text
//! K_x x' + K_i i' + K_v v' + L_x x + L_i i + L_v v = f(t)
//! ```
//!
//! with `n_x` internal states and `n_p` ports, the classical constructors,
//! and classification into inductance-, capacitance- and resistance-like
//! elements (see [`classify`]).

mod classify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::{Field, Scalar};
use crate::waveform::Waveform;

pub use classify::{classify, classify_in, ClassifyOptions, ClassificationReport, ElementReduction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementClass {
    #[serde(rename = "inductance-like")]
    InductanceLike,
    #[serde(rename = "capacitance-like")]
    CapacitanceLike,
    #[serde(rename = "resistance-like")]
    ResistanceLike,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl ElementClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementClass::InductanceLike => "inductance-like",
            ElementClass::CapacitanceLike => "capacitance-like",
            ElementClass::ResistanceLike => "resistance-like",
            ElementClass::Unclassified => "unclassified",
        }
    }

    /// Accepts `L`/`C`/`R` and the long names.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l" | "inductance-like" => Some(ElementClass::InductanceLike),
            "c" | "capacitance-like" => Some(ElementClass::CapacitanceLike),
            "r" | "resistance-like" => Some(ElementClass::ResistanceLike),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElementError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorElement<T> {
    pub label: String,
    pub n_x: usize,
    pub n_p: usize,
    pub k_x: Matrix<T>,
    pub k_i: Matrix<T>,
    pub k_v: Matrix<T>,
    pub l_x: Matrix<T>,
    pub l_i: Matrix<T>,
    pub l_v: Matrix<T>,
    /// One waveform per row; empty means zero forcing.
    pub forcing: Vec<Waveform>,
}

fn shape_err(msg: String) -> ElementError {
    ElementError::ShapeMismatch(msg)
}

impl<T: Scalar> DescriptorElement<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: &str,
        k_x: Matrix<T>,
        k_i: Matrix<T>,
        k_v: Matrix<T>,
        l_x: Matrix<T>,
        l_i: Matrix<T>,
        l_v: Matrix<T>,
    ) -> Result<Self, ElementError> {
        let n_x = k_x.cols();
        let n_p = k_i.cols();
        let rows = n_x + n_p;
        let checks = [
            ("K_x", &k_x, n_x),
            ("K_i", &k_i, n_p),
            ("K_v", &k_v, n_p),
            ("L_x", &l_x, n_x),
            ("L_i", &l_i, n_p),
            ("L_v", &l_v, n_p),
        ];
        for (name, m, cols) in checks {
            if m.shape() != (rows, cols) {
                return Err(shape_err(format!("{name} must be {rows}x{cols}, found {:?}", m.shape())));
            }
        }
        Ok(Self { label: label.into(), n_x, n_p, k_x, k_i, k_v, l_x, l_i, l_v, forcing: Vec::new() })
    }

    pub fn rows(&self) -> usize {
        self.n_x + self.n_p
    }

    pub fn with_forcing(mut self, forcing: Vec<Waveform>) -> Result<Self, ElementError> {
        if !forcing.is_empty() && forcing.len() != self.rows() {
            return Err(shape_err(format!("forcing needs {} rows, found {}", self.rows(), forcing.len())));
        }
        self.forcing = forcing;
        Ok(self)
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.iter().any(|w| *w != Waveform::dc(0.0))
    }

    /// `[K_x K_i K_v | L_x L_i L_v]`.
    pub fn stacked(&self) -> Matrix<T> {
        Matrix::hcat(&[&self.k_x, &self.k_i, &self.k_v, &self.l_x, &self.l_i, &self.l_v])
    }

    /// Inverse of [`DescriptorElement::stacked`]; `n_p = cols/2 − rows`.
    pub fn from_stacked(label: &str, m: &Matrix<T>) -> Result<Self, ElementError> {
        let (rows, cols) = m.shape();
        if cols % 2 != 0 || cols / 2 < rows {
            return Err(shape_err(format!("stacked descriptor of shape {rows}x{cols} is not [K | L] with n_x+2n_p columns each")));
        }
        let half = cols / 2;
        let n_p = half - rows;
        if rows < n_p {
            return Err(shape_err(format!("stacked descriptor of shape {rows}x{cols} implies negative state count")));
        }
        let n_x = rows - n_p;
        let b = |c0: usize, w: usize| m.block(0, rows, c0, c0 + w);
        Self::new(
            label,
            b(0, n_x),
            b(n_x, n_p),
            b(n_x + n_p, n_p),
            b(half, n_x),
            b(half + n_x, n_p),
            b(half + n_x + n_p, n_p),
        )
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> DescriptorElement<U> {
        DescriptorElement {
            label: self.label.clone(),
            n_x: self.n_x,
            n_p: self.n_p,
            k_x: self.k_x.map(f),
            k_i: self.k_i.map(f),
            k_v: self.k_v.map(f),
            l_x: self.l_x.map(f),
            l_i: self.l_i.map(f),
            l_v: self.l_v.map(f),
            forcing: self.forcing.clone(),
        }
    }

    /// Left-multiplies every coefficient block (the forcing is left as is,
    /// so only use with unforced elements or re-derive the forcing).
    pub fn mix_rows(&self, t: &Matrix<T>) -> Self {
        let mut out = self.clone();
        for (dst, src) in [
            (&mut out.k_x, &self.k_x),
            (&mut out.k_i, &self.k_i),
            (&mut out.k_v, &self.k_v),
            (&mut out.l_x, &self.l_x),
            (&mut out.l_i, &self.l_i),
            (&mut out.l_v, &self.l_v),
        ] {
            *dst = t.matmul(src);
        }
        out
    }
}

impl DescriptorElement<f64> {
    /// `K·(x', i', v') + L·(x, i, v) − f(t)`.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        &self,
        x: &[f64],
        i: &[f64],
        v: &[f64],
        dx: &[f64],
        di: &[f64],
        dv: &[f64],
        t: f64,
    ) -> Result<Vec<f64>, ElementError> {
        let (nx, np) = (self.n_x, self.n_p);
        for (name, s, n) in [("x", x, nx), ("i", i, np), ("v", v, np), ("x'", dx, nx), ("i'", di, np), ("v'", dv, np)] {
            if s.len() != n {
                return Err(shape_err(format!("{name} has length {}, expected {n}", s.len())));
            }
        }
        let mut r = vec![0.0; self.rows()];
        for (m, s) in [
            (&self.k_x, dx),
            (&self.k_i, di),
            (&self.k_v, dv),
            (&self.l_x, x),
            (&self.l_i, i),
            (&self.l_v, v),
        ] {
            for (acc, y) in r.iter_mut().zip(m.mul_vec(s)) {
                *acc += y;
            }
        }
        for (acc, w) in r.iter_mut().zip(&self.forcing) {
            *acc -= w.value(t);
        }
        Ok(r)
    }
}

fn square<T: Scalar>(name: &str, p: &Matrix<T>) -> Result<usize, ElementError> {
    if !p.is_square() {
        return Err(shape_err(format!("{name} must be square, found {:?}", p.shape())));
    }
    Ok(p.rows())
}

/// `v − R i = 0`.
pub fn make_resistor<T: Field>(r: &Matrix<T>) -> Result<DescriptorElement<T>, ElementError> {
    let n = square("R", r)?;
    let z = Matrix::zeros(n, n);
    let e = Matrix::zeros(n, 0);
    DescriptorElement::new("R", e.clone(), z.clone(), z, e, -r, Matrix::identity(n))
}

/// `v − L i' = 0`.
pub fn make_inductor<T: Field>(l: &Matrix<T>) -> Result<DescriptorElement<T>, ElementError> {
    let n = square("L", l)?;
    let z = Matrix::zeros(n, n);
    let e = Matrix::zeros(n, 0);
    DescriptorElement::new("L", e.clone(), -l, z.clone(), e, z, Matrix::identity(n))
}

/// `C v' − i = 0`.
pub fn make_capacitor<T: Field>(c: &Matrix<T>) -> Result<DescriptorElement<T>, ElementError> {
    let n = square("C", c)?;
    let z = Matrix::zeros(n, n);
    let e = Matrix::zeros(n, 0);
    DescriptorElement::new("C", e.clone(), z.clone(), c.clone(), e, -&Matrix::identity(n), z)
}

/// State `Φ`: rows `v − Φ' = 0` and `Φ − L_d i = 0`.
pub fn make_flux_inductor<T: Field>(ld: &Matrix<T>) -> Result<DescriptorElement<T>, ElementError> {
    let n = square("dPhi/di", ld)?;
    let z = Matrix::<T>::zeros(n, n);
    let id = Matrix::<T>::identity(n);
    DescriptorElement::new(
        "Lflux",
        (-&id).vstack(&z),
        z.vstack(&z),
        z.vstack(&z),
        z.vstack(&id),
        z.vstack(&-ld),
        id.vstack(&z),
    )
}

/// State `q`: rows `i − q' = 0` and `q − C_d v = 0`.
pub fn make_charge_capacitor<T: Field>(cd: &Matrix<T>) -> Result<DescriptorElement<T>, ElementError> {
    let n = square("dq/dv", cd)?;
    let z = Matrix::<T>::zeros(n, n);
    let id = Matrix::<T>::identity(n);
    DescriptorElement::new(
        "Ccharge",
        (-&id).vstack(&z),
        z.vstack(&z),
        z.vstack(&z),
        z.vstack(&id),
        id.vstack(&z),
        z.vstack(&-cd),
    )
}

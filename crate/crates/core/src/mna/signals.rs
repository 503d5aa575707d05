//! Exogenous signal vector `σ(t)`: every source channel together with its
//! first [`ORDERS`]−1 time derivatives, so that differentiating a forcing
//! term is a matrix product with [`SignalSet::shift`].

use crate::matrix::Matrix;
use crate::waveform::{Composite, Waveform};

/// Derivative orders tracked per channel (0..=3).
pub const ORDERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub waveform: Composite,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalSet {
    pub channels: Vec<Channel>,
}

impl SignalSet {
    pub fn push(&mut self, name: String, w: Waveform) -> usize {
        self.channels.push(Channel { name, waveform: w.into() });
        self.channels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.channels.len() * ORDERS
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Column of channel `ch` at derivative `order`.
    pub fn col(ch: usize, order: usize) -> usize {
        ch * ORDERS + order
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.channels
            .iter()
            .flat_map(|c| (0..ORDERS).map(move |k| c.waveform.derivative(t, k)))
            .collect()
    }

    /// `σ' = shift·σ` (the highest tracked order is dropped).
    pub fn shift(&self) -> Matrix<f64> {
        let n = self.len();
        let mut s = Matrix::zeros(n, n);
        for ch in 0..self.channels.len() {
            for k in 0..ORDERS - 1 {
                s[(Self::col(ch, k), Self::col(ch, k + 1))] = 1.0;
            }
        }
        s
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_one_order_up() {
        let mut s = SignalSet::default();
        s.push("a".into(), Waveform::sin(0.0, 1.0, 1.0));
        let t = 0.3;
        let sig = s.eval(t);
        let shifted = s.shift().mul_vec(&sig);
        assert!((shifted[0] - sig[1]).abs() < 1e-15);
        assert!((shifted[2] - sig[3]).abs() < 1e-15);
        assert_eq!(shifted[3], 0.0);
    }
}

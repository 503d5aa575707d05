//! Source waveforms with analytic time derivatives.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Dc { value: f64 },
    /// `offset + amplitude·sin(2π·freq_hz·t + phase)`.
    Sin { offset: f64, amplitude: f64, freq_hz: f64, phase: f64 },
    /// Piecewise linear through `(t, v)` knots, constant outside.
    Pwl { points: Vec<(f64, f64)> },
}

impl Default for Waveform {
    fn default() -> Self {
        Waveform::Dc { value: 0.0 }
    }
}

impl Waveform {
    pub fn dc(value: f64) -> Self {
        Waveform::Dc { value }
    }

    pub fn sin(offset: f64, amplitude: f64, freq_hz: f64) -> Self {
        Waveform::Sin { offset, amplitude, freq_hz, phase: 0.0 }
    }

    /// Radian-frequency sine without offset, `amplitude·sin(ω t)`.
    pub fn sin_omega(amplitude: f64, omega: f64) -> Self {
        Waveform::Sin { offset: 0.0, amplitude, freq_hz: omega / TAU, phase: 0.0 }
    }

    /// Knot times must be strictly increasing.
    pub fn pwl(points: Vec<(f64, f64)>) -> Result<Self, String> {
        if points.is_empty() {
            return Err("pwl needs at least one point".into());
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err("pwl times must be strictly increasing".into());
        }
        Ok(Waveform::Pwl { points })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// `order`-th time derivative. Pwl uses the right-sided slope at
    /// knots and zero for orders ≥ 2 (see [`Waveform::is_knot`]).
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        match self {
            Waveform::Dc { value } => {
                if order == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Waveform::Sin { offset, amplitude, freq_hz, phase } => {
                let w = TAU * freq_hz;
                let arg = w * t + phase + order as f64 * std::f64::consts::FRAC_PI_2;
                let base = amplitude * w.powi(order as i32) * arg.sin();
                if order == 0 {
                    offset + base
                } else {
                    base
                }
            }
            Waveform::Pwl { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if t < first.0 || t >= last.0 || points.len() == 1 {
                    return if order == 0 {
                        if t < first.0 {
                            first.1
                        } else {
                            last.1
                        }
                    } else {
                        0.0
                    };
                }
                let k = points.partition_point(|p| p.0 <= t) - 1;
                let (t0, v0) = points[k];
                let (t1, v1) = points[k + 1];
                let slope = (v1 - v0) / (t1 - t0);
                match order {
                    0 => v0 + slope * (t - t0),
                    1 => slope,
                    _ => 0.0,
                }
            }
        }
    }

    /// True when `t` coincides with a pwl knot, where derivatives of order
    /// ≥ 1 are one-sided and higher ones are distributions.
    pub fn is_knot(&self, t: f64) -> bool {
        match self {
            Waveform::Pwl { points } => points.iter().any(|p| (p.0 - t).abs() <= 1e-12 * p.0.abs().max(1.0)),
            _ => false,
        }
    }

    pub fn add(self, other: Waveform) -> Composite {
        Composite(vec![self, other])
    }
}

/// Sum of waveforms, used to superimpose a probe perturbation on a source.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Composite(pub Vec<Waveform>);

impl Composite {
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        self.0.iter().map(|w| w.derivative(t, order)).sum()
    }
}

impl From<Waveform> for Composite {
    fn from(w: Waveform) -> Self {
        Composite(vec![w])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_derivatives_are_analytic() {
        let w = Waveform::sin(0.5, 2.0, 3.0);
        let om = TAU * 3.0;
        let t = 0.123;
        assert!((w.value(t) - (0.5 + 2.0 * (om * t).sin())).abs() < 1e-14);
        assert!((w.derivative(t, 1) - 2.0 * om * (om * t).cos()).abs() < 1e-12);
        assert!((w.derivative(t, 2) + 2.0 * om * om * (om * t).sin()).abs() < 1e-10);
    }

    #[test]
    fn pwl_pieces() {
        let w = Waveform::pwl(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(w.value(-1.0), 0.0);
        assert_eq!(w.value(0.5), 1.0);
        assert_eq!(w.derivative(0.5, 1), 2.0);
        assert_eq!(w.derivative(2.0, 1), 0.0);
        assert_eq!(w.value(10.0), 2.0);
        assert!(w.is_knot(1.0) && !w.is_knot(0.5));
        assert!(Waveform::pwl(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }
}

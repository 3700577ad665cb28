//! Vector-valued functions sampled on uniform grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::VectorE;

/// Samples of an `E`-valued function on a uniform grid.
///
/// A periodic grid over `(0, length)` holds `t_j = j·length/N`,
/// `j = 0..N−1`; a closed grid over `[0, length]` holds both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub values: Vec<VectorE>,
    pub length: f64,
    pub periodic: bool,
    pub p: f64,
}

impl GridFunction {
    pub fn periodic(values: Vec<VectorE>, p: f64) -> Result<Self> {
        Self::new(values, 2.0 * PI, true, p)
    }

    pub fn new(values: Vec<VectorE>, length: f64, periodic: bool, p: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a grid function needs at least 2 samples"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid(format!("grid length {length} must be positive")));
        }
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("exponent p = {p} must be at least 1")));
        }
        let dim = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Ok(Self {
            values,
            length,
            periodic,
            p,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn step(&self) -> f64 {
        if self.periodic {
            self.length / self.len() as f64
        } else {
            self.length / (self.len() - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len()).map(|j| h * j as f64).collect()
    }

    /// Trapezoid `L^p` norm (spectrally accurate on periodic grids).
    pub fn lp_norm(&self) -> f64 {
        let h = self.step();
        let n = self.len();
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let w = if !self.periodic && (j == 0 || j + 1 == n) {
                    0.5
                } else {
                    1.0
                };
                w * v.norm().powf(self.p)
            })
            .sum();
        (h * sum).powf(1.0 / self.p)
    }

    pub fn map(&self, f: impl Fn(&VectorE) -> VectorE) -> Self {
        Self {
            values: self.values.iter().map(f).collect(),
            ..self.clone()
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&VectorE, &VectorE) -> VectorE) -> Result<Self> {
        if self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
            ..self.clone()
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }
}

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Axis-aligned box `Π [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Config(format!("degenerate box side {i}: [{a}, {b}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[a, b]^dim`.
    pub fn cube(dim: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![a; dim], alloc::vec![b; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Open-box membership.
    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a < *v && *v < *b)
    }

    /// (d-1)-dimensional measure of either face orthogonal to axis `i`.
    pub fn face_measure(&self, i: usize) -> f64 {
        (0..self.dim()).filter(|&j| j != i).map(|j| self.width(j)).product()
    }
}

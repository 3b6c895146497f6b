use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lower: vec![lo; dim], upper: vec![hi; dim] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::Validation(format!(
                "box bounds must be nonempty and of equal length ({} vs {})",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Validation(format!("box is degenerate along axis {i}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Grows every side by `frac` of its width on each end.
    pub fn inflate(&self, frac: f64) -> Self {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let pad = frac * (hi - lo);
                (lo - pad, hi + pad)
            })
            .unzip();
        Self { lower, upper }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
    }

    /// Tensor grid with `per_axis` points per axis, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let per_axis = per_axis.max(2);
        let total = per_axis.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(n);
            for a in 0..n {
                let i = idx % per_axis;
                idx /= per_axis;
                let s = i as f64 / (per_axis - 1) as f64;
                p.push(self.lower[a] + s * (self.upper[a] - self.lower[a]));
            }
            out.push(p);
        }
        out
    }
}

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Uniformly sampled orbit segment `t ↦ Φ_t(x0)`.
///
/// Field derivatives are kept at every sample so the path can be
/// interpolated with cubic Hermite polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    derivs: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn with_capacity(dim: usize, samples: usize) -> Self {
        Self {
            dim,
            times: Vec::with_capacity(samples),
            states: Vec::with_capacity(samples * dim),
            derivs: Vec::with_capacity(samples * dim),
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64], dx: &[f64]) {
        debug_assert!(self.times.last().map_or(true, |last| t > *last));
        self.times.push(t);
        self.states.extend_from_slice(&x[..self.dim]);
        self.derivs.extend_from_slice(&dx[..self.dim]);
    }

    /// Builds a trajectory from raw samples (derivatives are approximated by
    /// finite differences of the states).
    pub fn from_samples(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::Validation("trajectory needs matching, nonempty times and states".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("trajectory times must be strictly increasing".into()));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::Validation("trajectory states must share one dimension".into()));
        }
        let m = times.len();
        let mut traj = Self::with_capacity(dim, m);
        for i in 0..m {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(m - 1));
            let d: Vec<f64> = if a == b {
                vec![0.0; dim]
            } else {
                (0..dim).map(|c| (states[b][c] - states[a][c]) / (times[b] - times[a])).collect()
            };
            traj.push(times[i], &states[i], &d);
        }
        Ok(traj)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn deriv(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    pub fn x0(&self) -> &[f64] {
        self.state(0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Elapsed time covered.
    pub fn span(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Samples with `t ≥ from` (as a new trajectory).
    pub fn tail_from(&self, from: f64) -> Trajectory {
        let start = self.times.partition_point(|t| *t < from).min(self.len() - 1);
        self.slice(start, self.len())
    }

    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        let d = self.dim;
        Trajectory {
            dim: d,
            times: self.times[start..end].to_vec(),
            states: self.states[start * d..end * d].to_vec(),
            derivs: self.derivs[start * d..end * d].to_vec(),
        }
    }

    /// Appends `other`, whose first sample must coincide with our last.
    pub(crate) fn append(&mut self, other: &Trajectory) {
        let skip = usize::from(other.start_time() <= self.end_time());
        for i in skip..other.len() {
            self.push(other.time(i), other.state(i), other.deriv(i));
        }
    }

    /// Cubic Hermite interpolation at time `t` (clamped to the covered span).
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let m = self.len();
        if m == 1 || t <= self.times[0] {
            out.copy_from_slice(self.state(0));
            return;
        }
        if t >= self.end_time() {
            out.copy_from_slice(self.final_state());
            return;
        }
        let i = self.times.partition_point(|s| *s <= t).saturating_sub(1).min(m - 2);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let (x0, x1, d0, d1) = (self.state(i), self.state(i + 1), self.deriv(i), self.deriv(i + 1));
        for c in 0..self.dim {
            out[c] = h00 * x0[c] + h10 * h * d0[c] + h01 * x1[c] + h11 * h * d1[c];
        }
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (i, x) in self.states().enumerate() {
            let mut row = vec![self.times[i].to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Flow Jacobians `M(t) = D_{x0} Φ_t` on a sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrixPath {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
}

impl FundamentalMatrixPath {
    pub fn final_matrix(&self) -> &DMatrix<f64> {
        self.matrices.last().unwrap()
    }

    /// Matrix at the sample closest to `t`.
    pub fn at(&self, t: f64) -> &DMatrix<f64> {
        let i = self.times.partition_point(|s| *s < t).min(self.times.len() - 1);
        let j = if i > 0 && (t - self.times[i - 1]).abs() < (self.times[i] - t).abs() { i - 1 } else { i };
        &self.matrices[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_is_exact_for_cubics() {
        let times: Vec<f64> = (0..5).map(|i| i as f64 * 0.5).collect();
        let mut traj = Trajectory::with_capacity(1, 5);
        for &t in &times {
            traj.push(t, &[t * t * t - t], &[3.0 * t * t - 1.0]);
        }
        let mut out = [0.0];
        for &t in &[0.1, 0.77, 1.3, 1.99] {
            traj.interpolate(t, &mut out);
            assert!((out[0] - (t * t * t - t)).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let traj = Trajectory::from_samples(vec![0.0, 0.5], vec![vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x1,x2\n0,1,2\n0.5,3,4.5\n");
    }

    #[test]
    fn from_samples_rejects_unordered_times() {
        assert!(Trajectory::from_samples(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn tail_selection() {
        let times: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let states = times.iter().map(|t| vec![*t]).collect();
        let traj = Trajectory::from_samples(times, states).unwrap();
        let tail = traj.tail_from(7.5);
        assert_eq!(tail.times(), &[8.0, 9.0, 10.0]);
    }
}

//! Orbit classification from trajectory data: pseudo-ordered orbits and
//! the shape of the ω-limit set.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cone::QuadraticCone;
use crate::dynamics::{self, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::VectorField;

/// Two distinct ordered points `Φ_{t1}(x0) − Φ_{t2}(x0) ∈ C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t1: f64,
    pub t2: f64,
    pub form_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaClass {
    ConvergesToEquilibrium { point: Vec<f64> },
    PeriodicOrbit { period: f64 },
    ContainsEquilibrium { point: Vec<f64> },
    Unresolved { note: Option<String> },
}

impl OmegaClass {
    pub fn label(&self) -> &'static str {
        match self {
            OmegaClass::ConvergesToEquilibrium { .. } => "ConvergesToEquilibrium",
            OmegaClass::PeriodicOrbit { .. } => "PeriodicOrbit",
            OmegaClass::ContainsEquilibrium { .. } => "ContainsEquilibrium",
            OmegaClass::Unresolved { .. } => "Unresolved",
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            OmegaClass::PeriodicOrbit { period } => Some(*period),
            _ => None,
        }
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self, OmegaClass::Unresolved { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub x0: Vec<f64>,
    pub pseudo_order_witness: Option<Witness>,
    pub omega_class: OmegaClass,
    #[serde(rename = "in_Q")]
    pub in_q: bool,
    #[serde(rename = "in_S")]
    pub in_s: bool,
    pub horizon_used: f64,
    /// Smallest distance from the tail window to any known equilibrium
    /// (`None` when none are known or the orbit failed to integrate).
    pub tail_min_eq_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    /// Minimum separation of witness points; `None` means `1e-4 · diam(box)`
    /// when a box is known and `1e-4` otherwise.
    pub delta_sep: Option<f64>,
    /// Witness margin: `form ≤ −order_tol · ‖diff‖²`.
    pub order_tol: f64,
    pub eps_conv: f64,
    pub eps_eq: f64,
    pub transient: f64,
    pub tail_window: f64,
    pub rec_tol: f64,
    pub min_period: f64,
    pub max_scan_points: usize,
    pub extend_once: bool,
    pub integrator: IntegratorConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            delta_sep: None,
            order_tol: 1e-6,
            eps_conv: 1e-5,
            eps_eq: 1e-3,
            transient: 50.0,
            tail_window: 50.0,
            rec_tol: 1e-2,
            min_period: 0.5,
            max_scan_points: 2000,
            extend_once: true,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl ClassifierParams {
    pub fn horizon(&self) -> f64 {
        self.transient + self.tail_window
    }

    /// Fills in `delta_sep` from the box diameter if unset.
    pub fn for_box(mut self, bounds: &crate::BoxDomain) -> Self {
        self.delta_sep.get_or_insert(1e-4 * bounds.diameter());
        self
    }

    pub fn effective_delta_sep(&self) -> f64 {
        self.delta_sep.unwrap_or(1e-4)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("order_tol", self.order_tol),
            ("eps_conv", self.eps_conv),
            ("eps_eq", self.eps_eq),
            ("tail_window", self.tail_window),
            ("rec_tol", self.rec_tol),
            ("min_period", self.min_period),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("classifier.{name} must be positive, got {v}")));
            }
        }
        if !(self.transient >= 0.0) {
            return Err(Error::Validation(format!("classifier.transient must be non-negative, got {}", self.transient)));
        }
        if let Some(d) = self.delta_sep {
            if !(d > 0.0) {
                return Err(Error::Validation(format!("classifier.delta_sep must be positive, got {d}")));
            }
        }
        if self.max_scan_points < 2 {
            return Err(Error::Validation("classifier.max_scan_points must be at least 2".into()));
        }
        self.integrator.validate()
    }
}

/// Searches the orbit samples for two points at distance `> delta_sep` whose
/// difference has `form ≤ −tol · ‖diff‖²`.
///
/// The scan runs over at most `max_points` evenly subsampled points in
/// `i < j` order; the first qualifying pair is refined at full resolution
/// within one stride, keeping the most negative normalized form.
pub fn detect_pseudo_ordered(traj: &Trajectory, cone: &QuadraticCone, delta_sep: f64, tol: f64) -> Option<Witness> {
    detect_pseudo_ordered_with(traj, cone, delta_sep, tol, ClassifierParams::default().max_scan_points)
}

pub fn detect_pseudo_ordered_with(
    traj: &Trajectory,
    cone: &QuadraticCone,
    delta_sep: f64,
    tol: f64,
    max_points: usize,
) -> Option<Witness> {
    let m = traj.len();
    if m < 2 || traj.dim() != cone.dim() {
        return None;
    }
    let stride = m.div_ceil(max_points.max(2)).max(1);
    let idx: Vec<usize> = (0..m).step_by(stride).collect();
    let n = traj.dim();
    let mut diff = vec![0.0; n];
    let score = |i: usize, j: usize, diff: &mut [f64]| -> Option<f64> {
        let (a, b) = (traj.state(i), traj.state(j));
        let mut sq = 0.0;
        for c in 0..n {
            diff[c] = a[c] - b[c];
            sq += diff[c] * diff[c];
        }
        if sq.sqrt() <= delta_sep {
            return None;
        }
        let f = cone.form(diff);
        (f <= -tol * sq).then_some(f / sq)
    };
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            if score(i, j, &mut diff).is_some() {
                return Some(refine(traj, cone, i, j, stride, &score, &mut diff));
            }
        }
    }
    None
}

fn refine(
    traj: &Trajectory,
    cone: &QuadraticCone,
    i: usize,
    j: usize,
    stride: usize,
    score: &dyn Fn(usize, usize, &mut [f64]) -> Option<f64>,
    diff: &mut [f64],
) -> Witness {
    let m = traj.len();
    let (mut best, mut best_score) = ((i, j), score(i, j, diff).unwrap());
    if stride > 1 {
        let half = stride / 2;
        for a in i.saturating_sub(half)..=(i + half).min(m - 1) {
            for b in j.saturating_sub(half)..=(j + half).min(m - 1) {
                if a >= b {
                    continue;
                }
                if let Some(s) = score(a, b, diff) {
                    if s < best_score {
                        best = (a, b);
                        best_score = s;
                    }
                }
            }
        }
    }
    let (a, b) = best;
    let d: Vec<f64> = traj.state(a).iter().zip(traj.state(b)).map(|(p, q)| p - q).collect();
    Witness { t1: traj.time(a), t2: traj.time(b), form_value: cone.form(&d) }
}

/// Closest-return period estimate on a tail segment.
///
/// The reference point is the first tail sample. A return is a local minimum
/// of the distance to it that falls below `rec_tol`, occurs at least
/// `min_period` after the previous return, and follows an excursion out of the
/// `rec_tol` ball. Two consecutive return intervals must agree within 10%;
/// each return time is refined by a parabola through the squared distances.
pub fn estimate_period(tail: &Trajectory, rec_tol: f64, min_period: f64) -> Option<f64> {
    if tail.len() < 3 || !(rec_tol > 0.0) || !(min_period > 0.0) {
        return None;
    }
    let x_ref = tail.state(0).to_vec();
    let d2: Vec<f64> = tail
        .states()
        .map(|x| x.iter().zip(&x_ref).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let t_ref = tail.time(0);
    let first = next_return(tail, &d2, 1, t_ref + min_period, rec_tol)?;
    let t1 = refine_minimum(tail, &d2, first);
    let second = next_return(tail, &d2, first + 1, t1 + min_period, rec_tol)?;
    let t2 = refine_minimum(tail, &d2, second);
    let (p1, p2) = (t1 - t_ref, t2 - t1);
    ((p2 - p1).abs() <= 0.1 * p1).then_some(0.5 * (p1 + p2))
}

fn next_return(tail: &Trajectory, d2: &[f64], from: usize, not_before: f64, rec_tol: f64) -> Option<usize> {
    let tol2 = rec_tol * rec_tol;
    let mut left = false;
    for i in from..d2.len() - 1 {
        if d2[i] > tol2 {
            left = true;
            continue;
        }
        if left && tail.time(i) >= not_before && d2[i] <= d2[i - 1] && d2[i] <= d2[i + 1] {
            return Some(i);
        }
    }
    None
}

fn refine_minimum(tail: &Trajectory, d2: &[f64], i: usize) -> f64 {
    let (a, b, c) = (d2[i - 1], d2[i], d2[i + 1]);
    let h = tail.time(i + 1) - tail.time(i);
    let denom = a - 2.0 * b + c;
    if denom <= 0.0 {
        return tail.time(i);
    }
    let shift = 0.5 * (a - c) / denom;
    tail.time(i) + shift.clamp(-1.0, 1.0) * h
}

/// Outcome of [`classify_omega`] together with the trajectory it was decided on.
#[derive(Debug, Clone)]
pub struct OmegaOutcome {
    pub class: OmegaClass,
    pub horizon_used: f64,
    pub tail_min_eq_distance: Option<f64>,
    pub trajectory: Trajectory,
}

/// Decision tree on the tail window, with one horizon doubling if the result
/// is unresolved.
pub fn classify_omega(
    model: &dyn VectorField,
    traj: Trajectory,
    equilibria: &[Vec<f64>],
    params: &ClassifierParams,
) -> Result<OmegaOutcome> {
    let needed = params.horizon();
    if traj.span() + 1e-9 < needed {
        return Err(Error::HorizonTooShort { needed, available: traj.span() });
    }
    let (class, dist) = decide(&traj, equilibria, params);
    if !class.is_unresolved() || !params.extend_once {
        return Ok(OmegaOutcome { class, horizon_used: traj.span(), tail_min_eq_distance: dist, trajectory: traj });
    }
    let extension = match dynamics::integrate_from(
        model,
        traj.final_state(),
        traj.end_time(),
        traj.end_time() + traj.span(),
        &params.integrator,
    ) {
        Ok(ext) => ext,
        Err(e) => {
            let class = OmegaClass::Unresolved { note: Some(format!("horizon extension failed: {e}")) };
            return Ok(OmegaOutcome { class, horizon_used: traj.span(), tail_min_eq_distance: dist, trajectory: traj });
        }
    };
    let mut traj = traj;
    traj.append(&extension);
    let (class, dist) = decide(&traj, equilibria, params);
    Ok(OmegaOutcome { class, horizon_used: traj.span(), tail_min_eq_distance: dist, trajectory: traj })
}

fn decide(traj: &Trajectory, equilibria: &[Vec<f64>], params: &ClassifierParams) -> (OmegaClass, Option<f64>) {
    let tail = traj.tail_from(traj.end_time() - params.tail_window);
    let n = traj.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for x in tail.states() {
        for c in 0..n {
            lo[c] = lo[c].min(x[c]);
            hi[c] = hi[c].max(x[c]);
        }
    }
    let diameter = linalg::distance(&lo, &hi);
    let (class, min_dist) = decide_tail(&tail, diameter, equilibria, params);
    (class, min_dist.is_finite().then_some(min_dist))
}

fn decide_tail(tail: &Trajectory, diameter: f64, equilibria: &[Vec<f64>], params: &ClassifierParams) -> (OmegaClass, f64) {

    let mut min_dist = f64::INFINITY;
    let mut nearest: Option<&Vec<f64>> = None;
    let mut worst_dist = vec![0.0f64; equilibria.len()];
    for x in tail.states() {
        for (e, eq) in equilibria.iter().enumerate() {
            let d = linalg::distance(x, eq);
            worst_dist[e] = worst_dist[e].max(d);
            if d < min_dist {
                min_dist = d;
                nearest = Some(eq);
            }
        }
    }

    if diameter < params.eps_conv {
        if let Some(e) = worst_dist.iter().position(|d| *d < params.eps_conv) {
            return (OmegaClass::ConvergesToEquilibrium { point: equilibria[e].clone() }, min_dist);
        }
    }
    if min_dist < params.eps_eq {
        return (OmegaClass::ContainsEquilibrium { point: nearest.unwrap().clone() }, min_dist);
    }
    if let Some(period) = estimate_period(tail, params.rec_tol, params.min_period) {
        return (OmegaClass::PeriodicOrbit { period }, min_dist);
    }
    let note = if diameter < params.eps_conv {
        "tail converged away from every known equilibrium"
    } else {
        "no convergence, equilibrium approach, or periodic return detected"
    };
    (OmegaClass::Unresolved { note: Some(note.into()) }, min_dist)
}

/// Integrates `x0`, detects a pseudo-order witness, and classifies `ω(x0)`.
/// Integration failures become `Unresolved` records carrying the error.
pub fn classify_orbit(
    model: &dyn VectorField,
    cone: &QuadraticCone,
    x0: &[f64],
    equilibria: &[Vec<f64>],
    params: &ClassifierParams,
) -> Result<OrbitRecord> {
    crate::error::check_dim(model.dim(), x0.len())?;
    crate::error::check_dim(cone.dim(), x0.len())?;
    params.validate()?;
    let failed = |e: Error| OrbitRecord {
        x0: x0.to_vec(),
        pseudo_order_witness: None,
        omega_class: OmegaClass::Unresolved { note: Some(e.to_string()) },
        in_q: false,
        in_s: false,
        horizon_used: 0.0,
        tail_min_eq_distance: None,
    };
    let traj = match dynamics::integrate(model, x0, params.horizon(), &params.integrator) {
        Ok(t) => t,
        Err(e) if e.is_numerical() => return Ok(failed(e)),
        Err(e) => return Err(e),
    };
    let outcome = classify_omega(model, traj, equilibria, params)?;
    let witness =
        detect_pseudo_ordered_with(&outcome.trajectory, cone, params.effective_delta_sep(), params.order_tol, params.max_scan_points);
    let in_s = matches!(outcome.class, OmegaClass::ConvergesToEquilibrium { .. });
    Ok(OrbitRecord {
        x0: x0.to_vec(),
        in_q: witness.is_some(),
        pseudo_order_witness: witness,
        omega_class: outcome.class,
        in_s,
        horizon_used: outcome.horizon_used,
        tail_min_eq_distance: outcome.tail_min_eq_distance,
    })
}

/// CSV header for [`OrbitRecord`] rows in dimension `n`.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    h.extend(
        ["in_Q", "in_S", "omega_class", "period", "witness_t1", "witness_t2", "horizon_used"].map(String::from),
    );
    h
}

impl OrbitRecord {
    pub fn csv_row(&self) -> Vec<String> {
        let mut row: Vec<String> = self.x0.iter().map(|v| v.to_string()).collect();
        row.push(self.in_q.to_string());
        row.push(self.in_s.to_string());
        row.push(self.omega_class.label().to_string());
        row.push(self.omega_class.period().map(|p| p.to_string()).unwrap_or_default());
        row.push(self.pseudo_order_witness.map(|w| w.t1.to_string()).unwrap_or_default());
        row.push(self.pseudo_order_witness.map(|w| w.t2.to_string()).unwrap_or_default());
        row.push(self.horizon_used.to_string());
        row
    }
}

pub fn write_records_csv<W: Write>(records: &[OrbitRecord], dim: usize, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(dim))?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()
}

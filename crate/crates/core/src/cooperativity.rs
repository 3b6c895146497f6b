//! Cone-cooperativity checks for a model and a quadratic cone.
//!
//! Three independent views of the same property:
//!
//! * the pointwise matrix inequality `S(x) = Q·DF(x) + DF(x)ᵀ·Q + λ(x)·Q < 0`
//!   on a finite point set ([`smith_lmi_check`]);
//! * invariance of the cone under the fundamental matrix `X(t)` of
//!   `Ẋ = Q^{ij}(t) X`, where `Q^{ij}(t)` averages `DF` over the segment
//!   between two orbits ([`fundamental_cone_invariance`]);
//! * direct simulation of ordered pairs of the nonlinear flow
//!   ([`empirical_monotonicity`]).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Membership, OrderRelation, QuadraticCone};
use crate::domain::BoxDomain;
use crate::dynamics::{self, IntegratorConfig};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{jacobian, VectorField};
use crate::seed;

pub const DEFAULT_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiReport {
    pub points_checked: usize,
    /// Largest eigenvalue of `S(x)` over the point set.
    pub worst_eigenvalue: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
    pub margin: f64,
}

/// `S(x) = Q·DF(x) + DF(x)ᵀ·Q + λ·Q`, symmetrized.
pub fn smith_matrix(cone: &QuadraticCone, model: &dyn VectorField, lambda: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(cone.dim(), model.dim())?;
    check_dim(model.dim(), x.len())?;
    let df = jacobian(model, x);
    if df.iter().any(|v| !v.is_finite()) {
        return Err(Error::JacobianUnavailable(x.to_vec()));
    }
    let q = cone.q_matrix();
    let s = q * &df + df.transpose() * q + q * lambda;
    Ok(linalg::symmetrize(&s))
}

pub fn smith_lmi_check(
    cone: &QuadraticCone,
    model: &dyn VectorField,
    lambda_fn: &(dyn Fn(&[f64]) -> f64 + Sync),
    points: &[Vec<f64>],
    margin: f64,
) -> Result<LmiReport> {
    if points.is_empty() {
        return Err(Error::Validation("smith_lmi_check needs at least one point".into()));
    }
    if !(margin >= 0.0) {
        return Err(Error::Validation(format!("margin must be non-negative, got {margin}")));
    }
    let eigs: Vec<f64> = points
        .par_iter()
        .map(|x| smith_matrix(cone, model, lambda_fn(x), x).map(|s| linalg::largest_symmetric_eigenvalue(&s)))
        .collect::<Result<_>>()?;
    // first index of the maximum keeps the report independent of scheduling
    let (worst_idx, worst) = eigs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
    Ok(LmiReport {
        points_checked: points.len(),
        worst_eigenvalue: worst,
        worst_point: points[worst_idx].clone(),
        pass: worst < -margin,
        margin,
    })
}

/// Smallest constant `λ` in `[lo, hi]` passing [`smith_lmi_check`], found by
/// bisection. `hi` must pass; returns `None` otherwise.
pub fn minimal_constant_lambda(
    cone: &QuadraticCone,
    model: &dyn VectorField,
    points: &[Vec<f64>],
    margin: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let passes = |l: f64| smith_lmi_check(cone, model, &move |_: &[f64]| l, points, margin).map(|r| r.pass);
    if !passes(hi)? {
        return Ok(None);
    }
    if passes(lo)? {
        return Ok(Some(lo));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `∫₀¹ DF(τ a + (1 − τ) b) dτ` by Gauss–Legendre quadrature.
pub fn averaged_jacobian_between(model: &dyn VectorField, a: &[f64], b: &[f64], nodes: usize) -> Result<DMatrix<f64>> {
    let n = model.dim();
    check_dim(n, a.len())?;
    check_dim(n, b.len())?;
    if nodes < 2 {
        return Err(Error::Validation(format!("need at least 2 quadrature nodes, got {nodes}")));
    }
    let (taus, weights) = linalg::gauss_legendre(nodes);
    let mut acc = DMatrix::zeros(n, n);
    let mut p = vec![0.0; n];
    for (tau, w) in taus.iter().zip(&weights) {
        for c in 0..n {
            p[c] = tau * a[c] + (1.0 - tau) * b[c];
        }
        acc += jacobian(model, &p) * *w;
    }
    Ok(acc)
}

/// `Q^{ij}(t)`: the averaged Jacobian between `Φ_t(x_i)` and `Φ_t(x_j)`.
pub fn averaged_jacobian(
    model: &dyn VectorField,
    x_i: &[f64],
    x_j: &[f64],
    t: f64,
    nodes: usize,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let a = dynamics::flow_map(model, x_i, t, cfg)?;
    let b = dynamics::flow_map(model, x_j, t, cfg)?;
    averaged_jacobian_between(model, &a, &b, nodes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceViolation {
    pub t: f64,
    /// Boundary vector at t = 0.
    pub v: Vec<f64>,
    /// `(X(t) v)ᵀ Q (X(t) v)`.
    pub form_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub pair: (Vec<f64>, Vec<f64>),
    pub horizon: f64,
    pub t_skip: f64,
    pub boundary_samples: usize,
    pub checkpoints: usize,
    pub violations: Vec<InvarianceViolation>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceOptions {
    pub quadrature_nodes: usize,
    /// Checks start after this time; `None` means `1e-3 · horizon`.
    pub t_skip: Option<f64>,
    pub integrator: IntegratorConfig,
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        Self { quadrature_nodes: 4, t_skip: None, integrator: IntegratorConfig::default() }
    }
}

/// Integrates `Ẋ = Q^{ij}(t) X`, `X(0) = I`, and checks that every sampled
/// boundary vector `v` satisfies `X(t) v ∈ Int C` at each checkpoint after
/// `t_skip`.
#[allow(clippy::too_many_arguments)]
pub fn fundamental_cone_invariance(
    cone: &QuadraticCone,
    model: &dyn VectorField,
    x_i: &[f64],
    x_j: &[f64],
    horizon: f64,
    m_boundary: usize,
    rng_seed: u64,
    opts: &InvarianceOptions,
) -> Result<InvarianceReport> {
    let n = model.dim();
    check_dim(cone.dim(), n)?;
    if !(horizon > 0.0) {
        return Err(Error::Validation(format!("horizon must be positive, got {horizon}")));
    }
    if m_boundary == 0 {
        return Err(Error::Validation("need at least one boundary sample".into()));
    }
    let cfg = &opts.integrator;
    let t_skip = opts.t_skip.unwrap_or(1e-3 * horizon);
    let traj_i = dynamics::integrate(model, x_i, horizon, cfg)?;
    let traj_j = dynamics::integrate(model, x_j, horizon, cfg)?;
    let samples = cone.sample_boundary(m_boundary, rng_seed);

    let (taus, weights) = linalg::gauss_legendre(opts.quadrature_nodes.max(2));
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut p = vec![0.0; n];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        traj_i.interpolate(t, &mut a);
        traj_j.interpolate(t, &mut b);
        let mut q = DMatrix::zeros(n, n);
        for (tau, w) in taus.iter().zip(&weights) {
            for c in 0..n {
                p[c] = tau * a[c] + (1.0 - tau) * b[c];
            }
            q += jacobian(model, &p) * *w;
        }
        let x = DMatrix::from_column_slice(n, n, y);
        dy.copy_from_slice((q * x).as_slice());
    };

    let mut violations = Vec::new();
    let mut checkpoints = 0usize;
    let identity = DMatrix::<f64>::identity(n, n);
    let sample_vecs: Vec<DVector<f64>> = samples.iter().map(|v| DVector::from_column_slice(v)).collect();
    dynamics::solve(rhs, 0.0, identity.as_slice(), horizon, cfg, cfg.sample_dt, n * n, |t, y, _| {
        if t <= t_skip {
            return;
        }
        checkpoints += 1;
        let x = DMatrix::from_column_slice(n, n, y);
        for (v, raw) in sample_vecs.iter().zip(&samples) {
            let image = &x * v;
            let class = cone.classify_unchecked(image.as_slice(), cone.tol());
            if class.class != Membership::Interior {
                violations.push(InvarianceViolation { t, v: raw.clone(), form_value: class.form_value });
            }
        }
    })?;

    Ok(InvarianceReport {
        pair: (x_i.to_vec(), x_j.to_vec()),
        horizon,
        t_skip,
        boundary_samples: m_boundary,
        checkpoints,
        pass: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub form_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs_requested: usize,
    pub pairs_tested: usize,
    /// Pairs with at least one unordered checkpoint.
    pub violations: usize,
    pub first_violation: Option<MonotonicityViolation>,
    /// Pairs whose integration failed (blow-up or step underflow).
    pub integration_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicityOptions {
    /// Relative classification tolerance for the difference `Φ_t(y) − Φ_t(x)`.
    pub tol: f64,
    /// Differences shorter than this are below integration resolution and skipped.
    pub resolution_floor: f64,
    /// Initial offset `‖y − x‖` is uniform in `(0, offset_fraction · diam(box)]`.
    pub offset_fraction: f64,
    pub checkpoint_dt: f64,
    pub integrator: IntegratorConfig,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            resolution_floor: 1e-8,
            offset_fraction: 0.05,
            checkpoint_dt: 0.05,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Samples ordered pairs `y = x + r v` with `v ∈ C`, integrates both, and
/// flags pairs that become unordered.
pub fn empirical_monotonicity(
    cone: &QuadraticCone,
    model: &dyn VectorField,
    n_pairs: usize,
    horizon: f64,
    rng_seed: u64,
    bounds: &BoxDomain,
    opts: &MonotonicityOptions,
) -> Result<MonotonicityReport> {
    check_dim(cone.dim(), model.dim())?;
    check_dim(model.dim(), bounds.dim())?;
    if n_pairs == 0 {
        return Err(Error::Validation("need at least one pair".into()));
    }
    let cfg = opts.integrator.with_sample_dt(opts.checkpoint_dt);
    let max_offset = opts.offset_fraction * bounds.diameter();
    let outcomes: Vec<PairOutcome> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::item_rng(rng_seed, i as u64);
            let x = bounds.sample(&mut rng);
            let v = cone.cone_vector(&mut rng);
            let r = max_offset * (1.0 - rand::Rng::random::<f64>(&mut rng));
            let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + r * b).collect();
            check_pair(cone, model, x, y, horizon, &cfg, opts)
        })
        .collect();

    let mut report = MonotonicityReport {
        pairs_requested: n_pairs,
        pairs_tested: 0,
        violations: 0,
        first_violation: None,
        integration_failures: 0,
    };
    for o in outcomes {
        match o {
            PairOutcome::Ok => report.pairs_tested += 1,
            PairOutcome::Violation(v) => {
                report.pairs_tested += 1;
                report.violations += 1;
                report.first_violation.get_or_insert(v);
            }
            PairOutcome::Failed => report.integration_failures += 1,
        }
    }
    Ok(report)
}

enum PairOutcome {
    Ok,
    Violation(MonotonicityViolation),
    Failed,
}

fn check_pair(
    cone: &QuadraticCone,
    model: &dyn VectorField,
    x: Vec<f64>,
    y: Vec<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
    opts: &MonotonicityOptions,
) -> PairOutcome {
    let (tx, ty) = match (dynamics::integrate(model, &x, horizon, cfg), dynamics::integrate(model, &y, horizon, cfg)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return PairOutcome::Failed,
    };
    for i in 0..tx.len().min(ty.len()) {
        let (a, b) = (tx.state(i), ty.state(i));
        if linalg::distance(a, b) < opts.resolution_floor {
            continue;
        }
        if cone.order_relation_with_tol(b, a, opts.tol) == Ok(OrderRelation::Unordered) {
            let diff: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
            return PairOutcome::Violation(MonotonicityViolation { x, y, t: tx.time(i), form_value: cone.form(&diff) });
        }
    }
    PairOutcome::Ok
}

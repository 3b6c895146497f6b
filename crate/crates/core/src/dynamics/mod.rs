//! Flow `Φ_t` and variational flow `D_x Φ_t` of vector-field models,
//! equilibria, and a dissipativity heuristic.

mod solver;
mod trajectory;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use solver::IntegratorConfig;
pub(crate) use solver::solve;
pub use trajectory::{FundamentalMatrixPath, Trajectory};

use crate::domain::BoxDomain;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{jacobian, VectorField};
use crate::seed;

/// Samples `Φ_t(x0)` for `t ∈ [0, t_end]` every `cfg.sample_dt`.
pub fn integrate(model: &dyn VectorField, x0: &[f64], t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_from(model, x0, 0.0, t_end, cfg)
}

pub(crate) fn integrate_from(
    model: &dyn VectorField,
    x0: &[f64],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_dim(model.dim(), x0.len())?;
    cfg.validate()?;
    if !(t_end > t0) {
        return Err(Error::Validation(format!("t_end must exceed the start time, got {t_end}")));
    }
    let samples = ((t_end - t0) / cfg.sample_dt).ceil() as usize + 2;
    let mut traj = Trajectory::with_capacity(model.dim(), samples);
    solve(
        |_, y, dy| model.eval(y, dy),
        t0,
        x0,
        t_end,
        cfg,
        cfg.sample_dt,
        x0.len(),
        |t, y, dy| traj.push(t, y, dy),
    )?;
    Ok(traj)
}

/// `Φ_t(x0)` without storing intermediate samples.
pub fn flow_map(model: &dyn VectorField, x0: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    check_dim(model.dim(), x0.len())?;
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    if t < 0.0 {
        return flow_map_backward(model, x0, -t, cfg);
    }
    solve(|_, y, dy| model.eval(y, dy), 0.0, x0, t, cfg, t, x0.len(), |_, _, _| {})
}

/// `Φ_{-duration}(x0)`, integrating the reversed field.
pub fn flow_map_backward(model: &dyn VectorField, x0: &[f64], duration: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    check_dim(model.dim(), x0.len())?;
    solve(
        |_, y, dy| {
            model.eval(y, dy);
            dy.iter_mut().for_each(|v| *v = -*v);
        },
        0.0,
        x0,
        duration,
        cfg,
        duration,
        x0.len(),
        |_, _, _| {},
    )
}

/// Co-integrates `ẋ = F(x)` and `Ṁ = DF(x) M`, `M(0) = I`.
pub fn integrate_variational(
    model: &dyn VectorField,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, FundamentalMatrixPath)> {
    let n = model.dim();
    check_dim(n, x0.len())?;
    cfg.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::Validation(format!("t_end must be positive, got {t_end}")));
    }
    let frame = DMatrix::identity(n, n);
    let mut traj = Trajectory::with_capacity(n, (t_end / cfg.sample_dt).ceil() as usize + 2);
    let mut path = FundamentalMatrixPath { times: Vec::new(), matrices: Vec::new() };
    evolve_frame(model, x0, &frame, 0.0, t_end, cfg, cfg.sample_dt, |t, x, dx, m| {
        traj.push(t, x, dx);
        path.times.push(t);
        path.matrices.push(m);
    })?;
    Ok((traj, path))
}

/// Pushes the n×j `frame` along the orbit of `x0` with the variational
/// equation. Returns `(Φ_t(x0), M(t)·frame)`.
pub(crate) fn evolve_frame<O>(
    model: &dyn VectorField,
    x0: &[f64],
    frame: &DMatrix<f64>,
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    sample_dt: f64,
    mut observe: O,
) -> Result<(Vec<f64>, DMatrix<f64>)>
where
    O: FnMut(f64, &[f64], &[f64], DMatrix<f64>),
{
    let n = model.dim();
    let j = frame.ncols();
    let mut y0 = Vec::with_capacity(n + n * j);
    y0.extend_from_slice(x0);
    y0.extend(frame.iter().copied());
    let y = solve(
        |_, y, dy| {
            let (x, w) = y.split_at(n);
            let (dx, dw) = dy.split_at_mut(n);
            model.eval(x, dx);
            let jac = jacobian(model, x);
            for c in 0..j {
                let col = &w[c * n..(c + 1) * n];
                for r in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += jac[(r, k)] * col[k];
                    }
                    dw[c * n + r] = acc;
                }
            }
        },
        t0,
        &y0,
        t_end,
        cfg,
        sample_dt,
        n,
        |t, y, dy| observe(t, &y[..n], &dy[..n], DMatrix::from_column_slice(n, j, &y[n..])),
    )?;
    Ok((y[..n].to_vec(), DMatrix::from_column_slice(n, j, &y[n..])))
}

/// Equilibria found by Newton's method from a grid of seeds.
pub fn find_equilibria(model: &dyn VectorField, bounds: &BoxDomain, grid_per_axis: usize, newton_tol: f64) -> Vec<Vec<f64>> {
    let n = model.dim();
    if bounds.dim() != n || grid_per_axis < 2 {
        return Vec::new();
    }
    let accept_box = bounds.inflate(0.01);
    let merge_dist = 1e-6 * (1.0 + bounds.diameter());
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for seed_point in bounds.grid(grid_per_axis) {
        if let Some(root) = newton(model, &seed_point, newton_tol) {
            if accept_box.contains(&root) && !roots.iter().any(|r| linalg::distance(r, &root) < merge_dist) {
                roots.push(root);
            }
        }
    }
    roots.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}

fn newton(model: &dyn VectorField, start: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = model.dim();
    let mut x = start.to_vec();
    let mut f = vec![0.0; n];
    model.eval(&x, &mut f);
    let mut res = linalg::norm(&f);
    for _ in 0..100 {
        if res <= tol {
            // polish once more so the returned point sits well inside tolerance
            if let Some(step) = newton_step(model, &x, &f) {
                let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
                let mut fc = vec![0.0; n];
                model.eval(&cand, &mut fc);
                if linalg::norm(&fc) <= res {
                    return Some(cand);
                }
            }
            return Some(x);
        }
        let step = newton_step(model, &x, &f)?;
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            let mut fc = vec![0.0; n];
            model.eval(&cand, &mut fc);
            let rc = linalg::norm(&fc);
            if rc.is_finite() && (rc < res || lambda < 1e-4) {
                x = cand;
                f = fc;
                res = rc;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() || linalg::norm(&x) > 1e8 {
            return None;
        }
    }
    (res <= tol).then_some(x)
}

fn newton_step(model: &dyn VectorField, x: &[f64], f: &[f64]) -> Option<DVector<f64>> {
    let jac = jacobian(model, x);
    jac.lu().solve(&DVector::from_column_slice(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub bounded: bool,
    pub max_norm: f64,
    pub initial_max_norm: f64,
    pub blow_ups: usize,
    pub starts: usize,
    pub note: String,
}

/// Integrates `m` random starts from the box over `horizon` and reports
/// whether every orbit stayed below the norm cap. A heuristic, not a proof.
pub fn dissipativity_probe(
    model: &dyn VectorField,
    bounds: &BoxDomain,
    horizon: f64,
    m: usize,
    rng_seed: u64,
    cfg: &IntegratorConfig,
) -> Result<DissipativityReport> {
    check_dim(model.dim(), bounds.dim())?;
    if !(horizon > 0.0) {
        return Err(Error::Validation(format!("horizon must be positive, got {horizon}")));
    }
    let sample_cfg = cfg.with_sample_dt((horizon / 100.0).max(cfg.sample_dt));
    let mut report = DissipativityReport {
        bounded: true,
        max_norm: 0.0,
        initial_max_norm: 0.0,
        blow_ups: 0,
        starts: m,
        note: "heuristic: finite sample of starts over a finite horizon".into(),
    };
    for i in 0..m {
        let mut rng = seed::item_rng(rng_seed, i as u64);
        let x0 = bounds.sample(&mut rng);
        report.initial_max_norm = report.initial_max_norm.max(linalg::norm(&x0));
        match integrate(model, &x0, horizon, &sample_cfg) {
            Ok(traj) => {
                let peak = traj.states().map(linalg::norm).fold(0.0, f64::max);
                report.max_norm = report.max_norm.max(peak);
            }
            Err(Error::BlowUp { norm, .. }) => {
                report.blow_ups += 1;
                report.bounded = false;
                report.max_norm = report.max_norm.max(norm);
            }
            Err(Error::StepFailure { .. }) => {
                report.blow_ups += 1;
                report.bounded = false;
                report.max_norm = f64::INFINITY;
            }
            Err(e) => return Err(e),
        }
    }
    if report.max_norm > cfg.norm_cap {
        report.bounded = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnModel;

    fn linear_diag() -> FnModel {
        FnModel::linear("linear_diag", DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, -3.0])))
    }

    #[test]
    fn zero_field_gives_constant_trajectory() {
        let m = FnModel::new("zero", 2, |_, out| out.fill(0.0));
        let traj = integrate(&m, &[0.3, -1.0], 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.states().all(|x| x == [0.3, -1.0]));
    }

    #[test]
    fn variational_identity_at_start() {
        let (traj, path) = integrate_variational(&linear_diag(), &[1.0, 2.0, 3.0], 0.5, &IntegratorConfig::default()).unwrap();
        assert_eq!(path.matrices[0], DMatrix::identity(3, 3));
        assert_eq!(traj.x0(), &[1.0, 2.0, 3.0]);
        assert_eq!(path.times.len(), traj.len());
    }

    #[test]
    fn backward_flow_inverts_forward() {
        let m = linear_diag();
        let cfg = IntegratorConfig::default();
        let x1 = flow_map(&m, &[1.0, -0.5, 0.2], 1.5, &cfg).unwrap();
        let x0 = flow_map(&m, &x1, -1.5, &cfg).unwrap();
        assert!(linalg::distance(&x0, &[1.0, -0.5, 0.2]) < 1e-8);
    }

    #[test]
    fn invalid_horizon() {
        assert!(integrate(&linear_diag(), &[0.0; 3], 0.0, &IntegratorConfig::default()).is_err());
        assert!(matches!(
            integrate(&linear_diag(), &[0.0; 2], 1.0, &IntegratorConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expansion_is_not_dissipative() {
        let m = FnModel::new("grow", 1, |x, out| out[0] = x[0]);
        let r = dissipativity_probe(&m, &BoxDomain::cube(1, 0.5, 1.0), 50.0, 5, 1, &IntegratorConfig::default()).unwrap();
        assert!(!r.bounded);
        assert_eq!(r.blow_ups, 5);
    }

    #[test]
    fn stable_linear_is_dissipative() {
        let r = dissipativity_probe(&linear_diag(), &BoxDomain::cube(3, -2.0, 2.0), 20.0, 20, 3, &IntegratorConfig::default()).unwrap();
        assert!(r.bounded);
        assert!(r.max_norm <= r.initial_max_norm + 1e-12);
    }

    #[test]
    fn linear_equilibrium_is_origin() {
        let eq = find_equilibria(&linear_diag(), &BoxDomain::cube(3, -2.0, 2.0), 4, 1e-10);
        assert_eq!(eq.len(), 1);
        assert!(linalg::norm(&eq[0]) < 1e-12);
    }
}

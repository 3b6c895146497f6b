//! Lyapunov exponents, dominant and complementary bundles, and numerical
//! checks of exponential separation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{Membership, QuadraticCone};
use crate::dynamics::{self, IntegratorConfig};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{jacobian, VectorField};
use crate::seed;

/// Orthonormal frame anchored at a base point. Serialized with the frame as
/// a list of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FrameRepr", try_from = "FrameRepr")]
pub struct SubspaceFrame {
    pub base_point: Vec<f64>,
    pub frame: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRepr {
    base_point: Vec<f64>,
    dim: usize,
    columns: Vec<Vec<f64>>,
}

impl From<SubspaceFrame> for FrameRepr {
    fn from(f: SubspaceFrame) -> Self {
        let columns = f.frame.column_iter().map(|c| c.iter().copied().collect()).collect();
        FrameRepr { dim: f.frame.nrows(), base_point: f.base_point, columns }
    }
}

impl TryFrom<FrameRepr> for SubspaceFrame {
    type Error = Error;

    fn try_from(r: FrameRepr) -> Result<Self> {
        if r.columns.iter().any(|c| c.len() != r.dim) {
            return Err(Error::Validation(format!("frame columns must have length {}", r.dim)));
        }
        let cols: Vec<DVector<f64>> = r.columns.iter().map(|c| DVector::from_column_slice(c)).collect();
        let frame = if cols.is_empty() { DMatrix::zeros(r.dim, 0) } else { DMatrix::from_columns(&cols) };
        Ok(SubspaceFrame { base_point: r.base_point, frame })
    }
}

impl SubspaceFrame {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    /// `‖frameᵀ frame − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let j = self.frame.ncols();
        if j == 0 {
            return 0.0;
        }
        (self.frame.transpose() * &self.frame - DMatrix::identity(j, j)).amax()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralOptions {
    pub qr_interval: f64,
    /// Fraction of the horizon discarded before averaging.
    pub transient_fraction: f64,
    /// Seed of the random initial frames.
    pub frame_seed: u64,
    /// Time span used to anchor the bundles.
    pub t_warm: f64,
    pub min_gap: f64,
    /// Norm cap for the backward orbit; reaching it shortens the warm-up.
    pub backward_norm_cap: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            qr_interval: 0.5,
            transient_fraction: 0.1,
            frame_seed: 0,
            t_warm: 20.0,
            min_gap: 1e-2,
            backward_norm_cap: 1e12,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Non-increasing.
    pub exponents: Vec<f64>,
    /// Time average of `trace DF` over the averaging window.
    pub trace_average: f64,
    /// `max_i |λ_i(last quarter) − λ_i(full window)|`.
    pub convergence: f64,
    pub horizon: f64,
    pub averaging_time: f64,
}

impl Spectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// Benettin QR estimate of the top `count` Lyapunov exponents at `x0`.
pub fn lyapunov_spectrum(
    model: &dyn VectorField,
    x0: &[f64],
    count: usize,
    horizon: f64,
    opts: &SpectralOptions,
) -> Result<Spectrum> {
    let n = model.dim();
    check_dim(n, x0.len())?;
    if count == 0 || count > n {
        return Err(Error::Validation(format!("exponent count must be in 1..={n}, got {count}")));
    }
    if !(opts.qr_interval > 0.0) || !(horizon >= 10.0 * opts.qr_interval) {
        return Err(Error::Validation(format!(
            "horizon {horizon} must be at least 10 QR intervals of {}",
            opts.qr_interval
        )));
    }
    if !(0.0..1.0).contains(&opts.transient_fraction) {
        return Err(Error::Validation("transient_fraction must lie in [0, 1)".into()));
    }
    let cfg = &opts.integrator;
    let segments = (horizon / opts.qr_interval).round() as usize;
    let dt = horizon / segments as f64;
    let skip = (opts.transient_fraction * segments as f64).ceil() as usize;
    let quarter_start = skip + (3 * (segments - skip)) / 4;

    let mut rng = seed::rng(opts.frame_seed);
    let mut frame = linalg::random_frame(n, count, &mut rng);
    let mut x = x0.to_vec();
    let mut sums = vec![0.0; count];
    let mut late_sums = vec![0.0; count];
    let mut trace_integral = 0.0;
    for s in 0..segments {
        let t0 = s as f64 * dt;
        let averaging = s >= skip;
        let mut prev: Option<(f64, f64)> = None;
        let (x_new, w) = dynamics::evolve_frame(model, &x, &frame, t0, t0 + dt, cfg, cfg.sample_dt.min(dt), |t, x, _, _| {
            if averaging {
                let tr = jacobian(model, x).trace();
                if let Some((tp, trp)) = prev {
                    trace_integral += 0.5 * (tr + trp) * (t - tp);
                }
                prev = Some((t, tr));
            }
        })?;
        let (q, r) = linalg::orthonormalize(&w);
        if r.iter().any(|d| !(d.is_finite() && *d > 1e-300)) {
            return Err(Error::DegenerateFrame { t: t0 + dt });
        }
        if averaging {
            for (i, d) in r.iter().enumerate() {
                sums[i] += d.ln();
                if s >= quarter_start {
                    late_sums[i] += d.ln();
                }
            }
        }
        frame = q;
        x = x_new;
    }
    let avg_time = (segments - skip) as f64 * dt;
    let late_time = (segments - quarter_start) as f64 * dt;
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / avg_time).collect();
    let mut late: Vec<f64> = late_sums.iter().map(|s| s / late_time).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    late.sort_by(|a, b| b.total_cmp(a));
    let convergence = exponents.iter().zip(&late).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Spectrum { exponents, trace_average: trace_integral / avg_time, convergence, horizon, averaging_time: avg_time })
}

/// The k-th Lyapunov exponent: growth rate of the infimum norm on the evolved
/// dominant k-frame.
pub fn k_lyapunov_exponent(
    model: &dyn VectorField,
    x0: &[f64],
    k: usize,
    horizon: f64,
    opts: &SpectralOptions,
) -> Result<f64> {
    Ok(lyapunov_spectrum(model, x0, k, horizon, opts)?.exponents[k - 1])
}

/// Point `Φ_{-τ}(x0)` with `τ ≤ t_warm` as large as the norm cap allows.
fn backward_anchor(model: &dyn VectorField, x0: &[f64], opts: &SpectralOptions) -> Result<(Vec<f64>, f64)> {
    let mut cfg = opts.integrator.clone();
    cfg.norm_cap = opts.backward_norm_cap;
    let step = opts.qr_interval;
    let mut last = (x0.to_vec(), 0.0);
    let result = dynamics::solve(
        |_, y, dy| {
            model.eval(y, dy);
            dy.iter_mut().for_each(|v| *v = -*v);
        },
        0.0,
        x0,
        opts.t_warm,
        &cfg,
        step,
        x0.len(),
        |t, y, _| last = (y.to_vec(), t),
    );
    match result {
        Ok(y) => Ok((y, opts.t_warm)),
        Err(Error::BlowUp { .. }) | Err(Error::StepFailure { .. }) => {
            // keep a whole number of QR intervals
            let tau = (last.1 / step).floor() * step;
            if tau < step {
                return Ok((x0.to_vec(), 0.0));
            }
            let y = dynamics::flow_map_backward(model, x0, tau, &cfg)?;
            Ok((y, tau))
        }
        Err(e) => Err(e),
    }
}

/// Dominant k-frame pushed forward from `Φ_{-τ}(x0)` to `x0`.
fn forward_dominant_frame(model: &dyn VectorField, x0: &[f64], k: usize, opts: &SpectralOptions) -> Result<(DMatrix<f64>, f64)> {
    let n = model.dim();
    let (start, tau) = backward_anchor(model, x0, opts)?;
    let mut rng = seed::rng(seed::item_seed(opts.frame_seed, 1));
    let mut frame = linalg::random_frame(n, k, &mut rng);
    if tau == 0.0 {
        return Ok((frame, 0.0));
    }
    let mut cfg = opts.integrator.clone();
    cfg.norm_cap = cfg.norm_cap.max(10.0 * opts.backward_norm_cap);
    let segments = (tau / opts.qr_interval).round().max(1.0) as usize;
    let dt = tau / segments as f64;
    let mut x = start;
    for s in 0..segments {
        let t0 = s as f64 * dt;
        let (x_new, w) = dynamics::evolve_frame(model, &x, &frame, t0, t0 + dt, &cfg, dt, |_, _, _, _| {})?;
        let (q, r) = linalg::orthonormalize(&w);
        if r.iter().any(|d| !(d.is_finite() && *d > 1e-300)) {
            return Err(Error::DegenerateFrame { t: t0 + dt - tau });
        }
        frame = q;
        x = x_new;
    }
    Ok((frame, tau))
}

/// Dominant k-frame of the adjoint cocycle `M(t_warm)ᵀ`, pulled back to `x0`.
fn adjoint_dominant_frame(model: &dyn VectorField, x0: &[f64], k: usize, opts: &SpectralOptions) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let cfg = &opts.integrator;
    let segments = (opts.t_warm / opts.qr_interval).round().max(1.0) as usize;
    let dt = opts.t_warm / segments as f64;
    let identity = DMatrix::<f64>::identity(n, n);
    let mut transitions = Vec::with_capacity(segments);
    let mut x = x0.to_vec();
    for s in 0..segments {
        let t0 = s as f64 * dt;
        let (x_new, m) = dynamics::evolve_frame(model, &x, &identity, t0, t0 + dt, cfg, dt, |_, _, _, _| {})?;
        transitions.push(m);
        x = x_new;
    }
    let mut rng = seed::rng(seed::item_seed(opts.frame_seed, 2));
    let mut frame = linalg::random_frame(n, k, &mut rng);
    for (s, m) in transitions.iter().enumerate().rev() {
        let (q, r) = linalg::orthonormalize(&(m.transpose() * &frame));
        if r.iter().any(|d| !(d.is_finite() && *d > 1e-300)) {
            return Err(Error::DegenerateFrame { t: s as f64 * dt });
        }
        frame = q;
    }
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    /// First `k + 1` exponents (all `n` when `k = n`).
    pub exponents: Vec<f64>,
    pub k: usize,
    pub lambda_k: f64,
    /// `exponents[k−1] − exponents[k]`; infinite (JSON `null`) when `k = n`.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_infinity")]
    pub gap: f64,
    /// `exp(−gap)`.
    pub gamma_est: f64,
    #[serde(rename = "E")]
    pub e: SubspaceFrame,
    #[serde(rename = "F")]
    pub f: SubspaceFrame,
    pub horizon: f64,
    /// Backward time actually used to anchor `E`.
    pub warm_time: f64,
    pub convergence: f64,
    /// Regression constant `M` in `‖M(t)w‖ ≤ M γᵗ ‖M(t)v‖`, when measured.
    pub fit_constant: Option<f64>,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Estimates `E_{x0}` and `F_{x0}` for a dominant dimension `k`.
pub fn estimate_bundles(
    model: &dyn VectorField,
    x0: &[f64],
    k: usize,
    horizon: f64,
    opts: &SpectralOptions,
) -> Result<(SubspaceFrame, SubspaceFrame)> {
    let est = estimate_separation(model, x0, k, horizon, opts)?;
    Ok((est.e, est.f))
}

/// Exponents, bundles, and the separation rate at `x0`.
pub fn estimate_separation(
    model: &dyn VectorField,
    x0: &[f64],
    k: usize,
    horizon: f64,
    opts: &SpectralOptions,
) -> Result<SeparationEstimate> {
    let n = model.dim();
    check_dim(n, x0.len())?;
    if k == 0 || k > n {
        return Err(Error::Validation(format!("k must be in 1..={n}, got {k}")));
    }
    let count = (k + 1).min(n);
    let spectrum = lyapunov_spectrum(model, x0, count, horizon, opts)?;
    let ex = &spectrum.exponents;
    let gap = if k == n { f64::INFINITY } else { ex[k - 1] - ex[k] };
    if gap < opts.min_gap {
        return Err(Error::GapTooSmall { gap, min_gap: opts.min_gap });
    }
    let (e_frame, warm_time, f_frame) = if k == n {
        (DMatrix::identity(n, n), 0.0, DMatrix::zeros(n, 0))
    } else {
        let (e, tau) = forward_dominant_frame(model, x0, k, opts)?;
        let adj = adjoint_dominant_frame(model, x0, k, opts)?;
        (e, tau, linalg::orthogonal_complement(&adj))
    };
    let e = SubspaceFrame { base_point: x0.to_vec(), frame: e_frame };
    let f = SubspaceFrame { base_point: x0.to_vec(), frame: f_frame };
    let fit_constant = if k < n {
        // sample until the predicted ratio nears the resolution floor
        let t_max = (0.9 * -RATIO_FLOOR.ln() / gap).min(20.0);
        let times: Vec<f64> = (1..=20).map(|i| t_max * f64::from(i) / 20.0).collect();
        fit_separation_constant(model, &e, &f, gap, &times, &opts.integrator).ok()
    } else {
        None
    };
    Ok(SeparationEstimate {
        exponents: spectrum.exponents.clone(),
        k,
        lambda_k: ex[k - 1],
        gap,
        gamma_est: (-gap).exp(),
        e,
        f,
        horizon,
        warm_time,
        convergence: spectrum.convergence,
        fit_constant,
    })
}

/// `‖M(t)w‖ / ‖M(t)v‖` at each `t` in `times`, with `M` the flow Jacobian at
/// `base_point`.
pub fn separation_ratios(
    model: &dyn VectorField,
    base_point: &[f64],
    v: &[f64],
    w: &[f64],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let n = model.dim();
    check_dim(n, v.len())?;
    check_dim(n, w.len())?;
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if !(t_max > 0.0) {
        return Err(Error::Validation("separation ratios need a positive time".into()));
    }
    let frame = DMatrix::from_columns(&[DVector::from_column_slice(v), DVector::from_column_slice(w)]);
    let mut ratios = vec![f64::NAN; times.len()];
    // the pair is rescaled jointly, which leaves the ratio unchanged
    let mut x = base_point.to_vec();
    let mut pair = frame;
    let mut t = 0.0;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    for i in order {
        let target = times[i];
        if target > t {
            let (x_new, p) = dynamics::evolve_frame(model, &x, &pair, t, target, cfg, target - t, |_, _, _, _| {})?;
            let scale = p.column(0).norm();
            pair = p / scale;
            x = x_new;
            t = target;
        }
        ratios[i] = pair.column(1).norm() / pair.column(0).norm();
    }
    Ok(ratios)
}

/// Smallest ratio treated as resolved by the integrator.
const RATIO_FLOOR: f64 = 1e-10;

/// `max` over frame columns of `exp(mean_t[ln ratio(t) + gap·t])`, using the
/// leading samples whose ratio stays above the resolution floor.

pub fn fit_separation_constant(
    model: &dyn VectorField,
    e: &SubspaceFrame,
    f: &SubspaceFrame,
    gap: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for v in e.frame.column_iter() {
        for w in f.frame.column_iter() {
            let r = separation_ratios(model, &e.base_point, v.as_slice(), w.as_slice(), times, cfg)?;
            // ratios below the integrator resolution carry no information
            let usable: Vec<f64> =
                r.iter().zip(times).take_while(|(ri, _)| **ri > RATIO_FLOOR).map(|(ri, t)| ri.ln() + gap * t).collect();
            if usable.is_empty() {
                continue;
            }
            let mean = usable.iter().sum::<f64>() / usable.len() as f64;
            best = Some(best.map_or(mean.exp(), |b| b.max(mean.exp())));
        }
    }
    best.ok_or_else(|| Error::Validation(format!("separation ratios fall below {RATIO_FLOOR:e} at the first sample time")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    #[serde(rename = "E_in_interior")]
    pub e_in_interior: bool,
    #[serde(rename = "F_misses_cone")]
    pub f_misses_cone: bool,
    pub gap: f64,
    pub samples: usize,
}

/// Samples unit vectors of `span E` and `span F` and classifies them.
pub fn verify_separation(cone: &QuadraticCone, estimate: &SeparationEstimate, m_samples: usize, rng_seed: u64) -> Result<SeparationCheck> {
    let check = |frame: &DMatrix<f64>, want: Membership, stream: u64| -> Result<bool> {
        if frame.ncols() == 0 {
            return Ok(true);
        }
        check_dim(cone.dim(), frame.nrows())?;
        let mut rng = seed::item_rng(rng_seed, stream);
        for _ in 0..m_samples {
            let v = frame * linalg::random_unit(frame.ncols(), &mut rng);
            if cone.classify(v.as_slice())?.class != want {
                return Ok(false);
            }
        }
        Ok(true)
    };
    Ok(SeparationCheck {
        e_in_interior: check(&estimate.e.frame, Membership::Interior, 0)?,
        f_misses_cone: check(&estimate.f.frame, Membership::Exterior, 1)?,
        gap: estimate.gap,
        samples: m_samples,
    })
}

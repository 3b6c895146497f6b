//! Embedded Runge–Kutta 5(4) (Dormand–Prince) with PI step-size control.
//!
//! Steps are clipped so that every multiple of the sample spacing is hit
//! exactly; samples are therefore genuine integrator states, not
//! interpolated values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Output spacing.
    pub sample_dt: f64,
    /// A state norm above this aborts with `BlowUp`.
    pub norm_cap: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 0.5,
            sample_dt: 0.01,
            norm_cap: 1e6,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("sample_dt", self.sample_dt),
            ("norm_cap", self.norm_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("integrator {name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_sample_dt(&self, sample_dt: f64) -> Self {
        Self { sample_dt, ..self.clone() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, calling `observe(t, y, y')`
/// at `t0`, at every `t0 + i·sample_dt`, and at `t_end`.
///
/// Only the first `capped` components count toward the norm cap.
pub(crate) fn solve<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    sample_dt: f64,
    capped: usize,
    mut observe: O,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64], &[f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    rhs(t0, &y, &mut k1);
    observe(t0, &y, &k1);
    if t_end <= t0 {
        return Ok(y);
    }

    let span = t_end - t0;
    let n_samples = ((span / sample_dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let sample_time = |i: u64| -> f64 {
        if i >= n_samples {
            t_end
        } else {
            t0 + i as f64 * sample_dt
        }
    };
    let mut next_index: u64 = 1;

    let mut t = t0;
    let mut h = initial_step(&mut rhs, t0, &y, &k1, cfg, span);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;

    while t < t_end {
        let target = sample_time(next_index);
        let remaining = target - t;
        let landing = h >= remaining * (1.0 - 1e-12);
        let h_step = if landing { remaining } else { h };

        for i in 0..n {
            tmp[i] = y[i] + h_step * A21 * k1[i];
        }
        rhs(t + C2 * h_step, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + h_step * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h_step, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h_step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h_step, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h_step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h_step, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + h_step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h_step, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + h_step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h_step, &y_new, &mut k7);

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h_step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::StepFailure { t, h: h_step });
        }

        if err.is_finite() && err <= 1.0 {
            t = if landing { target } else { t + h_step };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);

            let norm = y[..capped].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > cfg.norm_cap {
                return Err(Error::BlowUp { t, norm });
            }
            if landing {
                observe(t, &y, &k1);
                next_index += 1;
            }

            let e = err.max(1e-10);
            let fac = (SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
            let proposal = h_step * fac;
            // a clipped landing step says little about the natural step size
            h = if landing { proposal.max(h.min(proposal * FAC_MAX)) } else { proposal };
            h = h.min(cfg.max_step);
            err_prev = e;
        } else {
            let fac = if err.is_finite() { (SAFETY * err.powf(-0.2)).max(FAC_MIN) } else { 0.1 };
            h = h_step * fac;
        }

        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, h });
        }
    }
    Ok(y)
}

fn initial_step<F>(rhs: &mut F, t0: f64, y: &[f64], f0: &[f64], cfg: &IntegratorConfig, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.max_step).min(span)
}

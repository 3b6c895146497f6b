use nalgebra::DMatrix;

use conewatch::linalg::max_principal_angle;
use conewatch::spectral::{
    estimate_bundles, estimate_separation, k_lyapunov_exponent, lyapunov_spectrum, separation_ratios, verify_separation,
    SeparationEstimate, SpectralOptions, SubspaceFrame,
};
use conewatch::{zoo, Error, FnModel, QuadraticCone};

fn axes(cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(3, cols.len(), |r, c| f64::from(u8::from(r == cols[c])))
}

#[test]
fn linear_diag_spectrum() {
    let entry = zoo::linear_diag();
    let s = lyapunov_spectrum(entry.model.as_ref(), &[0.7, -1.0, 1.3], 3, 100.0, &SpectralOptions::default()).unwrap();
    for (a, b) in s.exponents.iter().zip([-1.0, -1.0, -3.0]) {
        assert!((a - b).abs() < 1e-2, "{:?}", s.exponents);
    }
    assert!((s.sum() - s.trace_average).abs() < 5e-2);
}

#[test]
fn spectrum_at_equilibrium() {
    let entry = zoo::linear_diag();
    let s = lyapunov_spectrum(entry.model.as_ref(), &[0.0; 3], 3, 50.0, &SpectralOptions::default()).unwrap();
    assert!((s.exponents[2] + 3.0).abs() < 1e-6, "{:?}", s.exponents);
}

#[test]
fn limit_cycle_spectrum() {
    let entry = zoo::limit_cycle_3d(25.0).unwrap();
    let s = lyapunov_spectrum(entry.model.as_ref(), &[1.0, 0.0, 0.0], 3, 100.0, &SpectralOptions::default()).unwrap();
    for (a, b) in s.exponents.iter().zip([0.0, -2.0, -25.0]) {
        assert!((a - b).abs() < 5e-2, "{:?}", s.exponents);
    }
    assert!((s.sum() - s.trace_average).abs() < 5e-2, "{} vs {}", s.sum(), s.trace_average);
    let k2 = k_lyapunov_exponent(entry.model.as_ref(), &[1.0, 0.0, 0.0], 2, 100.0, &SpectralOptions::default()).unwrap();
    assert!((k2 + 2.0).abs() < 5e-2);
}

#[test]
fn seed_independence() {
    let entry = zoo::limit_cycle_3d(25.0).unwrap();
    let a = lyapunov_spectrum(entry.model.as_ref(), &[1.0, 0.0, 0.0], 3, 100.0, &SpectralOptions::default()).unwrap();
    let opts = SpectralOptions { frame_seed: 99, ..Default::default() };
    let b = lyapunov_spectrum(entry.model.as_ref(), &[1.0, 0.0, 0.0], 3, 100.0, &opts).unwrap();
    for (x, y) in a.exponents.iter().zip(&b.exponents) {
        assert!((x - y).abs() < 1e-2);
    }
}

#[test]
fn k_exponents_linear_diag() {
    let entry = zoo::linear_diag();
    let opts = SpectralOptions::default();
    let k1 = k_lyapunov_exponent(entry.model.as_ref(), &[1.0, 1.0, 1.0], 1, 100.0, &opts).unwrap();
    let k2 = k_lyapunov_exponent(entry.model.as_ref(), &[1.0, 1.0, 1.0], 2, 100.0, &opts).unwrap();
    assert!((k1 + 1.0).abs() < 1e-2 && (k2 + 1.0).abs() < 1e-2);
}

#[test]
fn linear_diag_bundles() {
    let entry = zoo::linear_diag();
    let est = estimate_separation(entry.model.as_ref(), &[1.0, 1.0, 1.0], 2, 100.0, &SpectralOptions::default()).unwrap();
    let e_err = max_principal_angle(&est.e.frame, &axes(&[0, 1]));
    let f_err = max_principal_angle(&est.f.frame, &axes(&[2]));
    assert!(e_err < 1e-4 && f_err < 1e-4, "{e_err:e} {f_err:e} warm {}", est.warm_time);
    assert!(est.e.orthonormality_defect() < 1e-10 && est.f.orthonormality_defect() < 1e-10);
    assert!((est.gap - 2.0).abs() < 2e-2);
    assert!((est.gamma_est - (-est.gap).exp()).abs() < 1e-15);
    let check = verify_separation(&entry.recommended_cone, &est, 200, 4).unwrap();
    assert!(check.e_in_interior && check.f_misses_cone);
    let json = serde_json::to_value(&est).unwrap();
    assert!(json["E"]["columns"].is_array() && json["exponents"].is_array());
}

#[test]
fn expanding_linear_bundles() {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, -1.0]));
    let model = FnModel::linear("diag_2_1_m1", a);
    let (e, f) = estimate_bundles(&model, &[0.0; 3], 2, 30.0, &SpectralOptions::default()).unwrap();
    assert!(max_principal_angle(&e.frame, &axes(&[0, 1])) < 1e-4);
    assert!(max_principal_angle(&f.frame, &axes(&[2])) < 1e-4);
}

#[test]
fn full_rank_gives_empty_f() {
    let entry = zoo::linear_diag();
    let (e, f) = estimate_bundles(entry.model.as_ref(), &[1.0; 3], 3, 20.0, &SpectralOptions::default()).unwrap();
    assert_eq!(e.frame.ncols(), 3);
    assert_eq!(f.frame.ncols(), 0);
}

#[test]
fn gap_too_small() {
    let entry = zoo::linear_diag();
    let r = estimate_bundles(entry.model.as_ref(), &[1.0; 3], 1, 50.0, &SpectralOptions::default());
    assert!(matches!(r, Err(Error::GapTooSmall { .. })), "{r:?}");
}

#[test]
fn e_is_invariant() {
    let entry = zoo::linear_diag();
    let opts = SpectralOptions::default();
    let x0 = [1.0, -0.5, 0.8];
    let (e0, _) = estimate_bundles(entry.model.as_ref(), &x0, 2, 50.0, &opts).unwrap();
    let t = 2.0;
    let (traj, path) = conewatch::dynamics::integrate_variational(entry.model.as_ref(), &x0, t, &opts.integrator).unwrap();
    let pushed = conewatch::linalg::orthonormalize(&(path.final_matrix() * &e0.frame)).0;
    let (e1, _) = estimate_bundles(entry.model.as_ref(), traj.final_state(), 2, 50.0, &opts).unwrap();
    assert!(max_principal_angle(&pushed, &e1.frame) < 1e-3);
}

#[test]
fn separation_ratio_decay() {
    let entry = zoo::linear_diag();
    let cfg = conewatch::IntegratorConfig::default();
    let times: Vec<f64> = (1..=20).map(f64::from).collect();
    let v = [0.6, 0.8, 0.0];
    let w = [0.0, 0.0, 1.0];
    let r = separation_ratios(entry.model.as_ref(), &[1.0; 3], &v, &w, &times, &cfg).unwrap();
    for (ri, t) in r.iter().zip(&times) {
        let expected = (-2.0 * t).exp();
        assert!(*ri <= 3.0 * expected && *ri >= expected / 3.0, "t={t} ratio={ri:e}");
    }
}

#[test]
fn mismatched_frames_fail_verification() {
    let cone = QuadraticCone::new(&[-1.0, -1.0, 1.0], None).unwrap();
    let tilted = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let est = SeparationEstimate {
        exponents: vec![-1.0, -1.0, -3.0],
        k: 2,
        lambda_k: -1.0,
        gap: 2.0,
        gamma_est: (-2.0f64).exp(),
        e: SubspaceFrame { base_point: vec![0.0; 3], frame: tilted },
        f: SubspaceFrame { base_point: vec![0.0; 3], frame: axes(&[0]) },
        horizon: 1.0,
        warm_time: 0.0,
        convergence: 0.0,
        fit_constant: None,
    };
    let check = verify_separation(&cone, &est, 100, 1).unwrap();
    assert!(!check.e_in_interior && !check.f_misses_cone);
}

#[test]
fn full_rank_estimate_round_trips() {
    let entry = zoo::linear_diag();
    let est = estimate_separation(entry.model.as_ref(), &[1.0; 3], 3, 20.0, &SpectralOptions::default()).unwrap();
    assert!(est.gap.is_infinite());
    let text = serde_json::to_string(&est).unwrap();
    let back: SeparationEstimate = serde_json::from_str(&text).unwrap();
    assert!(back.gap.is_infinite());
    assert_eq!(back.e, est.e);
}

//! Acceptance run: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use conewatch::classifier::{ClassifierParams, OmegaClass};
use conewatch::cooperativity::{fundamental_cone_invariance, smith_lmi_check, InvarianceOptions, DEFAULT_MARGIN};
use conewatch::dynamics::{flow_map, integrate_variational};
use conewatch::linalg::max_principal_angle;
use conewatch::prevalence::{pb_check, probe_scan, sweep_with_workers, SweepConfig, SweepReport};
use conewatch::spectral::{estimate_separation, lyapunov_spectrum, verify_separation, SpectralOptions};
use conewatch::{seed, zoo, IntegratorConfig, Membership, QuadraticCone};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn axes(idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(3, idx.len(), |i, j| if i == idx[j] { 1.0 } else { 0.0 })
}

fn random_combination(frame: &DMatrix<f64>, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..frame.ncols()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if c.iter().map(|v| v * v).sum::<f64>() > 1e-6 {
            return (0..frame.nrows()).map(|i| (0..frame.ncols()).map(|j| frame[(i, j)] * c[j]).sum()).collect();
        }
    }
}

fn criterion_1() -> Check {
    let mut cones = vec![QuadraticCone::new(&[-1.0, -1.0, 1.0], None).map_err(err)?];
    for s in 0..5u64 {
        let eig: &[f64] = if s % 2 == 0 { &[-1.0, -2.0, 1.5] } else { &[-1.0, -0.5, 2.0, 1.0] };
        cones.push(QuadraticCone::random_basis(eig, 100 + s).map_err(err)?);
    }
    let per_cone = 10_000 / cones.len() + 1;
    let (mut checks, mut failures) = (0usize, 0usize);
    for (ci, cone) in cones.iter().enumerate() {
        let mut rng = seed::item_rng(11, ci as u64);
        let n = cone.dim();
        for _ in 0..per_cone {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let alpha = rng.random_range(0.01..100.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let a = cone.classify(&x).map_err(err)?.class;
            let b = cone.classify(&ax).map_err(err)?.class;
            let inside = |m: Membership| m != Membership::Exterior;
            failures += usize::from(inside(a) != inside(b));
            let p = random_combination(cone.neg_frame(), &mut rng);
            failures += usize::from(cone.classify(&p).map_err(err)?.class != Membership::Interior);
            let c = random_combination(cone.pos_frame(), &mut rng);
            failures += usize::from(cone.classify(&c).map_err(err)?.class != Membership::Exterior);
            checks += 3;
        }
    }
    ensure(failures == 0, format!("cone algebra: {failures} failures in {checks} checks over {} cones", cones.len()))
}

fn criterion_2() -> Check {
    let e = zoo::linear_diag();
    let pts = e.default_box.grid(11);
    let at = |lambda: f64| smith_lmi_check(&e.recommended_cone, e.model.as_ref(), &move |_: &[f64]| lambda, &pts, DEFAULT_MARGIN);
    let good = at(2.5).map_err(err)?;
    let bad = at(0.0).map_err(err)?;
    ensure(
        (good.worst_eigenvalue + 0.5).abs() <= 1e-9 && good.pass && (bad.worst_eigenvalue - 2.0).abs() <= 1e-9 && !bad.pass,
        format!(
            "Smith check: λ=2.5 worst {:.12} pass={}, λ=0 worst {:.12} pass={}",
            good.worst_eigenvalue, good.pass, bad.worst_eigenvalue, bad.pass
        ),
    )
}

fn criterion_3() -> Check {
    let opts = InvarianceOptions::default();
    let ld = zoo::linear_diag();
    let good = fundamental_cone_invariance(&ld.recommended_cone, ld.model.as_ref(), &[1.0, -0.5, 0.8], &[-1.2, 0.3, 1.5], 20.0, 200, 5, &opts)
        .map_err(err)?;
    let rot = zoo::rotation_counterexample();
    let bad = fundamental_cone_invariance(&rot.recommended_cone, rot.model.as_ref(), &[1.0, 0.0, 0.5], &[0.0, 1.0, -0.5], 5.0, 200, 5, &opts)
        .map_err(err)?;
    ensure(
        good.pass && !bad.pass,
        format!(
            "cone invariance: linear_diag pass={} ({} violations), rotation pass={} ({} violations)",
            good.pass,
            good.violations.len(),
            bad.pass,
            bad.violations.len()
        ),
    )
}

fn criterion_4() -> Check {
    let cfg = IntegratorConfig::default();
    let ld = zoo::linear_diag();
    let x1 = flow_map(ld.model.as_ref(), &[1.0, 1.0, 1.0], 1.0, &cfg).map_err(err)?;
    let want = [(-1.0f64).exp(), (-1.0f64).exp(), (-3.0f64).exp()];
    let state_err = x1.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (_, path) = integrate_variational(ld.model.as_ref(), &[1.0, 1.0, 1.0], 1.0, &cfg).map_err(err)?;
    let phi = path.final_matrix();
    let var_err = (phi - DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&want))).abs().max();
    let lc = zoo::limit_cycle_3d(25.0).map_err(err)?;
    let back = flow_map(lc.model.as_ref(), &[1.0, 0.0, 0.0], 2.0 * PI, &cfg).map_err(err)?;
    let ret_err = ((back[0] - 1.0).powi(2) + back[1].powi(2) + back[2].powi(2)).sqrt();
    ensure(
        state_err <= 1e-6 && var_err <= 1e-6 && ret_err <= 1e-4,
        format!("integrator: state error {state_err:.2e}, variational error {var_err:.2e}, return error {ret_err:.2e}"),
    )
}

fn criterion_5() -> Check {
    let opts = SpectralOptions::default();
    let ld = zoo::linear_diag();
    let s1 = lyapunov_spectrum(ld.model.as_ref(), &[1.0, 1.0, 1.0], 3, 100.0, &opts).map_err(err)?;
    let e1 = s1.exponents.iter().zip([-1.0, -1.0, -3.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let lc = zoo::limit_cycle_3d(25.0).map_err(err)?;
    let s2 = lyapunov_spectrum(lc.model.as_ref(), &[1.0, 0.0, 0.0], 3, 100.0, &opts).map_err(err)?;
    let e2 = s2.exponents.iter().zip([0.0, -2.0, -25.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let t1 = (s1.sum() - s1.trace_average).abs();
    let t2 = (s2.sum() - s2.trace_average).abs();
    ensure(
        e1 <= 1e-2 && e2 <= 5e-2 && t1 <= 5e-2 && t2 <= 5e-2,
        format!(
            "Lyapunov: linear_diag {:?} (error {e1:.1e}), limit_cycle_3d {:?} (error {e2:.1e}), sum-trace gaps {t1:.1e}/{t2:.1e}",
            s1.exponents, s2.exponents
        ),
    )
}

fn criterion_6() -> Check {
    let ld = zoo::linear_diag();
    let est = estimate_separation(ld.model.as_ref(), &[1.0, 1.0, 1.0], 2, 100.0, &SpectralOptions::default()).map_err(err)?;
    let ae = max_principal_angle(&est.e.frame, &axes(&[0, 1]));
    let af = max_principal_angle(&est.f.frame, &axes(&[2]));
    let check = verify_separation(&ld.recommended_cone, &est, 500, 3).map_err(err)?;
    ensure(
        ae <= 1e-4 && af <= 1e-4 && check.e_in_interior && check.f_misses_cone,
        format!(
            "bundles: angle(E) {ae:.1e}, angle(F) {af:.1e}, E_in_interior={}, F_misses_cone={}",
            check.e_in_interior, check.f_misses_cone
        ),
    )
}

struct Sweeps {
    linear: SweepReport,
    cycle: SweepReport,
    elapsed: f64,
}

fn run_sweeps(workers: usize) -> Result<Sweeps, String> {
    let start = Instant::now();
    let ld = zoo::linear_diag();
    let linear = sweep_with_workers(
        ld.model.as_ref(),
        &ld.recommended_cone,
        &SweepConfig::new(ld.default_box.clone(), 1000, 2024),
        workers,
    )
    .map_err(err)?;
    let lc = zoo::limit_cycle_3d(25.0).map_err(err)?;
    let cycle = sweep_with_workers(
        lc.model.as_ref(),
        &lc.recommended_cone,
        &SweepConfig::new(lc.default_box.clone(), 1000, 2024),
        workers,
    )
    .map_err(err)?;
    Ok(Sweeps { linear, cycle, elapsed: start.elapsed().as_secs_f64() })
}

fn criterion_7(s: &Sweeps) -> Check {
    let frac = |r: &SweepReport| r.fraction_q_union_s;
    let unres = |r: &SweepReport| r.unresolved() as f64 / r.n_points as f64;
    ensure(
        frac(&s.linear) >= 0.99 && frac(&s.cycle) >= 0.99 && unres(&s.linear) <= 0.01 && unres(&s.cycle) <= 0.01 && s.elapsed <= 120.0,
        format!(
            "prevalence sweeps: linear_diag fraction {} unresolved {}, limit_cycle_3d fraction {} unresolved {}, {:.1} s with 8 workers",
            frac(&s.linear),
            unres(&s.linear),
            frac(&s.cycle),
            unres(&s.cycle),
            s.elapsed
        ),
    )
}

fn criterion_8(s: &Sweeps) -> Check {
    let pb = pb_check(&s.cycle, s.cycle.eps_eq);
    let good_period = s
        .cycle
        .records
        .iter()
        .filter(|r| matches!(r.omega_class, OmegaClass::PeriodicOrbit { period } if (period - 2.0 * PI).abs() <= 1e-2))
        .count();
    let share = good_period as f64 / s.cycle.n_points as f64;

    let ml = zoo::get_model("may_leonard").map_err(err)?;
    let mut cfg = SweepConfig::new(ml.default_box.clone(), 200, 2024);
    cfg.horizon = Some(ml.sweep_horizon);
    let report = sweep_with_workers(ml.model.as_ref(), &ml.recommended_cone, &cfg, 8).map_err(err)?;
    let ml_pb = pb_check(&report, report.eps_eq);
    ensure(
        pb.violations.is_empty() && share >= 0.95 && ml_pb.periodic == 0,
        format!(
            "periodic orbits: limit_cycle_3d {} violations, {:.1}% period within 1e-2 of 2π; may_leonard {} eligible, {} classified periodic",
            pb.violations.len(),
            100.0 * share,
            ml_pb.eligible,
            ml_pb.periodic
        ),
    )
}

fn criterion_9() -> Check {
    let lc = zoo::limit_cycle_3d(25.0).map_err(err)?;
    let params = ClassifierParams::default().for_box(&lc.default_box);
    let scan = probe_scan(lc.model.as_ref(), &lc.recommended_cone, &[0.0, 0.0, 1.0], 0.1, 100, 9, &lc.facts.equilibria, &params)
        .map_err(err)?;
    ensure(scan.fraction_in_q == 1.0, format!("probe scan at (0,0,1): fraction_in_Q = {}", scan.fraction_in_q))
}

fn csv_bytes(r: &SweepReport) -> Vec<u8> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf).expect("in-memory csv");
    buf
}

fn criterion_10(s8: &Sweeps) -> Check {
    let s1 = run_sweeps(1)?;
    let same_l = csv_bytes(&s1.linear) == csv_bytes(&s8.linear);
    let same_c = csv_bytes(&s1.cycle) == csv_bytes(&s8.cycle);
    ensure(
        same_l && same_c,
        format!("determinism: CSVs identical for 1 and 8 workers: linear_diag {same_l}, limit_cycle_3d {same_c}"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Check)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
    ];
    match run_sweeps(8) {
        Ok(s) => {
            results.push((7, criterion_7(&s)));
            results.push((8, criterion_8(&s)));
            results.push((9, criterion_9()));
            results.push((10, criterion_10(&s)));
        }
        Err(e) => {
            for n in [7, 8, 10] {
                results.push((n, Err(format!("sweep failed: {e}"))));
            }
            results.push((9, criterion_9()));
            results.sort_by_key(|r| r.0);
        }
    }
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("[PASS] criterion {n}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {n}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

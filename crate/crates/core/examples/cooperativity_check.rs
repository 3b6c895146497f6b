//! Cooperativity checks: Smith matrix inequality, fundamental-matrix cone
//! invariance, and empirical monotonicity, on a cooperative and a
//! non-cooperative model.
//!
//! cargo run --example cooperativity_check

use conewatch::cooperativity::{
    averaged_jacobian_between, empirical_monotonicity, fundamental_cone_invariance, minimal_constant_lambda, smith_lmi_check,
    smith_matrix, InvarianceOptions, MonotonicityOptions, DEFAULT_MARGIN,
};
use conewatch::zoo;

fn main() -> conewatch::Result<()> {
    let lc = zoo::get_model("limit_cycle_3d")?;
    let (cone, model) = (&lc.recommended_cone, lc.model.as_ref());

    println!("Smith matrix at (1,0,0), λ = 48:\n{}", smith_matrix(cone, model, 48.0, &[1.0, 0.0, 0.0])?);
    let grid = lc.default_box.grid(21);
    let report = smith_lmi_check(cone, model, &|_: &[f64]| 48.0, &grid, DEFAULT_MARGIN)?;
    println!(
        "λ = 48 over {} grid points: worst eigenvalue {:.4} at {:?}, pass {}",
        report.points_checked, report.worst_eigenvalue, report.worst_point, report.pass
    );
    if let Some(l) = minimal_constant_lambda(cone, model, &grid, DEFAULT_MARGIN, 0.0, 100.0, 1e-3)? {
        println!("smallest constant λ that passes: {l:.3}");
    }

    let a = averaged_jacobian_between(model, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.5], 4)?;
    println!("averaged Jacobian along the chord:\n{a:.4}");

    let inv = fundamental_cone_invariance(cone, model, &[1.0, 0.0, 0.2], &[0.2, -0.8, -0.4], 10.0, 100, 3, &InvarianceOptions::default())?;
    println!("fundamental matrix invariance over t ∈ [{:.3}, 10]: pass {} ({} violations)", inv.t_skip, inv.pass, inv.violations.len());

    let mono = empirical_monotonicity(cone, model, 100, 10.0, 5, &lc.default_box, &MonotonicityOptions::default())?;
    println!("empirical monotonicity: {} of {} pairs violated", mono.violations, mono.pairs_tested);

    // A rotation does not preserve the cone: every check fails.
    let rot = zoo::get_model("rotation_counterexample")?;
    let bad = smith_lmi_check(&rot.recommended_cone, rot.model.as_ref(), &|_: &[f64]| 0.0, &grid, DEFAULT_MARGIN)?;
    let inv = fundamental_cone_invariance(
        &rot.recommended_cone,
        rot.model.as_ref(),
        &[1.0, 0.0, 0.5],
        &[0.0, 1.0, -0.5],
        5.0,
        100,
        3,
        &InvarianceOptions::default(),
    )?;
    println!(
        "rotation: Smith worst eigenvalue {:.3} (pass {}), invariance pass {} with first violation at t = {:.3}",
        bad.worst_eigenvalue,
        bad.pass,
        inv.pass,
        inv.violations.first().map_or(f64::NAN, |v| v.t)
    );
    Ok(())
}

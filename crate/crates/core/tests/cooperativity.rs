use conewatch::cooperativity::{
    empirical_monotonicity, fundamental_cone_invariance, minimal_constant_lambda, smith_lmi_check, smith_matrix,
    InvarianceOptions, MonotonicityOptions, DEFAULT_MARGIN,
};
use conewatch::{zoo, BoxDomain, QuadraticCone};

fn grid21() -> Vec<Vec<f64>> {
    BoxDomain::cube(3, -2.0, 2.0).grid(21)
}

#[test]
fn limit_cycle_lambda_holds_on_grid() {
    let entry = zoo::limit_cycle_3d(25.0).unwrap();
    let lambda = entry.recommended_lambda.unwrap();
    let pts = grid21();
    let report = smith_lmi_check(&entry.recommended_cone, entry.model.as_ref(), &move |_| lambda, &pts, DEFAULT_MARGIN).unwrap();
    let minimal = minimal_constant_lambda(&entry.recommended_cone, entry.model.as_ref(), &pts, DEFAULT_MARGIN, 0.0, lambda, 1e-3)
        .unwrap();
    assert!(report.pass, "worst {} at {:?}, minimal working lambda {minimal:?}", report.worst_eigenvalue, report.worst_point);
    let minimal = minimal.unwrap();
    assert!((minimal - 46.0).abs() < 1e-2, "{minimal}");
}

#[test]
fn linear_diag_passes_on_default_box() {
    let entry = zoo::linear_diag();
    let lambda = entry.recommended_lambda.unwrap();
    let pts = entry.default_box.grid(5);
    let r = smith_lmi_check(&entry.recommended_cone, entry.model.as_ref(), &move |_| lambda, &pts, DEFAULT_MARGIN).unwrap();
    assert!(r.pass);
}

#[test]
fn smith_matrix_is_symmetric() {
    let entry = zoo::cyclic_feedback_3d(4.0).unwrap();
    let cone = QuadraticCone::random_basis(&[-1.0, 2.0, 0.5], 11).unwrap();
    for x in grid21().iter().step_by(97) {
        let s = smith_matrix(&cone, entry.model.as_ref(), 1.3, x).unwrap();
        assert!((&s - s.transpose()).amax() <= 1e-12 * s.norm());
    }
}

#[test]
fn invariance_linear_diag_passes() {
    let entry = zoo::linear_diag();
    let r = fundamental_cone_invariance(
        &entry.recommended_cone,
        entry.model.as_ref(),
        &[1.0, -0.5, 0.3],
        &[-1.2, 0.4, 1.5],
        20.0,
        200,
        3,
        &InvarianceOptions::default(),
    )
    .unwrap();
    assert!(r.pass, "{:?}", r.violations.first());
    assert!(r.checkpoints > 1000);
}

#[test]
fn invariance_at_equilibrium_matches_closed_form() {
    let entry = zoo::linear_diag();
    let r = fundamental_cone_invariance(
        &entry.recommended_cone,
        entry.model.as_ref(),
        &[0.0; 3],
        &[0.0; 3],
        0.5,
        50,
        9,
        &InvarianceOptions::default(),
    )
    .unwrap();
    assert!(r.pass);
}

#[test]
fn invariance_rotation_fails() {
    let entry = zoo::rotation_counterexample();
    let r = fundamental_cone_invariance(
        &entry.recommended_cone,
        entry.model.as_ref(),
        &[1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0],
        5.0,
        200,
        3,
        &InvarianceOptions::default(),
    )
    .unwrap();
    assert!(!r.pass);
    let v = &r.violations[0];
    assert!(v.t > r.t_skip && v.t <= 5.0);
}

#[test]
fn invariance_limit_cycle_pair_passes() {
    let entry = zoo::limit_cycle_3d(25.0).unwrap();
    let r = fundamental_cone_invariance(
        &entry.recommended_cone,
        entry.model.as_ref(),
        &[0.5, 0.0, 0.5],
        &[-1.0, 0.3, -0.2],
        10.0,
        100,
        5,
        &InvarianceOptions::default(),
    )
    .unwrap();
    assert!(r.pass, "{:?}", r.violations.first());
}

#[test]
fn monotonicity_linear_diag() {
    let entry = zoo::linear_diag();
    let r = empirical_monotonicity(
        &entry.recommended_cone,
        entry.model.as_ref(),
        200,
        20.0,
        1,
        &entry.default_box,
        &MonotonicityOptions::default(),
    )
    .unwrap();
    assert_eq!(r.pairs_tested, 200);
    assert_eq!(r.violations, 0, "{:?}", r.first_violation);
}

#[test]
fn monotonicity_rotation_violates() {
    let entry = zoo::rotation_counterexample();
    let r = empirical_monotonicity(
        &entry.recommended_cone,
        entry.model.as_ref(),
        50,
        5.0,
        1,
        &entry.default_box,
        &MonotonicityOptions::default(),
    )
    .unwrap();
    assert!(r.violations > 0);
    assert!(r.first_violation.unwrap().form_value > 0.0);
}

#[test]
fn monotonicity_limit_cycle() {
    let entry = zoo::limit_cycle_3d(25.0).unwrap();
    let r = empirical_monotonicity(
        &entry.recommended_cone,
        entry.model.as_ref(),
        100,
        10.0,
        2,
        &entry.default_box,
        &MonotonicityOptions::default(),
    )
    .unwrap();
    assert_eq!(r.violations, 0, "{:?}", r.first_violation);
}

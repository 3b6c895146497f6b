//! Quadratic cones: signature, membership, ordering, probes, and boundary samples.
//!
//! cargo run --example cone_algebra

use conewatch::{Membership, OrderRelation, QuadraticCone};

fn main() -> conewatch::Result<()> {
    // Light cone around the e₃ axis: two negative eigenvalues, so rank k = 2.
    let cone = QuadraticCone::new(&[-1.0, -1.0, 1.0], None)?;
    println!("dim {} rank {} eigenvalues {:?}", cone.dim(), cone.rank(), cone.eigenvalues());
    println!("Q =\n{}", cone.q_matrix());

    for x in [[1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.3, -0.4, 0.0]] {
        let m = cone.classify(&x)?;
        println!("x = {x:?}: form {:+.3} -> {:?}", cone.form(&x), m.class);
    }

    let (a, b) = ([1.0, 1.0, 0.0], [0.0, 0.5, 0.1]);
    let rel = cone.order_relation(&a, &b)?;
    println!("{a:?} vs {b:?}: {rel:?}");
    assert_eq!(rel, OrderRelation::StronglyOrdered);

    // Set-wise order: every pair of points across the two sets.
    let u = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.2, 0.0]];
    let v = vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.1, 0.05]];
    println!("sets ordered {} strongly {}", cone.sets_ordered(&u, &v)?, cone.sets_strongly_ordered(&u, &v)?);

    // A k-dimensional probe subspace sits inside Int C.
    println!("probe subspace (columns):\n{}", cone.probe_subspace());
    let disc = cone.probe_neighborhood(&[0.0, 0.0, 1.0], 0.1, 5, 42)?;
    println!("probe neighborhood of (0,0,1): {disc:.3?}");

    // Boundary samples satisfy xᵀQx = 0 to rounding.
    let worst = cone.sample_boundary(1000, 7).iter().map(|v| cone.form(v).abs()).fold(0.0, f64::max);
    println!("max |form| over 1000 boundary samples: {worst:.2e}");

    // Rotated cones keep the signature.
    let rotated = QuadraticCone::random_basis(&[-1.0, -2.0, 0.5, 3.0], 11)?;
    let p: Vec<f64> = rotated.neg_frame().column(0).iter().copied().collect();
    assert_eq!(rotated.classify(&p)?.class, Membership::Interior);
    println!("random-basis cone in dim {}: rank {}, spec {}", rotated.dim(), rotated.rank(), serde_json::to_string(&rotated.to_spec()).unwrap());
    Ok(())
}

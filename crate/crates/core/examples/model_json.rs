//! Models from JSON: polynomial coefficients or built-in names with
//! parameters, and round trips through the zoo.
//!
//! cargo run --example model_json

use conewatch::classifier::{classify_orbit, ClassifierParams};
use conewatch::{zoo, ModelSpec, QuadraticCone};

fn main() -> conewatch::Result<()> {
    // Competitive-style polynomial: ẋ = x(1 − x − 2y), ẏ = y(1 − y − 2x).
    let text = r#"{
        "name": "two_species",
        "kind": "polynomial",
        "coefficients": [
            [{"coefficient": 1, "exponents": [1, 0]}, {"coefficient": -1, "exponents": [2, 0]}, {"coefficient": -2, "exponents": [1, 1]}],
            [{"coefficient": 1, "exponents": [0, 1]}, {"coefficient": -1, "exponents": [0, 2]}, {"coefficient": -2, "exponents": [1, 1]}]
        ]
    }"#;
    let spec: ModelSpec = serde_json::from_str(text).expect("valid model json");
    let model = spec.build()?;
    let x = [0.2, 0.1];
    let mut dx = [0.0; 2];
    model.eval(&x, &mut dx);
    println!("{} at {x:?}: {dx:?}", model.name());
    println!("Jacobian:\n{}", model.jacobian(&x).expect("polynomials have exact Jacobians"));

    // Order along e₁ − e₂ in the plane: rank-1 cone with negative direction (1, −1).
    let basis = nalgebra::DMatrix::from_column_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]) / 2f64.sqrt();
    let cone = QuadraticCone::new(&[-1.0, 1.0], Some(&basis))?;
    let rec = classify_orbit(model.as_ref(), &cone, &[0.3, 0.2], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0 / 3.0, 1.0 / 3.0], vec![0.0, 0.0]], &ClassifierParams::default())?;
    println!("orbit from (0.3, 0.2): {:?}, in_Q {}", rec.omega_class, rec.in_q);

    // Built-in models with parameters, and the JSON each zoo entry exports.
    let hopf: ModelSpec = serde_json::from_str(r#"{"name": "limit_cycle_3d", "kind": "builtin", "params": {"c": 10}}"#).unwrap();
    println!("builtin spec builds {}", hopf.build()?.name());
    let entry = zoo::get_model("linear_diag")?;
    println!("linear_diag as JSON: {}", serde_json::to_string(entry.spec()).unwrap());
    match serde_json::from_str::<ModelSpec>(r#"{"name": "x", "kind": "polynomial", "coeffs": []}"#) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("unknown fields are rejected"),
    }
    Ok(())
}

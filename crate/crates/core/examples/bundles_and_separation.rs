//! Dominated splitting E ⊕ F: bundle estimates, cone placement, and the
//! separation rate.
//!
//! cargo run --example bundles_and_separation

use conewatch::spectral::{estimate_separation, separation_ratios, verify_separation, SpectralOptions};
use conewatch::{zoo, Error, IntegratorConfig};

fn main() -> conewatch::Result<()> {
    let opts = SpectralOptions::default();
    for name in ["linear_diag", "limit_cycle_3d"] {
        let entry = zoo::get_model(name)?;
        let x0 = entry.facts.reference_point.clone().unwrap();
        let est = estimate_separation(entry.model.as_ref(), &x0, 2, 100.0, &opts)?;
        let check = verify_separation(&entry.recommended_cone, &est, 500, 1)?;
        println!(
            "{name}: λ_k {:.4}, gap {:.4}, γ ≈ {:.3e}, fit constant {:?}",
            est.lambda_k, est.gap, est.gamma_est, est.fit_constant
        );
        println!("  E =\n{:.5}  F =\n{:.5}", est.e.frame, est.f.frame);
        println!("  E_in_interior {} F_misses_cone {}", check.e_in_interior, check.f_misses_cone);

        let v: Vec<f64> = est.e.frame.column(0).iter().copied().collect();
        let w: Vec<f64> = est.f.frame.column(0).iter().copied().collect();
        let ratios = separation_ratios(entry.model.as_ref(), &x0, &v, &w, &[1.0, 2.0, 4.0], &IntegratorConfig::default())?;
        println!("  |Φ w| / |Φ v| at t = 1, 2, 4: {:?}", ratios.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>());
    }

    // Equal exponents leave no dominated splitting to estimate.
    let ld = zoo::get_model("linear_diag")?;
    match estimate_separation(ld.model.as_ref(), &[1.0, 1.0, 1.0], 1, 50.0, &opts) {
        Err(e @ Error::GapTooSmall { .. }) => println!("k = 1 on linear_diag: {e}"),
        other => println!("k = 1 on linear_diag: unexpected {other:?}"),
    }
    Ok(())
}

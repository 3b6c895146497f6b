//! Lyapunov exponents by QR re-orthonormalization of the variational flow.
//!
//! cargo run --example lyapunov_spectrum

use conewatch::dynamics::integrate_variational;
use conewatch::spectral::{k_lyapunov_exponent, lyapunov_spectrum, SpectralOptions};
use conewatch::{zoo, IntegratorConfig};

fn main() -> conewatch::Result<()> {
    let opts = SpectralOptions::default();
    for name in ["linear_diag", "limit_cycle_3d", "cyclic_feedback_3d"] {
        let entry = zoo::get_model(name)?;
        let x0 = entry.facts.reference_point.clone().unwrap_or(vec![0.5, 0.5, 0.5]);
        let s = lyapunov_spectrum(entry.model.as_ref(), &x0, 3, 100.0, &opts)?;
        println!(
            "{name}: exponents {:.4?}, sum {:.4} vs trace average {:.4}, convergence {:.1e}; expected {:?}",
            s.exponents,
            s.sum(),
            s.trace_average,
            s.convergence,
            entry.facts.exponents
        );
    }

    let lc = zoo::get_model("limit_cycle_3d")?;
    let l2 = k_lyapunov_exponent(lc.model.as_ref(), &[1.0, 0.0, 0.0], 2, 100.0, &opts)?;
    println!("limit_cycle_3d: λ_2 = {l2:.4}");

    // The raw fundamental matrix over one period.
    let (_, path) = integrate_variational(lc.model.as_ref(), &[1.0, 0.0, 0.0], 2.0 * std::f64::consts::PI, &IntegratorConfig::default())?;
    println!("monodromy matrix:\n{:.5}", path.final_matrix());
    Ok(())
}

//! Periodic-orbit check: records whose omega-limit set avoids every
//! equilibrium should be periodic orbits.
//!
//! cargo run --example poincare_bendixson_check

use conewatch::classifier::OmegaClass;
use conewatch::prevalence::{pb_check, sweep, SweepConfig};
use conewatch::zoo;

fn main() -> conewatch::Result<()> {
    for name in ["limit_cycle_3d", "cyclic_feedback_3d", "may_leonard"] {
        let entry = zoo::get_model(name)?;
        let mut cfg = SweepConfig::new(entry.default_box.clone(), 60, 3);
        cfg.horizon = Some(entry.sweep_horizon);
        let report = sweep(entry.model.as_ref(), &entry.recommended_cone, &cfg)?;
        let pb = pb_check(&report, report.eps_eq);
        let periods: Vec<f64> = report.records.iter().filter_map(|r| r.omega_class.period()).collect();
        let mean = if periods.is_empty() {
            "n/a".to_string()
        } else {
            format!("{:.4}", periods.iter().sum::<f64>() / periods.len() as f64)
        };
        println!(
            "{name}: {} eligible, {} periodic, {} violations; mean period {mean} over {} orbits",
            pb.eligible,
            pb.periodic,
            pb.violations.len(),
            periods.len()
        );
        // Near a heteroclinic cycle the orbit can still be far from every
        // saddle when the horizon ends, leaving it unresolved.
        for v in pb.violations.iter().take(3) {
            if let OmegaClass::Unresolved { note } = &v.omega_class {
                println!("  unresolved from {:?}: {}", v.x0, note.as_deref().unwrap_or(""));
            }
        }
    }
    Ok(())
}

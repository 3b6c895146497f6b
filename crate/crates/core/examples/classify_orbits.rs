//! Orbit classification: pseudo-order witnesses and omega-limit classes.
//!
//! cargo run --example classify_orbits

use conewatch::classifier::{classify_orbit, detect_pseudo_ordered, estimate_period, ClassifierParams};
use conewatch::dynamics::integrate;
use conewatch::zoo;

fn main() -> conewatch::Result<()> {
    for (name, starts) in [
        ("linear_diag", vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.5, -1.0, 1.5]]),
        ("limit_cycle_3d", vec![[0.5, 0.0, 0.5], [1.5, 1.0, -1.0], [0.0, 0.0, 1.0]]),
        ("may_leonard", vec![[0.3, 0.2, 0.1]]),
    ] {
        let entry = zoo::get_model(name)?;
        let mut params = ClassifierParams::default().for_box(&entry.default_box);
        params.transient = entry.sweep_horizon - params.tail_window;
        println!("{name}:");
        for x0 in starts {
            let rec = classify_orbit(entry.model.as_ref(), &entry.recommended_cone, &x0, &entry.facts.equilibria, &params)?;
            let witness = rec
                .pseudo_order_witness
                .map(|w| format!("t1 = {:.2}, t2 = {:.2}, form {:.3e}", w.t1, w.t2, w.form_value))
                .unwrap_or_else(|| "none".into());
            println!(
                "  x0 {x0:?}: {:?}; in_Q {} in_S {}; witness {witness}; horizon used {}",
                rec.omega_class, rec.in_q, rec.in_s, rec.horizon_used
            );
        }
    }

    // The building blocks are available on their own.
    let lc = zoo::get_model("limit_cycle_3d")?;
    let params = ClassifierParams::default();
    let traj = integrate(lc.model.as_ref(), &[1.0, 0.0, 0.0], 30.0, &params.integrator)?;
    let tail = traj.tail_from(10.0);
    println!("period from closest returns: {:?}", estimate_period(&tail, params.rec_tol, params.min_period));
    println!("witness on the raw trajectory: {:?}", detect_pseudo_ordered(&traj, &lc.recommended_cone, 1e-4, 1e-6));
    Ok(())
}

//! Probe neighborhoods: classify points on a small disc of the translated
//! probe subspace.
//!
//! cargo run --example probe_scan

use conewatch::classifier::ClassifierParams;
use conewatch::prevalence::probe_scan;
use conewatch::zoo;

fn main() -> conewatch::Result<()> {
    let lc = zoo::get_model("limit_cycle_3d")?;
    let params = ClassifierParams::default().for_box(&lc.default_box);
    // (0,0,1) sits on the invariant z-axis, whose orbit is not pseudo-ordered;
    // nearby probe points still are.
    for center in [[0.0, 0.0, 1.0], [0.5, 0.5, 0.0]] {
        let scan = probe_scan(lc.model.as_ref(), &lc.recommended_cone, &center, 0.1, 40, 9, &lc.facts.equilibria, &params)?;
        let periodic = scan.per_point.iter().filter(|r| r.omega_class.period().is_some()).count();
        println!("center {center:?}: fraction_in_Q {} ({periodic} of {} periodic)", scan.fraction_in_q, scan.per_point.len());
    }
    let note = probe_scan(lc.model.as_ref(), &lc.recommended_cone, &[0.0, 0.0, 1.0], 0.1, 1, 9, &lc.facts.equilibria, &params)?.note;
    println!("{note}");
    Ok(())
}

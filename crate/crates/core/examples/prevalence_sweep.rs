//! Monte Carlo sweep: fraction of sampled initial points in Q ∪ S.
//!
//! cargo run --example prevalence_sweep -- [model] [n] [seed]

use conewatch::prevalence::{sweep, SweepConfig};
use conewatch::zoo;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "limit_cycle_3d".into());
    let n: usize = args.next().map_or(200, |s| s.parse().expect("n must be a count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed must be an integer"));

    let entry = zoo::get_model(&name)?;
    let mut cfg = SweepConfig::new(entry.default_box.clone(), n, seed);
    cfg.horizon = Some(entry.sweep_horizon);
    let report = sweep(entry.model.as_ref(), &entry.recommended_cone, &cfg)?;

    println!("{name}, {n} points, seed {seed}");
    println!("counts: {:?}", report.counts);
    println!("in Q {} in S {} in Q ∪ S {} -> fraction {}", report.n_in_q, report.n_in_s, report.n_in_q_union_s, report.fraction_q_union_s);
    println!("equilibria found: {:?}", report.equilibria);
    println!("bounded: {}", report.dissipativity.bounded);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    let dir = std::env::temp_dir().join("conewatch-prevalence");
    let (json, csv) = report.write_outputs(&dir)?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

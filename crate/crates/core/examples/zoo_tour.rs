//! Tour of the built-in models and their documented facts.
//!
//! cargo run --example zoo_tour

use conewatch::dynamics::{dissipativity_probe, find_equilibria};
use conewatch::zoo;

fn main() -> conewatch::Result<()> {
    for name in zoo::NAMES {
        let e = zoo::get_model(name)?;
        let eq = find_equilibria(e.model.as_ref(), &e.default_box, 7, 1e-10);
        let dis = dissipativity_probe(e.model.as_ref(), &e.default_box, 50.0, 8, 1, &Default::default())?;
        println!("{name} (dim {}):", e.model.dim());
        println!("  cone eigenvalues {:?}, recommended λ {:?}", e.recommended_cone.eigenvalues(), e.recommended_lambda);
        println!("  box {:?} .. {:?}, sweep horizon {}", e.default_box.lower, e.default_box.upper, e.sweep_horizon);
        println!("  equilibria found {eq:.4?}");
        println!("  documented: period {:?}, exponents {:?}, cooperative {:?}", e.facts.period, e.facts.exponents, e.facts.cooperative);
        println!("  bounded {} (max norm {:.3})", dis.bounded, dis.max_norm);
        println!("  {}", e.facts.notes);
    }
    Ok(())
}

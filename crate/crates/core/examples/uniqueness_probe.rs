//! Shoots from several initial costates and reports how many distinct
//! extremals they reach.

use campaignctl::solver::{uniqueness_probe, UNIQUENESS_SEPARATION};
use campaignctl::{SirParams, SisParams, SolverOptions};

pub fn main() -> campaignctl::Result<()> {
    let opts = SolverOptions::shooting();
    let sis = uniqueness_probe(&SisParams::default(), &[[0.0], [1.0], [2.0], [5.0]], &opts)?;
    let sir = uniqueness_probe(
        &SirParams::default(),
        &[[-1.0, 0.0], [0.0, 0.0], [-2.0, 0.0], [-5.0, 0.0]],
        &opts,
    )?;
    println!("separation {UNIQUENESS_SEPARATION:e}");
    println!("SIS clusters={} spread={:.2e}", sis.cluster_count(), sis.spread());
    for c in &sis.clusters {
        println!("  lambda0={:?} J={:.8} members={:?}", c.lambda0, c.cost, c.members);
    }
    println!("SIR clusters={} spread={:.2e}", sir.cluster_count(), sir.spread());
    for c in &sir.clusters {
        println!("  lambda0={:?} J={:.8} members={:?}", c.lambda0, c.cost, c.members);
    }
    Ok(())
}

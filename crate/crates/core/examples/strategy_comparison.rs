//! Prices the four campaign strategies on both baseline models.

use campaignctl::experiments::control_effort;
use campaignctl::model::Model;
use campaignctl::{SirParams, SisParams, SolverOptions, Strategy};

pub fn main() -> campaignctl::Result<()> {
    let strategies = [
        Strategy::NoControl,
        Strategy::ConstantHalfMax,
        Strategy::HeuristicFollow,
        Strategy::Optimal(SolverOptions::shooting()),
    ];
    for model in [Model::from(SisParams::default()), Model::from(SirParams::default())] {
        println!("{}", model.kind());
        for strategy in &strategies {
            let eval = model.evaluate(strategy)?;
            let effort: f64 = eval.controls().iter().map(control_effort).sum();
            let final_reached = 1.0 - eval.compartments().terminal()[0];
            println!(
                "  {:<10} J={:+.6} effort={effort:.4} reached={final_reached:.4}",
                strategy.name(),
                eval.cost()
            );
        }
    }
    Ok(())
}

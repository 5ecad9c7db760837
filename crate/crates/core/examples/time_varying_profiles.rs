//! Optimal SIS and SIR campaigns under rising, falling and seasonal
//! spreading rates, plus a tabulated profile.

use campaignctl::solver::solve;
use campaignctl::{RateProfile, SirParams, SisParams, SolverOptions};

pub fn main() -> campaignctl::Result<()> {
    let table = RateProfile::Table {
        times: vec![0.0, 2.5, 5.0],
        values: vec![0.5, 1.5, 0.5],
    };
    let profiles = [
        RateProfile::constant(1.0),
        RateProfile::reference_sigmoid_up(),
        RateProfile::reference_sigmoid_down(),
        RateProfile::reference_cosine(),
        table,
    ];
    let opts = SolverOptions::shooting();
    for beta in profiles {
        let name = beta.variant_name();
        let sis = solve(&SisParams::default().with_beta(beta.clone()), &opts)?;
        let sir = solve(&SirParams::default().with_beta(beta), &opts)?;
        println!(
            "{name:<12} SIS J={:.6} peak u={:.4} | SIR J={:.6} peak u1={:.4}",
            sis.cost,
            sis.controls[0].max_value(),
            sir.cost,
            sir.controls[0].max_value()
        );
    }
    Ok(())
}

//! Perturbs the optimal controls along smooth admissible directions and
//! checks that no direction lowers the cost to first order.

use campaignctl::solver::{solve, verify_stationarity, STATIONARITY_EPS, STATIONARITY_TOL};
use campaignctl::{SirParams, SisParams, SolverOptions};

pub fn main() -> campaignctl::Result<()> {
    let opts = SolverOptions::shooting();
    let sis = SisParams::default();
    let report = verify_stationarity(&sis, &solve(&sis, &opts)?, 32, STATIONARITY_EPS, 7)?;
    println!(
        "SIS worst dJ/deps={:.3e} stationary={}",
        report.worst,
        report.is_stationary(STATIONARITY_TOL)
    );
    let sir = SirParams::default();
    let report = verify_stationarity(&sir, &solve(&sir, &opts)?, 32, STATIONARITY_EPS, 7)?;
    println!(
        "SIR worst dJ/deps={:.3e} stationary={}",
        report.worst,
        report.is_stationary(STATIONARITY_TOL)
    );
    Ok(())
}

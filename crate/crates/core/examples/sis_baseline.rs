//! Solves the baseline SIS campaign with both solvers and prints the
//! optimal cost, the initial costate and the spend profile.

use campaignctl::solver::solve;
use campaignctl::{ControlProblem, SisParams, SolverOptions};

pub fn main() -> campaignctl::Result<()> {
    let problem = SisParams::default();
    for opts in [SolverOptions::shooting(), SolverOptions::fbs()] {
        let sol = solve(&problem, &opts)?;
        println!(
            "{:<8} J={:.8} lambda(0)={:.6} residual={:.1e} iterations={}",
            opts.method.name(),
            sol.cost,
            sol.initial_costate()[0],
            sol.residual,
            sol.iterations
        );
    }

    let sol = solve(&problem, &SolverOptions::shooting())?;
    let (j_none, uncontrolled) = problem.evaluate(&problem.zero_controls())?;
    println!("no control: J={j_none:.8} i(T)={:.6}", uncontrolled.terminal()[0]);
    println!("optimal:    i(T)={:.6}", sol.state.terminal()[0]);
    for t in [0.0, 1.0, 2.0, 3.0, 4.0, 5.0] {
        println!("  t={t:.1} i={:.4} u={:.5}", sol.state.sample(t)?[0], sol.controls[0].sample(t)?);
    }
    Ok(())
}

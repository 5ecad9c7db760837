//! SIR campaign with direct recruitment (u1) and word-of-mouth boost (u2).
//! Compares the derived optimality system with the literal printed forms.

use campaignctl::experiments::control_effort;
use campaignctl::solver::solve;
use campaignctl::{SirParams, SolverOptions};

pub fn main() -> campaignctl::Result<()> {
    for literal in [false, true] {
        let problem = SirParams::default().with_literal_forms(literal);
        let sol = solve(&problem, &SolverOptions::shooting())?;
        let [s, r] = sol.state.terminal();
        println!(
            "literal={literal:<5} J={:.8} s(T)={s:.4} i(T)={:.4} r(T)={r:.4}",
            sol.cost,
            1.0 - s - r
        );
        println!(
            "  max u1={:.4} max u2={:.4} effort u1={:.4} u2={:.4}",
            sol.controls[0].max_value(),
            sol.controls[1].max_value(),
            control_effort(&sol.controls[0]),
            control_effort(&sol.controls[1])
        );
    }
    Ok(())
}

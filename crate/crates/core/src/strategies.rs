//! Campaign strategies: no control, constant half-max, the open-loop
//! "follow the uncontrolled susceptibles" heuristic, and the optimal control.

use crate::error::{Error, Result};
use crate::integrator::{ControlGrid, Trajectory};
use crate::problem::{ControlProblem, Controls};
use crate::sir::SirParams;
use crate::sis::SisParams;
use crate::solver::{solve, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    NoControl,
    /// Every control held at half of its box.
    ConstantHalfMax,
    /// Open-loop schedule shaped by the uncontrolled trajectory.
    HeuristicFollow,
    Optimal(SolverOptions),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::NoControl => "none",
            Strategy::ConstantHalfMax => "constant",
            Strategy::HeuristicFollow => "heuristic",
            Strategy::Optimal(_) => "optimal",
        }
    }

    /// Parses `none`, `constant`, `heuristic` or `optimal` (the latter with `opts`).
    pub fn parse(name: &str, opts: &SolverOptions) -> Option<Strategy> {
        match name {
            "none" | "no_control" => Some(Strategy::NoControl),
            "constant" | "constant_half_max" => Some(Strategy::ConstantHalfMax),
            "heuristic" | "heuristic_follow" | "follow" => Some(Strategy::HeuristicFollow),
            "optimal" => Some(Strategy::Optimal(opts.clone())),
            _ => None,
        }
    }
}

/// Maps an uncontrolled state to the heuristic control levels.
pub trait FollowHeuristic<const N: usize, const M: usize>: ControlProblem<N, M> {
    fn follow(&self, uncontrolled: &[f64; N]) -> [f64; M];
}

impl FollowHeuristic<1, 1> for SisParams {
    /// `u_max · s_nc(t)`
    fn follow(&self, x: &[f64; 1]) -> [f64; 1] {
        [self.u_max * (1.0 - x[0])]
    }
}

impl FollowHeuristic<2, 2> for SirParams {
    /// `(u1_max · s_nc(t), u2_max · s_nc(t) · i_nc(t))`
    fn follow(&self, x: &[f64; 2]) -> [f64; 2] {
        let [s, r] = *x;
        [self.u1_max * s, self.u2_max * s * (1.0 - s - r)]
    }
}

/// Control schedules produced by `strategy`. For `Optimal`, a solve that does
/// not converge is reported as [`Error::NotConverged`].
pub fn build_controls<const N: usize, const M: usize, P: FollowHeuristic<N, M>>(
    strategy: &Strategy,
    problem: &P,
) -> Result<(Controls<M>, usize)> {
    problem.validate()?;
    let grid = problem.grid();
    let bounds = problem.control_bounds();
    match strategy {
        Strategy::NoControl => Ok((problem.zero_controls(), 0)),
        Strategy::ConstantHalfMax => Ok((std::array::from_fn(|m| ControlGrid::constant(grid, 0.5 * bounds[m])), 0)),
        Strategy::HeuristicFollow => {
            let uncontrolled = problem.simulate(&problem.zero_controls())?;
            let levels: Vec<[f64; M]> = uncontrolled.states().iter().map(|x| problem.follow(x)).collect();
            let controls: Controls<M> =
                std::array::from_fn(|m| ControlGrid::from_fn(grid, |k, _| levels[k][m]));
            for (u, &ub) in controls.iter().zip(&bounds) {
                assert!(u.min_value() >= 0.0 && u.max_value() <= ub, "heuristic left its control box");
            }
            Ok((controls, 0))
        }
        Strategy::Optimal(opts) => {
            let sol = solve(problem, opts)?;
            if !sol.converged {
                return Err(Error::NotConverged {
                    iterations: sol.iterations,
                    residual: sol.residual,
                    cost: sol.cost,
                });
            }
            Ok((sol.controls, sol.iterations))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation<const N: usize, const M: usize> {
    pub cost: f64,
    pub trajectory: Trajectory<[f64; N]>,
    pub controls: Controls<M>,
    /// Solver iterations (0 for the closed-form strategies).
    pub iterations: usize,
}

/// Builds the strategy's controls, integrates the state under them and
/// prices the result with the model's cost functional.
pub fn evaluate_strategy<const N: usize, const M: usize, P: FollowHeuristic<N, M>>(
    strategy: &Strategy,
    problem: &P,
) -> Result<Evaluation<N, M>> {
    let (controls, iterations) = build_controls(strategy, problem)?;
    let (cost, trajectory) = problem.evaluate(&controls)?;
    Ok(Evaluation {
        cost,
        trajectory,
        controls,
        iterations,
    })
}

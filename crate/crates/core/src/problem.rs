//! The interface shared by the SIS and SIR campaign problems.
//!
//! A problem has `N` state variables (in the reduced form) and `M` controls.
//! Everything the solvers, strategies and diagnostics need is expressed in
//! terms of this trait, so both epidemic models go through identical code.

use crate::error::{Error, Result};
use crate::integrator::{
    integrate_backward, integrate_forward_projected, trapezoid, ControlGrid, TimeGrid, Trajectory,
};

/// One control signal per control channel.
pub type Controls<const M: usize> = [ControlGrid; M];

pub trait ControlProblem<const N: usize, const M: usize>: Sync {
    /// Names of the reduced state components, in order.
    const STATE_NAMES: [&'static str; N];
    /// Names of the control channels, in order.
    const CONTROL_NAMES: [&'static str; M];

    fn validate(&self) -> Result<()>;

    fn grid(&self) -> TimeGrid;

    fn initial_state(&self) -> [f64; N];

    /// Terminal costate fixed by the transversality condition.
    fn terminal_costate(&self) -> [f64; N];

    /// Upper bounds of the control boxes `[0, bound]`.
    fn control_bounds(&self) -> [f64; M];

    fn state_rhs(&self, t: f64, x: &[f64; N], u: &[f64; M]) -> [f64; N];

    fn adjoint_rhs(&self, t: f64, x: &[f64; N], lam: &[f64; N], u: &[f64; M]) -> [f64; N];

    /// Pointwise maximiser of the Hamiltonian over the control box.
    fn hamiltonian_control(&self, t: f64, x: &[f64; N], lam: &[f64; N]) -> [f64; M];

    /// Integrand of the running cost.
    fn running_cost(&self, u: &[f64; M]) -> f64;

    fn terminal_cost(&self, x: &[f64; N]) -> f64;

    /// Snaps rounding noise back into the admissible state set, or rejects
    /// a state that left it by more than noise.
    fn project_state(&self, step: usize, x: [f64; N]) -> Result<[f64; N]>;

    /// Integrates the state equations under gridded controls.
    fn simulate(&self, controls: &Controls<M>) -> Result<Trajectory<[f64; N]>> {
        let grid = self.grid();
        check_controls(grid, controls)?;
        integrate_forward_projected(
            |t, x| self.state_rhs(t, x, &sample_all(controls, t)),
            self.initial_state(),
            grid,
            |k, x| self.project_state(k, x),
        )
    }

    /// Integrates the adjoint equations backwards along `state` under `controls`.
    fn costate(&self, state: &Trajectory<[f64; N]>, controls: &Controls<M>) -> Result<Trajectory<[f64; N]>> {
        check_controls(state.grid(), controls)?;
        integrate_backward(
            |t, lam, x| self.adjoint_rhs(t, x, lam, &sample_all(controls, t)),
            self.terminal_costate(),
            state,
        )
    }

    /// Terminal cost plus trapezoid-rule running cost on the shared grid.
    fn cost(&self, state: &Trajectory<[f64; N]>, controls: &Controls<M>) -> Result<f64> {
        check_controls(state.grid(), controls)?;
        let grid = state.grid();
        let running = trapezoid(
            grid,
            (0..grid.node_count()).map(|k| self.running_cost(&node_values(controls, k))),
        );
        Ok(self.terminal_cost(&state.terminal()) + running)
    }

    /// Simulates and prices a control schedule.
    fn evaluate(&self, controls: &Controls<M>) -> Result<(f64, Trajectory<[f64; N]>)> {
        let traj = self.simulate(controls)?;
        let j = self.cost(&traj, controls)?;
        Ok((j, traj))
    }

    /// Hamiltonian-maximising controls at every node of a state/costate pair.
    fn hamiltonian_controls(
        &self,
        state: &Trajectory<[f64; N]>,
        adjoint: &Trajectory<[f64; N]>,
    ) -> Result<Controls<M>> {
        let grid = state.grid();
        if adjoint.grid() != grid {
            return Err(Error::Shape("state and adjoint on different grids".into()));
        }
        let nodes: Vec<[f64; M]> = (0..grid.node_count())
            .map(|k| self.hamiltonian_control(grid.time(k), &state.states()[k], &adjoint.states()[k]))
            .collect();
        Ok(std::array::from_fn(|m| {
            ControlGrid::from_fn(grid, |k, _| nodes[k][m])
        }))
    }

    fn zero_controls(&self) -> Controls<M> {
        let grid = self.grid();
        std::array::from_fn(|_| ControlGrid::zeros(grid))
    }
}

pub(crate) fn check_controls<const M: usize>(grid: TimeGrid, controls: &Controls<M>) -> Result<()> {
    for u in controls {
        if u.grid() != grid {
            return Err(Error::Shape(format!(
                "control grid ({} steps on [{}, {}]) differs from the state grid ({} steps on [{}, {}])",
                u.grid().n_steps(),
                u.grid().t0(),
                u.grid().t_end(),
                grid.n_steps(),
                grid.t0(),
                grid.t_end()
            )));
        }
    }
    Ok(())
}

pub(crate) fn sample_all<const M: usize>(controls: &Controls<M>, t: f64) -> [f64; M] {
    std::array::from_fn(|m| controls[m].sample_clamped(t))
}

pub(crate) fn node_values<const M: usize>(controls: &Controls<M>, k: usize) -> [f64; M] {
    std::array::from_fn(|m| controls[m].values()[k])
}

/// `min(max(x, 0), upper)`.
pub fn clamp_box(x: f64, upper: f64) -> f64 {
    x.max(0.0).min(upper)
}

//! Controlled SIS campaign with direct recruitment.
//!
//! Reduced one-state form: with `s = 1 - i`,
//!
//! ```text
//! i' = -β i² + (β - γ - u) i + u
//! J  = -i(T) + ∫ b u² dt
//! ```
//!
//! The costate obeys `λ' = 2 β i λ - (β - γ - u) λ` with `λ(T) = 1`, and the
//! Hamiltonian is maximised by `u* = clamp(λ (1 - i) / (2b), 0, u_max)`.

use crate::error::{Error, Result};
use crate::integrator::{ControlGrid, TimeGrid, Trajectory};
use crate::problem::{clamp_box, ControlProblem};
use crate::profiles::{BetaProfile, RateProfile};

/// Out-of-range excursions up to this size are treated as rounding noise.
pub const STATE_NOISE: f64 = 1e-9;

/// Reduced SIS state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisState {
    pub i: f64,
}

impl SisState {
    pub fn s(&self) -> f64 {
        1.0 - self.i
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisAdjoint {
    pub lam: f64,
}

/// One SIS problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SisParams {
    pub beta: BetaProfile,
    pub gamma: RateProfile,
    /// Campaign deadline T.
    pub t_final: f64,
    /// Running-cost weight.
    pub b: f64,
    pub u_max: f64,
    pub i0: f64,
    pub n_steps: usize,
}

impl Default for SisParams {
    /// β = 1, γ = 0.1, T = 5, b = 15, u_max = 0.06, i₀ = 0.01 on 5000 steps.
    fn default() -> Self {
        SisParams {
            beta: RateProfile::constant(1.0),
            gamma: RateProfile::constant(0.1),
            t_final: 5.0,
            b: 15.0,
            u_max: 0.06,
            i0: 0.01,
            n_steps: 5000,
        }
    }
}

impl SisParams {
    pub fn with_beta(mut self, beta: BetaProfile) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = RateProfile::constant(gamma);
        self
    }

    /// Changes T, keeping the step size.
    pub fn with_horizon(mut self, t_final: f64) -> Self {
        let per_unit = self.n_steps as f64 / self.t_final;
        self.n_steps = ((t_final * per_unit).round() as usize).max(1);
        self.t_final = t_final;
        self
    }

    pub fn with_u_max(mut self, u_max: f64) -> Self {
        self.u_max = u_max;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }
}

pub fn sis_state_rhs(i: f64, u: f64, beta_t: f64, gamma_t: f64) -> f64 {
    -beta_t * i * i + (beta_t - gamma_t - u) * i + u
}

pub fn sis_adjoint_rhs(i: f64, lam: f64, u: f64, beta_t: f64, gamma_t: f64) -> f64 {
    2.0 * beta_t * i * lam - (beta_t - gamma_t - u) * lam
}

pub fn sis_optimal_control(i: f64, lam: f64, b: f64, u_max: f64) -> f64 {
    clamp_box(lam * (1.0 - i) / (2.0 * b), u_max)
}

/// `-i(T) + ∫ b u²`, trapezoid rule on the shared grid.
pub fn sis_cost(traj: &Trajectory<[f64; 1]>, u: &ControlGrid, b: f64) -> Result<f64> {
    if traj.grid() != u.grid() {
        return Err(Error::Shape("SIS trajectory and control on different grids".into()));
    }
    Ok(-traj.terminal()[0] + u.trapezoid_of(|v| b * v * v))
}

impl ControlProblem<1, 1> for SisParams {
    const STATE_NAMES: [&'static str; 1] = ["i"];
    const CONTROL_NAMES: [&'static str; 1] = ["u"];

    fn validate(&self) -> Result<()> {
        self.beta.validate()?;
        self.gamma.validate()?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be > 0"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::invalid("b", "must be > 0"));
        }
        if !(self.u_max.is_finite() && self.u_max >= 0.0) {
            return Err(Error::invalid("u_max", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.i0) {
            return Err(Error::invalid("i0", format!("{} is not a fraction in [0, 1]", self.i0)));
        }
        if !self.beta.covers(0.0, self.t_final) || !self.gamma.covers(0.0, self.t_final) {
            return Err(Error::invalid("beta", "profile table does not cover [0, T]"));
        }
        TimeGrid::new(0.0, self.t_final, self.n_steps)?;
        Ok(())
    }

    fn grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, self.t_final, self.n_steps).expect("validated SIS grid")
    }

    fn initial_state(&self) -> [f64; 1] {
        [self.i0]
    }

    fn terminal_costate(&self) -> [f64; 1] {
        [1.0]
    }

    fn control_bounds(&self) -> [f64; 1] {
        [self.u_max]
    }

    fn state_rhs(&self, t: f64, x: &[f64; 1], u: &[f64; 1]) -> [f64; 1] {
        [sis_state_rhs(x[0], u[0], self.beta.eval(t), self.gamma.eval(t))]
    }

    fn adjoint_rhs(&self, t: f64, x: &[f64; 1], lam: &[f64; 1], u: &[f64; 1]) -> [f64; 1] {
        [sis_adjoint_rhs(x[0], lam[0], u[0], self.beta.eval(t), self.gamma.eval(t))]
    }

    fn hamiltonian_control(&self, _t: f64, x: &[f64; 1], lam: &[f64; 1]) -> [f64; 1] {
        [sis_optimal_control(x[0], lam[0], self.b, self.u_max)]
    }

    fn running_cost(&self, u: &[f64; 1]) -> f64 {
        self.b * u[0] * u[0]
    }

    fn terminal_cost(&self, x: &[f64; 1]) -> f64 {
        -x[0]
    }

    fn project_state(&self, step: usize, x: [f64; 1]) -> Result<[f64; 1]> {
        let i = x[0];
        if (-STATE_NOISE..=1.0 + STATE_NOISE).contains(&i) {
            Ok([i.clamp(0.0, 1.0)])
        } else {
            Err(Error::StateOutOfRange {
                step,
                detail: format!("i = {i}"),
            })
        }
    }
}

/// Closed-form uncontrolled SIS solution for constant rates (logistic curve).
pub fn logistic_infected(beta: f64, gamma: f64, i0: f64, t: f64) -> f64 {
    let r = beta - gamma;
    let k = 1.0 - gamma / beta;
    k / (1.0 + (k / i0 - 1.0) * (-r * t).exp())
}

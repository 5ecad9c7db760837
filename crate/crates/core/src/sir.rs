//! Controlled SIR campaign with direct recruitment `u1` and word-of-mouth
//! incentive `u2`.
//!
//! Reduced two-state form with `i = 1 - s - r`:
//!
//! ```text
//! s' = -(β + u2) s i - u1 s
//! r' = γ i
//! J  = -1 + s(T) + ∫ (b u1² + c u2²) dt
//! ```
//!
//! The adjoint equations and the `u2` law below are obtained by
//! differentiating the Hamiltonian
//! `H = -b u1² - c u2² + λs [-(β+u2) s i - u1 s] + λr γ i`:
//!
//! ```text
//! λs' = (β + u2) λs (1 - 2s - r) + u1 λs + γ λr
//! λr' = -(β + u2) λs s + γ λr
//! u1* = clamp(-λs s / (2b), 0, u1_max)
//! u2* = clamp(-λs s i / (2c), 0, u2_max)
//! ```
//!
//! with `λs(T) = -1`, `λr(T) = 0`. Setting [`SirParams::literal_forms`]
//! switches `λr'` to `-β λs s + λs u2 s + γ λr` and the `u2` factor `i` to
//! `(1 - 2s - r)`.

use crate::error::{Error, Result};
use crate::integrator::{ControlGrid, TimeGrid, Trajectory};
use crate::problem::{clamp_box, ControlProblem};
use crate::profiles::{BetaProfile, RateProfile};
use crate::sis::STATE_NOISE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirState {
    pub s: f64,
    pub r: f64,
}

impl SirState {
    pub fn i(&self) -> f64 {
        1.0 - self.s - self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirAdjoint {
    pub lam_s: f64,
    pub lam_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirParams {
    pub beta: BetaProfile,
    pub gamma: RateProfile,
    pub t_final: f64,
    /// Weight of the direct-recruitment cost.
    pub b: f64,
    /// Weight of the word-of-mouth cost.
    pub c: f64,
    pub u1_max: f64,
    pub u2_max: f64,
    pub i0: f64,
    pub n_steps: usize,
    /// Use the alternative `λr'` and `u2*` forms (see module docs).
    pub literal_forms: bool,
}

impl Default for SirParams {
    /// β = 1, γ = 0.1, T = 5, b = 15, c = 1, u1_max = 0.06, u2_max = 0.3, i₀ = 0.01.
    fn default() -> Self {
        SirParams {
            beta: RateProfile::constant(1.0),
            gamma: RateProfile::constant(0.1),
            t_final: 5.0,
            b: 15.0,
            c: 1.0,
            u1_max: 0.06,
            u2_max: 0.3,
            i0: 0.01,
            n_steps: 5000,
            literal_forms: false,
        }
    }
}

impl SirParams {
    pub fn with_beta(mut self, beta: BetaProfile) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = RateProfile::constant(gamma);
        self
    }

    pub fn with_horizon(mut self, t_final: f64) -> Self {
        let per_unit = self.n_steps as f64 / self.t_final;
        self.n_steps = ((t_final * per_unit).round() as usize).max(1);
        self.t_final = t_final;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_literal_forms(mut self, on: bool) -> Self {
        self.literal_forms = on;
        self
    }
}

/// Returns `(ds/dt, dr/dt)`.
pub fn sir_state_rhs(s: f64, r: f64, u1: f64, u2: f64, beta_t: f64, gamma_t: f64) -> (f64, f64) {
    let i = 1.0 - s - r;
    (-(beta_t + u2) * s * i - u1 * s, gamma_t * i)
}

/// Returns `(dλs/dt, dλr/dt)` from the Hamiltonian derivative.
#[allow(clippy::too_many_arguments)]
pub fn sir_adjoint_rhs(
    s: f64,
    r: f64,
    lam_s: f64,
    lam_r: f64,
    u1: f64,
    u2: f64,
    beta_t: f64,
    gamma_t: f64,
) -> (f64, f64) {
    let rate = beta_t + u2;
    (
        rate * lam_s * (1.0 - 2.0 * s - r) + u1 * lam_s + gamma_t * lam_r,
        -rate * lam_s * s + gamma_t * lam_r,
    )
}

/// Alternative adjoint with `+ λs u2 s` in the `λr` equation.
#[allow(clippy::too_many_arguments)]
pub fn sir_adjoint_rhs_literal(
    s: f64,
    r: f64,
    lam_s: f64,
    lam_r: f64,
    u1: f64,
    u2: f64,
    beta_t: f64,
    gamma_t: f64,
) -> (f64, f64) {
    let (dls, _) = sir_adjoint_rhs(s, r, lam_s, lam_r, u1, u2, beta_t, gamma_t);
    (dls, -beta_t * lam_s * s + lam_s * u2 * s + gamma_t * lam_r)
}

pub fn sir_optimal_u1(s: f64, lam_s: f64, b: f64, u1_max: f64) -> f64 {
    clamp_box(-lam_s * s / (2.0 * b), u1_max)
}

pub fn sir_optimal_u2(s: f64, r: f64, lam_s: f64, c: f64, u2_max: f64) -> f64 {
    clamp_box(-lam_s * s * (1.0 - s - r) / (2.0 * c), u2_max)
}

/// Alternative word-of-mouth law with the factor `(1 - 2s - r)`.
pub fn sir_optimal_u2_literal(s: f64, r: f64, lam_s: f64, c: f64, u2_max: f64) -> f64 {
    clamp_box(-lam_s * s * (1.0 - 2.0 * s - r) / (2.0 * c), u2_max)
}

/// `-1 + s(T) + ∫ (b u1² + c u2²)`, trapezoid rule.
pub fn sir_cost(traj: &Trajectory<[f64; 2]>, u1: &ControlGrid, u2: &ControlGrid, b: f64, c: f64) -> Result<f64> {
    if traj.grid() != u1.grid() || traj.grid() != u2.grid() {
        return Err(Error::Shape("SIR trajectory and controls on different grids".into()));
    }
    Ok(-1.0 + traj.terminal()[0] + u1.trapezoid_of(|v| b * v * v) + u2.trapezoid_of(|v| c * v * v))
}

impl ControlProblem<2, 2> for SirParams {
    const STATE_NAMES: [&'static str; 2] = ["s", "r"];
    const CONTROL_NAMES: [&'static str; 2] = ["u1", "u2"];

    fn validate(&self) -> Result<()> {
        self.beta.validate()?;
        self.gamma.validate()?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be > 0"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::invalid("b", "must be > 0"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid("c", "must be > 0"));
        }
        if !(self.u1_max.is_finite() && self.u1_max >= 0.0) {
            return Err(Error::invalid("u1_max", "must be >= 0"));
        }
        if !(self.u2_max.is_finite() && self.u2_max >= 0.0) {
            return Err(Error::invalid("u2_max", "must be >= 0"));
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
        TimeGrid::new(0.0, self.t_final, self.n_steps).expect("validated SIR grid")
    }

    fn initial_state(&self) -> [f64; 2] {
        [1.0 - self.i0, 0.0]
    }

    fn terminal_costate(&self) -> [f64; 2] {
        [-1.0, 0.0]
    }

    fn control_bounds(&self) -> [f64; 2] {
        [self.u1_max, self.u2_max]
    }

    fn state_rhs(&self, t: f64, x: &[f64; 2], u: &[f64; 2]) -> [f64; 2] {
        let (ds, dr) = sir_state_rhs(x[0], x[1], u[0], u[1], self.beta.eval(t), self.gamma.eval(t));
        [ds, dr]
    }

    fn adjoint_rhs(&self, t: f64, x: &[f64; 2], lam: &[f64; 2], u: &[f64; 2]) -> [f64; 2] {
        let f = if self.literal_forms {
            sir_adjoint_rhs_literal
        } else {
            sir_adjoint_rhs
        };
        let (a, b) = f(x[0], x[1], lam[0], lam[1], u[0], u[1], self.beta.eval(t), self.gamma.eval(t));
        [a, b]
    }

    fn hamiltonian_control(&self, _t: f64, x: &[f64; 2], lam: &[f64; 2]) -> [f64; 2] {
        let u1 = sir_optimal_u1(x[0], lam[0], self.b, self.u1_max);
        let u2 = if self.literal_forms {
            sir_optimal_u2_literal(x[0], x[1], lam[0], self.c, self.u2_max)
        } else {
            sir_optimal_u2(x[0], x[1], lam[0], self.c, self.u2_max)
        };
        [u1, u2]
    }

    fn running_cost(&self, u: &[f64; 2]) -> f64 {
        self.b * u[0] * u[0] + self.c * u[1] * u[1]
    }

    fn terminal_cost(&self, x: &[f64; 2]) -> f64 {
        -1.0 + x[0]
    }

    fn project_state(&self, step: usize, x: [f64; 2]) -> Result<[f64; 2]> {
        let [s, r] = x;
        let ok = s >= -STATE_NOISE && r >= -STATE_NOISE && s + r <= 1.0 + STATE_NOISE;
        if !ok {
            return Err(Error::StateOutOfRange {
                step,
                detail: format!("s = {s}, r = {r}"),
            });
        }
        let s = s.clamp(0.0, 1.0);
        let r = r.max(0.0).min(1.0 - s);
        Ok([s, r])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn state_rhs_examples() {
        let (ds, dr) = sir_state_rhs(0.0, 0.3, 0.05, 0.2, 1.0, 0.1);
        assert_eq!(ds, 0.0);
        assert_abs_diff_eq!(dr, 0.1 * 0.7, epsilon = 1e-15);

        assert_eq!(sir_state_rhs(0.6, 0.4, 0.0, 0.1, 1.0, 0.1), (0.0, 0.0));

        let (ds, dr) = sir_state_rhs(0.99, 0.0, 0.03, 0.0, 1.0, 0.1);
        assert_abs_diff_eq!(ds, -0.03960, epsilon = 1e-5);
        assert_abs_diff_eq!(ds, -0.99 * 0.01 - 0.0297, epsilon = 1e-15);
        assert_abs_diff_eq!(dr, 0.001, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_rhs_examples() {
        assert_eq!(sir_adjoint_rhs(0.4, 0.2, 0.0, 0.0, 0.02, 0.1, 1.0, 0.1), (0.0, 0.0));
        let (a, b) = sir_adjoint_rhs(1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.1);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-15);
        let (a, b) = sir_adjoint_rhs(0.5, 0.2, -1.0, 0.0, 0.0, 0.0, 1.0, 0.1);
        assert_abs_diff_eq!(a, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn literal_forms_differ_only_with_word_of_mouth() {
        let args = (0.5, 0.2, -1.0, 0.3, 0.01, 0.0, 1.0, 0.1);
        let d = sir_adjoint_rhs(args.0, args.1, args.2, args.3, args.4, args.5, args.6, args.7);
        let l = sir_adjoint_rhs_literal(args.0, args.1, args.2, args.3, args.4, args.5, args.6, args.7);
        assert_eq!(d, l);
        let d = sir_adjoint_rhs(0.5, 0.2, -1.0, 0.3, 0.01, 0.2, 1.0, 0.1);
        let l = sir_adjoint_rhs_literal(0.5, 0.2, -1.0, 0.3, 0.01, 0.2, 1.0, 0.1);
        assert_eq!(d.0, l.0);
        // λs u2 s enters with opposite signs: difference is 2 λs u2 s.
        assert_abs_diff_eq!(l.1 - d.1, 2.0 * -1.0 * 0.2 * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn u1_examples() {
        assert_eq!(sir_optimal_u1(0.7, 0.0, 15.0, 0.06), 0.0);
        assert_abs_diff_eq!(sir_optimal_u1(0.99, -1.0, 15.0, 0.06), 0.033, epsilon = 1e-15);
        assert_eq!(sir_optimal_u1(1.0, -10.0, 15.0, 0.06), 0.06);
    }

    #[test]
    fn u2_examples() {
        assert_eq!(sir_optimal_u2(0.5, 0.1, 0.0, 1.0, 0.3), 0.0);
        assert_eq!(sir_optimal_u2(0.5, 0.1, 2.0, 1.0, 0.3), 0.0);
        assert_abs_diff_eq!(sir_optimal_u2(0.5, 0.1, -1.0, 1.0, 0.3), 0.1, epsilon = 1e-15);
        assert_eq!(sir_optimal_u2(0.5, 0.0, -4.0, 1.0, 0.3), 0.3);
        // The alternative factor (1 - 2s - r) is negative near s = 1.
        assert_eq!(sir_optimal_u2_literal(0.9, 0.0, -1.0, 1.0, 0.3), 0.0);
    }

    #[test]
    fn cost_examples() {
        let p = SirParams::default();
        let (j, traj) = p.evaluate(&p.zero_controls()).unwrap();
        let [s, r] = traj.terminal();
        assert_abs_diff_eq!(j, -((1.0 - s - r) + r), epsilon = 1e-15);

        let g = p.grid();
        let u = [ControlGrid::constant(g, 0.02), ControlGrid::constant(g, 0.1)];
        let (j, traj) = p.evaluate(&u).unwrap();
        let expected = -1.0 + traj.terminal()[0] + (15.0 * 0.0004 + 1.0 * 0.01) * 5.0;
        assert_abs_diff_eq!(j, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(sir_cost(&traj, &u[0], &u[1], 15.0, 1.0).unwrap(), j, epsilon = 1e-15);
    }

    #[test]
    fn subcritical_uncontrolled_cost_bracket() {
        let p = SirParams::default().with_beta(RateProfile::constant(0.03));
        let (j, _) = p.evaluate(&p.zero_controls()).unwrap();
        assert!(j > -0.02 && j < -0.01, "J = {j}");
    }

    #[test]
    fn mismatched_grid_is_shape_error() {
        let p = SirParams::default();
        let (_, traj) = p.evaluate(&p.zero_controls()).unwrap();
        let other = ControlGrid::zeros(TimeGrid::new(0.0, 5.0, 10).unwrap());
        let ok = ControlGrid::zeros(p.grid());
        assert!(matches!(sir_cost(&traj, &ok, &other, 15.0, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn validation() {
        assert!(SirParams::default().validate().is_ok());
        assert!(SirParams { c: 0.0, ..SirParams::default() }.validate().is_err());
        assert!(SirParams { i0: -0.1, ..SirParams::default() }.validate().is_err());
        assert!(SirParams { u2_max: f64::NAN, ..SirParams::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn control_laws_in_box(
            s in 0.0f64..=1.0,
            r_frac in 0.0f64..=1.0,
            lam_s in -100.0f64..100.0,
            b in 0.01f64..50.0,
            c in 0.01f64..50.0,
        ) {
            let r = r_frac * (1.0 - s);
            prop_assert!((0.0..=0.06).contains(&sir_optimal_u1(s, lam_s, b, 0.06)));
            prop_assert!((0.0..=0.3).contains(&sir_optimal_u2(s, r, lam_s, c, 0.3)));
            prop_assert!((0.0..=0.3).contains(&sir_optimal_u2_literal(s, r, lam_s, c, 0.3)));
        }

        #[test]
        fn simplex_and_monotonicity(
            i0 in 0.0f64..=1.0,
            beta in 0.0f64..3.0,
            gamma in 0.0f64..1.0,
            u1 in 0.0f64..=0.06,
            u2 in 0.0f64..=0.3,
        ) {
            let p = SirParams {
                beta: RateProfile::constant(beta),
                gamma: RateProfile::constant(gamma),
                i0,
                n_steps: 500,
                ..SirParams::default()
            };
            let g = p.grid();
            let u = [
                ControlGrid::from_fn(g, |_, t| u1 * (0.5 + 0.5 * (t).cos())),
                ControlGrid::constant(g, u2),
            ];
            let traj = p.simulate(&u).unwrap();
            for x in traj.states() {
                let [s, r] = *x;
                prop_assert!(s >= 0.0 && r >= 0.0 && s + r <= 1.0);
            }
            for w in traj.states().windows(2) {
                prop_assert!(w[1][1] >= w[0][1] - 1e-15);
                prop_assert!(w[1][0] <= w[0][0] + 1e-15);
            }
        }
    }
}

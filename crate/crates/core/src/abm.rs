//! Finite-population stochastic counterpart of the mean-field models.
//!
//! Each step draws binomial transition counts with per-node probabilities
//! `rate · dt_event`, where the rates are read at the start of the step:
//!
//! * susceptible → infected: `(β(t) + u2(t)) · i + u1(t)` (`u2 = 0` for SIS),
//! * infected → susceptible (SIS) or recovered (SIR): `γ(t)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{ControlGrid, TimeGrid};
use crate::model::Model;

/// Default number of tau-leap steps over the horizon.
pub const DEFAULT_EVENT_STEPS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct AbmConfig {
    pub n_agents: u64,
    pub replications: usize,
    pub seed: u64,
    pub dt_event: f64,
    pub model: Model,
    /// One grid for SIS (`u`), two for SIR (`u1`, `u2`).
    pub controls: Vec<ControlGrid>,
}

impl AbmConfig {
    /// Builds a validated configuration with `dt_event = T / 5000`.
    pub fn new(model: Model, controls: Vec<ControlGrid>, n_agents: u64, replications: usize, seed: u64) -> Result<Self> {
        let dt_event = model.t_final() / DEFAULT_EVENT_STEPS as f64;
        let cfg = AbmConfig {
            n_agents,
            replications,
            seed,
            dt_event,
            model,
            controls,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with every control held at zero.
    pub fn uncontrolled(model: Model, n_agents: u64, replications: usize, seed: u64) -> Result<Self> {
        let m = match model {
            Model::Sis(_) => 1,
            Model::Sir(_) => 2,
        };
        let controls = vec![ControlGrid::zeros(model.grid()); m];
        Self::new(model, controls, n_agents, replications, seed)
    }

    pub fn with_dt_event(mut self, dt_event: f64) -> Result<Self> {
        self.dt_event = dt_event;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_agents == 0 {
            return Err(Error::invalid("n_agents", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if !(self.dt_event.is_finite() && self.dt_event > 0.0) {
            return Err(Error::invalid("dt_event", format!("must be positive, got {}", self.dt_event)));
        }
        if self.dt_event > self.model.t_final() {
            return Err(Error::invalid("dt_event", "exceeds the horizon"));
        }
        let expected = match self.model {
            Model::Sis(_) => 1,
            Model::Sir(_) => 2,
        };
        if self.controls.len() != expected {
            return Err(Error::Shape(format!(
                "{} model needs {expected} control grids, got {}",
                self.model.kind(),
                self.controls.len()
            )));
        }
        let span = self.model.grid();
        for u in &self.controls {
            let g = u.grid();
            if g.t0() != span.t0() || g.t_end() != span.t_end() {
                return Err(Error::Shape("control grid does not span the model horizon".into()));
            }
            if u.min_value() < 0.0 || !u.values().iter().all(|v| v.is_finite()) {
                return Err(Error::invalid("controls", "values must be finite and nonnegative"));
            }
        }
        let (infection, recovery) = self.rate_bounds();
        check_probability("infection", infection * self.dt_event)?;
        check_probability("recovery", recovery * self.dt_event)?;
        Ok(())
    }

    /// Upper bounds on the per-node infection and recovery hazards.
    fn rate_bounds(&self) -> (f64, f64) {
        let umax = |k: usize| self.controls.get(k).map_or(0.0, |u| u.max_value());
        match &self.model {
            Model::Sis(p) => (p.beta.upper_bound() + umax(0), p.gamma.upper_bound()),
            Model::Sir(p) => (p.beta.upper_bound() + umax(1) + umax(0), p.gamma.upper_bound()),
        }
    }

    pub fn output_grid(&self) -> Result<TimeGrid> {
        let t = self.model.t_final();
        let steps = (t / self.dt_event).round().max(1.0) as usize;
        TimeGrid::new(0.0, t, steps)
    }
}

fn check_probability(rate: &'static str, probability: f64) -> Result<()> {
    if probability > 1.0 || !probability.is_finite() {
        return Err(Error::ProbabilityOverflow { rate, probability });
    }
    Ok(())
}

/// Across-replication statistics of the compartment fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmResult {
    pub grid: TimeGrid,
    /// Mean `(s, i, r)` fractions per node; `r` is zero for SIS.
    pub mean: Vec<[f64; 3]>,
    /// Standard error of the mean for each fraction.
    pub stderr: Vec<[f64; 3]>,
    pub replications: usize,
    pub n_agents: u64,
}

impl AbmResult {
    pub fn infected(&self) -> impl Iterator<Item = f64> + '_ {
        self.mean.iter().map(|x| x[1])
    }

    /// `sup_k |mean i(t_k) − reference(t_k)|`.
    pub fn sup_deviation(&self, reference: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .times()
            .zip(self.infected())
            .map(|(t, i)| (i - reference(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// One replication's counts `(S, I, R)` on the output grid.
pub fn run_replication(config: &AbmConfig, replication: usize) -> Result<Vec<[u64; 3]>> {
    let grid = config.output_grid()?;
    let n = config.n_agents;
    let nf = n as f64;
    let dt = grid.dt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replication as u64);

    let (i0, sir) = match &config.model {
        Model::Sis(p) => (p.i0, false),
        Model::Sir(p) => (p.i0, true),
    };
    let mut infected = (i0 * nf).round() as u64;
    let mut susceptible = n - infected;
    let mut recovered = 0u64;
    let mut out = Vec::with_capacity(grid.node_count());
    out.push([susceptible, infected, recovered]);

    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let i_frac = infected as f64 / nf;
        let (infection, recovery) = match &config.model {
            Model::Sis(p) => {
                let u = config.controls[0].sample_clamped(t);
                (p.beta.eval(t) * i_frac + u, p.gamma.eval(t))
            }
            Model::Sir(p) => {
                let u1 = config.controls[0].sample_clamped(t);
                let u2 = config.controls[1].sample_clamped(t);
                ((p.beta.eval(t) + u2) * i_frac + u1, p.gamma.eval(t))
            }
        };
        let p_inf = infection * dt;
        let p_rec = recovery * dt;
        check_probability("infection", p_inf)?;
        check_probability("recovery", p_rec)?;

        let new_inf = draw(&mut rng, susceptible, p_inf);
        let new_rec = draw(&mut rng, infected, p_rec);
        susceptible -= new_inf;
        infected = infected + new_inf - new_rec;
        if sir {
            recovered += new_rec;
        } else {
            susceptible += new_rec;
        }
        debug_assert_eq!(susceptible + infected + recovered, n);
        out.push([susceptible, infected, recovered]);
    }
    Ok(out)
}

fn draw(rng: &mut ChaCha8Rng, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(trials, p.min(1.0))
        .expect("probability checked before sampling")
        .sample(rng)
}

/// Runs all replications in parallel and averages them in replication order.
pub fn simulate(config: &AbmConfig) -> Result<AbmResult> {
    config.validate()?;
    let grid = config.output_grid()?;
    let runs: Vec<Vec<[u64; 3]>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect::<Result<_>>()?;

    let nf = config.n_agents as f64;
    let reps = runs.len() as f64;
    let nodes = grid.node_count();
    let mut mean = vec![[0.0; 3]; nodes];
    let mut stderr = vec![[0.0; 3]; nodes];
    for k in 0..nodes {
        for c in 0..3 {
            let m = runs.iter().map(|r| r[k][c] as f64 / nf).sum::<f64>() / reps;
            mean[k][c] = m;
            if runs.len() > 1 {
                let var = runs
                    .iter()
                    .map(|r| (r[k][c] as f64 / nf - m).powi(2))
                    .sum::<f64>()
                    / (reps - 1.0);
                stderr[k][c] = (var / reps).sqrt();
            }
        }
    }
    Ok(AbmResult {
        grid,
        mean,
        stderr,
        replications: config.replications,
        n_agents: config.n_agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ControlProblem;
    use crate::profiles::RateProfile;
    use crate::sir::SirParams;
    use crate::sis::{logistic_infected, SisParams};

    fn sis(i0: f64) -> Model {
        Model::Sis(SisParams { i0, ..SisParams::default() })
    }

    #[test]
    fn empty_infection_is_absorbing() {
        let cfg = AbmConfig::uncontrolled(sis(0.0), 1000, 4, 7).unwrap();
        let out = simulate(&cfg).unwrap();
        assert!(out.infected().all(|i| i == 0.0));
    }

    #[test]
    fn sir_without_recovery_keeps_r_zero() {
        let m = Model::Sir(SirParams::default().with_gamma(0.0));
        let cfg = AbmConfig::uncontrolled(m, 2000, 3, 1).unwrap();
        for rep in 0..3 {
            let counts = run_replication(&cfg, rep).unwrap();
            assert!(counts.iter().all(|c| c[2] == 0));
        }
    }

    #[test]
    fn population_is_conserved() {
        let grid = SirParams::default().grid();
        let controls = vec![ControlGrid::constant(grid, 0.06), ControlGrid::constant(grid, 0.3)];
        let cfg = AbmConfig::new(Model::Sir(SirParams::default()), controls, 5000, 2, 3).unwrap();
        for rep in 0..2 {
            assert!(run_replication(&cfg, rep).unwrap().iter().all(|c| c.iter().sum::<u64>() == 5000));
        }
        let cfg = AbmConfig::new(sis(0.01), vec![ControlGrid::constant(SisParams::default().grid(), 0.06)], 5000, 2, 3)
            .unwrap();
        assert!(run_replication(&cfg, 0).unwrap().iter().all(|c| c[0] + c[1] == 5000 && c[2] == 0));
    }

    #[test]
    fn bitwise_reproducible() {
        let cfg = AbmConfig::uncontrolled(sis(0.01), 10_000, 5, 42).unwrap();
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = AbmConfig { seed: 43, ..cfg.clone() };
        assert_ne!(simulate(&cfg).unwrap().mean, simulate(&other).unwrap().mean);
    }

    #[test]
    fn replications_use_distinct_streams() {
        let cfg = AbmConfig::uncontrolled(sis(0.01), 10_000, 2, 42).unwrap();
        assert_ne!(run_replication(&cfg, 0).unwrap(), run_replication(&cfg, 1).unwrap());
    }

    #[test]
    fn tracks_mean_field_roughly() {
        let cfg = AbmConfig::uncontrolled(sis(0.01), 50_000, 8, 11).unwrap();
        let out = simulate(&cfg).unwrap();
        let dev = out.sup_deviation(|t| logistic_infected(1.0, 0.1, 0.01, t));
        assert!(dev < 0.05, "deviation {dev}");
    }

    #[test]
    fn probability_overflow_names_rate() {
        let m = Model::Sis(SisParams::default().with_beta(RateProfile::constant(3000.0)));
        let err = AbmConfig::uncontrolled(m, 100, 1, 0).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOverflow { rate: "infection", .. }), "{err:?}");
        let m = Model::Sis(SisParams::default().with_gamma(2000.0));
        let err = AbmConfig::uncontrolled(m, 100, 1, 0).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOverflow { rate: "recovery", .. }), "{err:?}");
        let cfg = AbmConfig::uncontrolled(sis(0.01), 100, 1, 0).unwrap();
        assert!(cfg.with_dt_event(2.0).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let m = Model::Sir(SirParams::default());
        let g = m.grid();
        assert!(matches!(
            AbmConfig::new(m.clone(), vec![ControlGrid::zeros(g)], 10, 1, 0),
            Err(Error::Shape(_))
        ));
        assert!(AbmConfig::uncontrolled(m.clone(), 0, 1, 0).is_err());
        assert!(AbmConfig::uncontrolled(m, 10, 0, 0).is_err());
    }
}

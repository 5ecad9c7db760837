//! Runtime choice between the SIS and SIR problems.

use crate::error::Result;
use crate::integrator::{ControlGrid, TimeGrid, Trajectory};
use crate::problem::ControlProblem;
use crate::sir::SirParams;
use crate::sis::SisParams;
use crate::solver::{solve, uniqueness_probe, Solution, SolverOptions, UniquenessReport};
use crate::strategies::{evaluate_strategy, Evaluation, Strategy};

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Sis(SisParams),
    Sir(SirParams),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Sis(_) => "sis",
            Model::Sir(_) => "sir",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Sis(p) => p.validate(),
            Model::Sir(p) => p.validate(),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        match self {
            Model::Sis(p) => p.grid(),
            Model::Sir(p) => p.grid(),
        }
    }

    pub fn t_final(&self) -> f64 {
        match self {
            Model::Sis(p) => p.t_final,
            Model::Sir(p) => p.t_final,
        }
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<AnySolution> {
        Ok(match self {
            Model::Sis(p) => AnySolution::Sis(solve(p, opts)?),
            Model::Sir(p) => AnySolution::Sir(solve(p, opts)?),
        })
    }

    pub fn evaluate(&self, strategy: &Strategy) -> Result<AnyEvaluation> {
        Ok(match self {
            Model::Sis(p) => AnyEvaluation::Sis(evaluate_strategy(strategy, p)?),
            Model::Sir(p) => AnyEvaluation::Sir(evaluate_strategy(strategy, p)?),
        })
    }

    /// Multi-start uniqueness probe; each guess must have one entry per state.
    pub fn probe_uniqueness(&self, guesses: &[Vec<f64>], opts: &SolverOptions) -> Result<UniquenessSummary> {
        fn arrays<const N: usize>(g: &[Vec<f64>]) -> Result<Vec<[f64; N]>> {
            g.iter()
                .map(|v| {
                    <[f64; N]>::try_from(v.as_slice()).map_err(|_| {
                        crate::Error::invalid("guesses", format!("each guess needs {N} components"))
                    })
                })
                .collect()
        }
        Ok(match self {
            Model::Sis(p) => UniquenessSummary::from_report(&uniqueness_probe(p, &arrays::<1>(guesses)?, opts)?),
            Model::Sir(p) => UniquenessSummary::from_report(&uniqueness_probe(p, &arrays::<2>(guesses)?, opts)?),
        })
    }
}

impl From<SisParams> for Model {
    fn from(p: SisParams) -> Self {
        Model::Sis(p)
    }
}

impl From<SirParams> for Model {
    fn from(p: SirParams) -> Self {
        Model::Sir(p)
    }
}

#[derive(Debug, Clone)]
pub enum AnySolution {
    Sis(Solution<1, 1>),
    Sir(Solution<2, 2>),
}

impl AnySolution {
    pub fn cost(&self) -> f64 {
        match self {
            AnySolution::Sis(s) => s.cost,
            AnySolution::Sir(s) => s.cost,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            AnySolution::Sis(s) => s.converged,
            AnySolution::Sir(s) => s.converged,
        }
    }

    pub fn residual(&self) -> f64 {
        match self {
            AnySolution::Sis(s) => s.residual,
            AnySolution::Sir(s) => s.residual,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            AnySolution::Sis(s) => s.iterations,
            AnySolution::Sir(s) => s.iterations,
        }
    }

    pub fn controls(&self) -> Vec<ControlGrid> {
        match self {
            AnySolution::Sis(s) => s.controls.to_vec(),
            AnySolution::Sir(s) => s.controls.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum AnyEvaluation {
    Sis(Evaluation<1, 1>),
    Sir(Evaluation<2, 2>),
}

impl AnyEvaluation {
    pub fn cost(&self) -> f64 {
        match self {
            AnyEvaluation::Sis(e) => e.cost,
            AnyEvaluation::Sir(e) => e.cost,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            AnyEvaluation::Sis(e) => e.iterations,
            AnyEvaluation::Sir(e) => e.iterations,
        }
    }

    pub fn controls(&self) -> Vec<ControlGrid> {
        match self {
            AnyEvaluation::Sis(e) => e.controls.to_vec(),
            AnyEvaluation::Sir(e) => e.controls.to_vec(),
        }
    }

    /// Trajectory expressed as `(s, i, r)` fractions.
    pub fn compartments(&self) -> Trajectory<[f64; 3]> {
        match self {
            AnyEvaluation::Sis(e) => e.trajectory.map(|x| [1.0 - x[0], x[0], 0.0]),
            AnyEvaluation::Sir(e) => e.trajectory.map(|x| [x[0], 1.0 - x[0] - x[1], x[1]]),
        }
    }
}

/// Dimension-erased [`UniquenessReport`].
#[derive(Debug, Clone)]
pub struct UniquenessSummary {
    pub guesses: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub lambda0: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    /// Representative initial costate, cost and member count per cluster.
    pub clusters: Vec<(Vec<f64>, f64, usize)>,
    pub spread: f64,
}

impl UniquenessSummary {
    fn from_report<const N: usize>(r: &UniquenessReport<N>) -> Self {
        UniquenessSummary {
            guesses: r.runs.iter().map(|x| x.guess.to_vec()).collect(),
            converged: r.runs.iter().map(|x| x.converged).collect(),
            lambda0: r.runs.iter().map(|x| x.lambda0.to_vec()).collect(),
            costs: r.runs.iter().map(|x| x.cost).collect(),
            clusters: r
                .clusters
                .iter()
                .map(|c| (c.lambda0.to_vec(), c.cost, c.members.len()))
                .collect(),
            spread: r.spread(),
        }
    }
}

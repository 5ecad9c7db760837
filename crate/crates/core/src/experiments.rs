//! Parameter sweeps, control effort and CSV exports.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::abm::AbmResult;
use crate::error::{Error, Result};
use crate::integrator::{trapezoid, ControlGrid, Trajectory};
use crate::model::{AnyEvaluation, AnySolution, Model};
use crate::profiles::RateProfile;
use crate::strategies::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Beta,
    Gamma,
    Horizon,
    B,
    C,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [SweepParam::Beta, SweepParam::Gamma, SweepParam::Horizon, SweepParam::B, SweepParam::C];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::Horizon => "T",
            SweepParam::B => "b",
            SweepParam::C => "c",
        }
    }

    pub fn parse(s: &str) -> Option<SweepParam> {
        match s {
            "beta" => Some(SweepParam::Beta),
            "gamma" => Some(SweepParam::Gamma),
            "T" | "t" | "horizon" => Some(SweepParam::Horizon),
            "b" => Some(SweepParam::B),
            "c" => Some(SweepParam::C),
            _ => None,
        }
    }

    /// Grid used by the acceptance checks.
    pub fn acceptance_values(self) -> Vec<f64> {
        match self {
            SweepParam::Beta => vec![0.2, 0.5, 1.0, 2.0],
            SweepParam::Gamma => vec![0.05, 0.1, 0.2, 0.4],
            SweepParam::Horizon => vec![1.0, 2.5, 5.0, 10.0],
            SweepParam::B => vec![5.0, 15.0, 45.0],
            SweepParam::C => vec![0.5, 1.0, 2.0],
        }
    }

    /// Whether the parameter exists for `model`.
    pub fn applies_to(self, model: &Model) -> bool {
        !(self == SweepParam::C && matches!(model, Model::Sis(_)))
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `model` with one parameter replaced. `beta` and `gamma` become constants;
/// `T` keeps the step size.
pub fn with_parameter(model: &Model, param: SweepParam, value: f64) -> Result<Model> {
    let out = match (model.clone(), param) {
        (Model::Sis(p), SweepParam::Beta) => Model::Sis(p.with_beta(RateProfile::constant(value))),
        (Model::Sir(p), SweepParam::Beta) => Model::Sir(p.with_beta(RateProfile::constant(value))),
        (Model::Sis(p), SweepParam::Gamma) => Model::Sis(p.with_gamma(value)),
        (Model::Sir(p), SweepParam::Gamma) => Model::Sir(p.with_gamma(value)),
        (Model::Sis(p), SweepParam::Horizon) => Model::Sis(p.with_horizon(value)),
        (Model::Sir(p), SweepParam::Horizon) => Model::Sir(p.with_horizon(value)),
        (Model::Sis(p), SweepParam::B) => Model::Sis(p.with_b(value)),
        (Model::Sir(p), SweepParam::B) => Model::Sir(p.with_b(value)),
        (Model::Sir(p), SweepParam::C) => Model::Sir(p.with_c(value)),
        (Model::Sis(_), SweepParam::C) => return Err(Error::invalid("c", "the SIS model has no word-of-mouth weight")),
    };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model_template: Model,
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub strategies: Vec<Strategy>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.model_template.validate()?;
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep needs at least one value"));
        }
        if self.strategies.is_empty() {
            return Err(Error::invalid("strategies", "sweep needs at least one strategy"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub strategy: &'static str,
    /// NaN when the cell failed before a cost could be computed.
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

fn run_cell(spec: &SweepSpec, value: f64, strategy: &Strategy) -> SweepRow {
    let mut row = SweepRow {
        param: spec.parameter,
        value,
        strategy: strategy.name(),
        cost: f64::NAN,
        converged: false,
        iterations: 0,
        error: None,
    };
    match with_parameter(&spec.model_template, spec.parameter, value).and_then(|m| m.evaluate(strategy)) {
        Ok(e) => {
            row.cost = e.cost();
            row.converged = true;
            row.iterations = e.iterations();
        }
        Err(err) => {
            if let Error::NotConverged { iterations, cost, .. } = err {
                row.cost = cost;
                row.iterations = iterations;
            }
            row.error = Some(err.to_string());
        }
    }
    row
}

/// One row per `(value, strategy)`, ordered value-major. Failed cells are kept
/// with `converged = false` and the error message.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells: Vec<(f64, &Strategy)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.strategies.iter().map(move |s| (v, s)))
        .collect();
    Ok(cells.into_par_iter().map(|(v, s)| run_cell(spec, v, s)).collect())
}

/// `∫ u dt` by the trapezoid rule.
pub fn control_effort(u: &ControlGrid) -> f64 {
    trapezoid(u.grid(), u.values().iter().copied())
}

/// CSV number: shortest round-trip text, exponent form for tiny or huge magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub const SWEEP_HEADER: &str = "param,value,strategy,J,converged,iterations";
pub const SIS_SOLUTION_HEADER: &str = "t,i,s,lambda,u";
pub const SIR_SOLUTION_HEADER: &str = "t,s,i,r,lambda_s,lambda_r,u1,u2";
pub const SIS_TRAJECTORY_HEADER: &str = "t,i,s,u";
pub const SIR_TRAJECTORY_HEADER: &str = "t,s,i,r,u1,u2";

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Opens `path` for writing, runs `body`, and flushes.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_error(path))
}

pub fn write_sweep_csv(rows: &[SweepRow], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.param,
            Num(r.value),
            r.strategy,
            Num(r.cost),
            r.converged,
            r.iterations
        )?;
    }
    Ok(())
}

pub fn write_solution_csv(sol: &AnySolution, w: &mut dyn Write) -> std::io::Result<()> {
    match sol {
        AnySolution::Sis(s) => {
            writeln!(w, "{SIS_SOLUTION_HEADER}")?;
            let grid = s.state.grid();
            for k in 0..grid.node_count() {
                let i = s.state.states()[k][0];
                let lam = s.adjoint.states()[k][0];
                let u = s.controls[0].values()[k];
                writeln!(w, "{},{},{},{},{}", Num(grid.time(k)), Num(i), Num(1.0 - i), Num(lam), Num(u))?;
            }
        }
        AnySolution::Sir(s) => {
            writeln!(w, "{SIR_SOLUTION_HEADER}")?;
            let grid = s.state.grid();
            for k in 0..grid.node_count() {
                let [sv, r] = s.state.states()[k];
                let [ls, lr] = s.adjoint.states()[k];
                let (u1, u2) = (s.controls[0].values()[k], s.controls[1].values()[k]);
                let row = [grid.time(k), sv, 1.0 - sv - r, r, ls, lr, u1, u2].map(|x| Num(x).to_string());
                writeln!(w, "{}", row.join(","))?;
            }
        }
    }
    Ok(())
}

/// Solution CSV with state, adjoint and control columns.
pub fn export_trajectories(sol: &AnySolution, path: &Path) -> Result<()> {
    write_file(path, |w| write_solution_csv(sol, w))
}

fn write_compartments(
    sir: bool,
    states: &Trajectory<[f64; 3]>,
    controls: &[ControlGrid],
    stderr: Option<&[[f64; 3]]>,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    let header = if sir { SIR_TRAJECTORY_HEADER } else { SIS_TRAJECTORY_HEADER };
    match stderr {
        Some(_) => writeln!(w, "{header},stderr")?,
        None => writeln!(w, "{header}")?,
    }
    let grid = states.grid();
    for (k, &[s, i, r]) in states.states().iter().enumerate() {
        let t = grid.time(k);
        let mut row = if sir { vec![t, s, i, r] } else { vec![t, i, s] };
        row.extend(controls.iter().map(|u| u.sample_clamped(t)));
        let row: Vec<String> = row.into_iter().map(|x| Num(x).to_string()).collect();
        write!(w, "{}", row.join(","))?;
        match stderr {
            Some(se) => writeln!(w, ",{}", Num(se[k][1]))?,
            None => writeln!(w)?,
        }
    }
    Ok(())
}

/// Trajectory CSV of a strategy evaluation.
pub fn write_evaluation_csv(eval: &AnyEvaluation, w: &mut dyn Write) -> std::io::Result<()> {
    let sir = matches!(eval, AnyEvaluation::Sir(_));
    write_compartments(sir, &eval.compartments(), &eval.controls(), None, w)
}

/// Mean ABM trajectory in the evaluation schema plus the standard error of `i`.
pub fn write_abm_csv(result: &AbmResult, model: &Model, controls: &[ControlGrid], w: &mut dyn Write) -> std::io::Result<()> {
    let states = Trajectory::new(result.grid, result.mean.clone()).map_err(std::io::Error::other)?;
    write_compartments(matches!(model, Model::Sir(_)), &states, controls, Some(&result.stderr), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ControlProblem;
    use crate::sir::SirParams;
    use crate::sis::SisParams;
    use crate::solver::SolverOptions;
    use approx::assert_abs_diff_eq;

    fn sis() -> Model {
        Model::Sis(SisParams::default())
    }

    #[test]
    fn num_switches_to_exponent_outside_plain_range() {
        assert_eq!(Num(0.0).to_string(), "0");
        assert_eq!(Num(-0.71754938).to_string(), "-0.71754938");
        assert_eq!(Num(1e-4).to_string(), "0.0001");
        assert_eq!(Num(2.5e-7).to_string(), "2.5e-7");
        assert_eq!(Num(3e15).to_string(), "3e15");
        assert_eq!(Num(f64::NAN).to_string(), "NaN");
        let x = 0.1 + 0.2;
        assert_eq!(Num(x).to_string().parse::<f64>().unwrap(), x);
    }

    #[test]
    fn effort_of_constants() {
        let g = SisParams::default().grid();
        assert_eq!(control_effort(&ControlGrid::zeros(g)), 0.0);
        assert_abs_diff_eq!(control_effort(&ControlGrid::constant(g, 0.03)), 0.15, epsilon = 1e-12);
    }

    #[test]
    fn no_control_is_flat_in_b() {
        let spec = SweepSpec {
            model_template: sis(),
            parameter: SweepParam::B,
            values: vec![5.0, 15.0, 45.0],
            strategies: vec![Strategy::NoControl],
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.cost == rows[0].cost && r.converged));
    }

    #[test]
    fn rows_are_value_major_and_repeatable() {
        let spec = SweepSpec {
            model_template: sis(),
            parameter: SweepParam::Beta,
            values: vec![0.5, 1.0, 2.0],
            strategies: vec![Strategy::Optimal(SolverOptions::default()), Strategy::NoControl],
        };
        let a = run_sweep(&spec).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a[0].value, 0.5);
        assert_eq!(a[1].strategy, "none");
        assert_eq!(a[2].value, 1.0);
        let b = run_sweep(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.cost.to_bits(), y.cost.to_bits());
        }
        let opt: Vec<f64> = a.iter().filter(|r| r.strategy == "optimal").map(|r| r.cost).collect();
        assert!(opt.windows(2).all(|w| w[1] <= w[0]), "{opt:?}");
    }

    #[test]
    fn invalid_cells_become_error_rows() {
        let spec = SweepSpec {
            model_template: sis(),
            parameter: SweepParam::Horizon,
            values: vec![-1.0, 1.0],
            strategies: vec![Strategy::NoControl],
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].converged && rows[0].error.is_some() && rows[0].cost.is_nan());
        assert!(rows[1].converged);

        let spec = SweepSpec {
            parameter: SweepParam::C,
            values: vec![1.0],
            ..spec
        };
        assert!(run_sweep(&spec).unwrap()[0].error.is_some());
    }

    #[test]
    fn horizon_sweep_keeps_step() {
        let m = with_parameter(&sis(), SweepParam::Horizon, 10.0).unwrap();
        assert_abs_diff_eq!(m.grid().dt(), 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn empty_spec_rejected() {
        let spec = SweepSpec {
            model_template: sis(),
            parameter: SweepParam::B,
            values: vec![],
            strategies: vec![Strategy::NoControl],
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn solution_csv_schema() {
        for model in [sis(), Model::Sir(SirParams::default().with_horizon(0.5))] {
            let model = with_parameter(&model, SweepParam::Horizon, 0.5).unwrap();
            let sol = model.solve(&SolverOptions::default()).unwrap();
            let mut buf = Vec::new();
            write_solution_csv(&sol, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            let expected = if model.kind() == "sis" { SIS_SOLUTION_HEADER } else { SIR_SOLUTION_HEADER };
            assert_eq!(lines[0], expected);
            assert_eq!(lines.len(), model.grid().n_steps() + 2);
            let cols = expected.split(',').count();
            assert!(lines[1..].iter().all(|l| l.split(',').count() == cols));
        }
    }

    #[test]
    fn export_to_unwritable_path_is_io_error() {
        let sol = sis().solve(&SolverOptions::default()).unwrap();
        let err = export_trajectories(&sol, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

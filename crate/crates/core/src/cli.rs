//! Command-line front end. [`run`] is the whole program minus process exit.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::abm::{simulate, AbmConfig};
use crate::config::{parse_config, preset, RunConfig};
use crate::error::Error;
use crate::experiments::{
    run_sweep, write_abm_csv, write_evaluation_csv, write_file, write_solution_csv, write_sweep_csv,
    SweepParam, SweepSpec,
};
use crate::solver::Method;
use crate::strategies::Strategy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "CAMPAIGNCTL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "campaignctl", version, about = "Optimal information-campaign control for SIS/SIR models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the optimal control problem and write the solution CSV.
    Solve(Common),
    /// Sweep one parameter across strategies and write the J table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// beta, gamma, T, b or c.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long)]
        values: Option<String>,
        /// Comma-separated strategy names.
        #[arg(long)]
        strategies: Option<String>,
    },
    /// Run the agent-based simulation and write the mean trajectory.
    Simulate(Common),
    /// Evaluate every strategy on one instance.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategies: Option<String>,
    },
    /// Shoot from several initial costates and cluster the results.
    ProbeUniqueness {
        #[command(flatten)]
        common: Common,
        /// `;`-separated guesses, components separated by `,`.
        #[arg(long, allow_hyphen_values = true)]
        guesses: Option<String>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Config file path or preset name (baseline_sis, baseline_sir).
    #[arg(long, default_value = "baseline_sis")]
    config: String,
    /// shooting or fbs; overrides the config.
    #[arg(long)]
    method: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Exit status for each error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::ProbabilityOverflow { .. } | Error::Shape(_) => {
            EXIT_CONFIG
        }
        Error::NotConverged { .. } | Error::Blowup { .. } | Error::StateOutOfRange { .. } | Error::Domain { .. } => {
            EXIT_NOT_CONVERGED
        }
        Error::Io { .. } => EXIT_IO,
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the program; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                let _ = writeln!(err, "error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return EXIT_USAGE;
            }
        },
        Err(_) => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };
    let mut report = Vec::new();
    let outcome = pool.install(|| dispatch(cli.command, &mut report));
    let _ = out.write_all(&report);
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(common: &Common) -> std::result::Result<RunConfig, Failure> {
    let path = Path::new(&common.config);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
    } else if let Some(p) = preset(&common.config) {
        p.to_string()
    } else {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such config file or preset"),
        }
        .into());
    };
    let mut cfg = parse_config(&text)?;
    if let Some(m) = &common.method {
        cfg.solver.method =
            Method::parse(m).ok_or_else(|| Failure::usage(format!("unknown method `{m}` (shooting, fbs)")))?;
        for s in cfg.strategies.iter_mut() {
            if let Strategy::Optimal(o) = s {
                *o = cfg.solver.clone();
            }
        }
        if let Some(a) = cfg.abm.as_mut() {
            if let Strategy::Optimal(o) = &mut a.controls {
                *o = cfg.solver.clone();
            }
        }
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    std::fs::create_dir_all(&cfg.output.dir).map_err(|source| Error::Io {
        path: cfg.output.dir.clone(),
        source,
    })?;
    Ok(cfg)
}

fn parse_strategies(list: &str, cfg: &RunConfig) -> std::result::Result<Vec<Strategy>, Failure> {
    list.split(',')
        .map(|n| {
            Strategy::parse(n.trim(), &cfg.solver).ok_or_else(|| {
                Failure::usage(format!("unknown strategy `{}` (none, constant, heuristic, optimal)", n.trim()))
            })
        })
        .collect()
}

fn parse_numbers(list: &str, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{what}: `{}` is not a number", v.trim())))
        })
        .collect()
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Outcome {
    out.write_fmt(text).map_err(|source| {
        Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }
        .into()
    })
}

fn not_converged(what: &str) -> Failure {
    Failure {
        code: EXIT_NOT_CONVERGED,
        message: format!("{what} did not converge"),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Solve(common) => {
            let cfg = load(&common)?;
            let sol = cfg.model.solve(&cfg.solver)?;
            let path = cfg.output.dir.join(&cfg.output.solution);
            write_file(&path, |w| write_solution_csv(&sol, w))?;
            say(
                out,
                format_args!(
                    "model={} method={} J={} residual={:e} iterations={} converged={}\nwrote {}\n",
                    cfg.model.kind(),
                    cfg.solver.method.name(),
                    sol.cost(),
                    sol.residual(),
                    sol.iterations(),
                    sol.converged(),
                    path.display()
                ),
            )?;
            if !sol.converged() {
                return Err(not_converged("solve"));
            }
            Ok(())
        }
        Command::Sweep {
            common,
            param,
            values,
            strategies,
        } => {
            let cfg = load(&common)?;
            let (param, values) = match (param, values, &cfg.sweep) {
                (Some(p), Some(v), _) => (
                    SweepParam::parse(&p).ok_or_else(|| Failure::usage(format!("unknown parameter `{p}`")))?,
                    parse_numbers(&v, "--values")?,
                ),
                (None, None, Some(s)) => (s.param, s.values.clone()),
                (Some(p), None, Some(s)) => (
                    SweepParam::parse(&p).ok_or_else(|| Failure::usage(format!("unknown parameter `{p}`")))?,
                    s.values.clone(),
                ),
                (None, Some(v), Some(s)) => (s.param, parse_numbers(&v, "--values")?),
                _ => return Err(Failure::usage("sweep needs --param and --values (or a [sweep] section)")),
            };
            let strategies = match strategies {
                Some(s) => parse_strategies(&s, &cfg)?,
                None => cfg.strategies.clone(),
            };
            let spec = SweepSpec {
                model_template: cfg.model.clone(),
                parameter: param,
                values,
                strategies,
            };
            let rows = run_sweep(&spec)?;
            let path = cfg.output.dir.join(&cfg.output.sweep);
            write_file(&path, |w| write_sweep_csv(&rows, w))?;
            let mut buf = Vec::new();
            let _ = write_sweep_csv(&rows, &mut buf);
            say(out, format_args!("{}wrote {}\n", String::from_utf8_lossy(&buf), path.display()))?;
            let failed = rows.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                return Err(not_converged(&format!("{failed} of {} sweep cells", rows.len())));
            }
            Ok(())
        }
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let settings = cfg.abm_settings();
            let eval = cfg.model.evaluate(&settings.controls)?;
            let controls = eval.controls();
            let mut abm = AbmConfig::new(
                cfg.model.clone(),
                controls.clone(),
                settings.n_agents,
                settings.replications,
                cfg.seed,
            )?;
            if let Some(dt) = settings.dt_event {
                abm = abm.with_dt_event(dt)?;
            }
            let result = simulate(&abm)?;
            let ode = eval.compartments();
            let deviation = result.sup_deviation(|t| ode.sample(t).map(|x| x[1]).unwrap_or(f64::NAN));
            let path = cfg.output.dir.join(&cfg.output.simulate);
            write_file(&path, |w| write_abm_csv(&result, &cfg.model, &controls, w))?;
            say(
                out,
                format_args!(
                    "model={} controls={} n_agents={} replications={} sup|i_abm - i_ode|={}\nwrote {}\n",
                    cfg.model.kind(),
                    settings.controls.name(),
                    settings.n_agents,
                    settings.replications,
                    deviation,
                    path.display()
                ),
            )
        }
        Command::Compare { common, strategies } => {
            let cfg = load(&common)?;
            let strategies = match strategies {
                Some(s) => parse_strategies(&s, &cfg)?,
                None => cfg.strategies.clone(),
            };
            let mut table = String::from("strategy,J,iterations\n");
            let mut failed = Vec::new();
            for s in &strategies {
                match cfg.model.evaluate(s) {
                    Ok(e) => table.push_str(&format!("{},{},{}\n", s.name(), e.cost(), e.iterations())),
                    Err(Error::NotConverged { iterations, cost, .. }) => {
                        table.push_str(&format!("{},{},{}\n", s.name(), cost, iterations));
                        failed.push(s.name());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let path = cfg.output.dir.join(&cfg.output.compare);
            write_file(&path, |w| w.write_all(table.as_bytes()))?;
            // Per-strategy trajectories next to the table.
            for s in &strategies {
                if let Ok(e) = cfg.model.evaluate(s) {
                    let p = cfg.output.dir.join(format!("trajectory_{}.csv", s.name()));
                    write_file(&p, |w| write_evaluation_csv(&e, w))?;
                }
            }
            say(out, format_args!("{table}wrote {}\n", path.display()))?;
            if !failed.is_empty() {
                return Err(not_converged(&failed.join(", ")));
            }
            Ok(())
        }
        Command::ProbeUniqueness { common, guesses } => {
            let cfg = load(&common)?;
            let guesses = match guesses {
                Some(g) => g
                    .split(';')
                    .map(|v| parse_numbers(v, "--guesses"))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
                None => cfg.probe_guesses.clone(),
            };
            let mut opts = cfg.solver.clone();
            opts.method = Method::Shooting;
            let report = cfg.model.probe_uniqueness(&guesses, &opts)?;
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            let mut table = String::from("guess,lambda0,J,converged\n");
            for k in 0..report.guesses.len() {
                table.push_str(&format!(
                    "{},{},{},{}\n",
                    join(&report.guesses[k]),
                    join(&report.lambda0[k]),
                    report.costs[k],
                    report.converged[k]
                ));
            }
            let path = cfg.output.dir.join(&cfg.output.probe);
            write_file(&path, |w| w.write_all(table.as_bytes()))?;
            let mut summary = format!("{table}clusters={} spread={:e}\n", report.clusters.len(), report.spread);
            for (lam, cost, n) in &report.clusters {
                summary.push_str(&format!("  lambda0=[{}] J={} members={}\n", join(lam), cost, n));
            }
            say(out, format_args!("{summary}wrote {}\n", path.display()))?;
            if report.converged.iter().any(|c| !c) {
                return Err(not_converged("some probe runs"));
            }
            Ok(())
        }
    }
}


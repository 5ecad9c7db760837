//! Run configuration: a line-oriented `[section]` / `key = value` format.
//!
//! ```text
//! # comment
//! [sis]                 # or [sir]; exactly one
//! gamma = 0.1
//! T = 5
//!
//! [beta]
//! profile = sigmoid_up
//! min = 0.01
//! max = 2
//! steepness = 2
//! center = 3
//! ```
//!
//! Lists are comma separated; lists of vectors separate vectors with `;`.
//! See the repository README for every section and key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiments::SweepParam;
use crate::model::Model;
use crate::profiles::RateProfile;
use crate::sir::SirParams;
use crate::sis::SisParams;
use crate::solver::{Method, SolverOptions};
use crate::strategies::Strategy;

/// Steps per unit time when `n_steps` is not given.
const DEFAULT_STEPS_PER_UNIT: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub solution: String,
    pub sweep: String,
    pub compare: String,
    pub simulate: String,
    pub probe: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("."),
            solution: "solution.csv".into(),
            sweep: "sweep.csv".into(),
            compare: "compare.csv".into(),
            simulate: "abm.csv".into(),
            probe: "uniqueness.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbmSettings {
    pub n_agents: u64,
    pub replications: usize,
    /// Defaults to `T / 5000`.
    pub dt_event: Option<f64>,
    /// Strategy whose controls drive the simulation.
    pub controls: Strategy,
}

impl Default for AbmSettings {
    fn default() -> Self {
        AbmSettings {
            n_agents: 100_000,
            replications: 20,
            dt_event: None,
            controls: Strategy::NoControl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub solver: SolverOptions,
    pub strategies: Vec<Strategy>,
    pub sweep: Option<SweepSettings>,
    pub output: OutputConfig,
    pub abm: Option<AbmSettings>,
    pub probe_guesses: Vec<Vec<f64>>,
    pub paper_literal_sir: bool,
    /// Single source of randomness; copied into the solver options.
    pub seed: u64,
}

impl RunConfig {
    pub fn abm_settings(&self) -> AbmSettings {
        self.abm.clone().unwrap_or_default()
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 2] = ["baseline_sis", "baseline_sir"];

/// Built-in baseline configurations.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "baseline_sis" => Some("[sis]\n[beta]\nprofile = constant\nvalue = 1\n"),
        "baseline_sir" => Some("[sir]\n[beta]\nprofile = constant\nvalue = 1\n"),
        _ => None,
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T>(&mut self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<(T, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match f(&e.value) {
                Some(v) => Ok(Some((v, e.line))),
                None => Err(Error::config(e.line, key, format!("expected {what}, got `{}`", e.value))),
            },
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        self.parse(key, "a number", parse_f64)
    }

    fn f64_or(&mut self, key: &str, default: f64, lines: &mut Lines) -> Result<f64> {
        Ok(match self.f64(key)? {
            Some((v, line)) => {
                lines.insert(key, line);
                v
            }
            None => default,
        })
    }

    fn usize(&mut self, key: &str) -> Result<Option<(usize, usize)>> {
        self.parse(key, "a nonnegative integer", |s| s.parse().ok())
    }

    fn u64(&mut self, key: &str) -> Result<Option<(u64, usize)>> {
        self.parse(key, "a nonnegative integer", |s| s.parse().ok())
    }

    fn bool(&mut self, key: &str) -> Result<Option<(bool, usize)>> {
        self.parse(key, "true or false", |s| s.parse().ok())
    }

    fn list(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        self.parse(key, "a comma-separated list of numbers", parse_list)
    }

    fn vectors(&mut self, key: &str) -> Result<Option<(Vec<Vec<f64>>, usize)>> {
        self.parse(key, "`;`-separated vectors of numbers", |s| {
            if s.trim().is_empty() {
                return Some(Vec::new());
            }
            s.split(';').map(parse_list).collect()
        })
    }

    fn string(&mut self, key: &str) -> Option<(String, usize)> {
        self.take(key).map(|e| (e.value, e.line))
    }

    /// Rejects whatever keys were not consumed.
    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, e)) => Err(Error::config(e.line, key, format!("unknown key in [{}]", self.name))),
        }
    }
}

/// Line on which each model key was set, for constraint diagnostics.
#[derive(Default)]
struct Lines(BTreeMap<String, usize>);

impl Lines {
    fn insert(&mut self, key: &str, line: usize) {
        self.0.insert(key.to_string(), line);
    }

    fn get(&self, key: &str, fallback: usize) -> usize {
        self.0.get(key).copied().unwrap_or(fallback)
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn strip_quotes(s: &str) -> &str {
    s.strip_prefix('"').and_then(|x| x.strip_suffix('"')).unwrap_or(s)
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(line, content, "unterminated section header"))?
                .trim()
                .to_string();
            if sections.iter().any(|s| s.name == name) {
                return Err(Error::config(line, name, "section appears twice"));
            }
            sections.push(Section {
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(line, "", "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| Error::config(line, key, "key outside of any section"))?;
        let entry = Entry {
            value: strip_quotes(value.trim()).to_string(),
            line,
        };
        if section.entries.insert(key.to_string(), entry).is_some() {
            return Err(Error::config(line, key, "key set twice"));
        }
    }
    Ok(sections)
}

fn parse_profile(mut sec: Section) -> Result<RateProfile> {
    let sec_line = sec.line;
    let (kind, kind_line) = sec
        .string("profile")
        .ok_or_else(|| Error::config(sec_line, "profile", format!("[{}] needs a profile", sec.name)))?;
    let need = |sec: &mut Section, key: &str| -> Result<f64> {
        sec.f64(key)?
            .map(|(v, _)| v)
            .ok_or_else(|| Error::config(sec_line, key, format!("required by profile `{kind}`")))
    };
    let profile = match kind.as_str() {
        "constant" => RateProfile::Constant {
            value: need(&mut sec, "value")?,
        },
        "sigmoid_up" => RateProfile::SigmoidUp {
            min: need(&mut sec, "min")?,
            max: need(&mut sec, "max")?,
            steepness: need(&mut sec, "steepness")?,
            center: need(&mut sec, "center")?,
        },
        "sigmoid_down" => RateProfile::SigmoidDown {
            min: need(&mut sec, "min")?,
            max: need(&mut sec, "max")?,
            steepness: need(&mut sec, "steepness")?,
            center: need(&mut sec, "center")?,
        },
        "cosine" => RateProfile::Cosine {
            mean: need(&mut sec, "mean")?,
            amplitude: need(&mut sec, "amplitude")?,
            period: need(&mut sec, "period")?,
        },
        "table" => {
            let times = sec.list("times")?;
            let values = sec.list("values")?;
            match (times, values) {
                (Some((t, _)), Some((v, _))) => RateProfile::Table { times: t, values: v },
                _ => return Err(Error::config(sec_line, "times/values", "table profile needs both lists")),
            }
        }
        other => {
            return Err(Error::config(
                kind_line,
                "profile",
                format!("unknown profile `{other}` (constant, sigmoid_up, sigmoid_down, cosine, table)"),
            ))
        }
    };
    let name = sec.name.clone();
    sec.finish()?;
    profile.validate().map_err(|e| match e {
        Error::InvalidParameter { name: key, reason } => Error::config(sec_line, key, reason),
        other => Error::config(sec_line, name, other.to_string()),
    })?;
    Ok(profile)
}

fn parse_strategy(name: &str, line: usize, key: &str, opts: &SolverOptions) -> Result<Strategy> {
    Strategy::parse(name.trim(), opts).ok_or_else(|| {
        Error::config(
            line,
            key,
            format!("unknown strategy `{}` (none, constant, heuristic, optimal)", name.trim()),
        )
    })
}

/// Config key corresponding to a model field name.
fn config_key(field: &str) -> &str {
    match field {
        "t_final" => "T",
        other => other,
    }
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sections = split_sections(text)?;
    let known = ["sis", "sir", "beta", "gamma", "solver", "strategy", "sweep", "output", "abm", "probe", "flags", "run"];
    if let Some(s) = sections.iter().find(|s| !known.contains(&s.name.as_str())) {
        return Err(Error::config(s.line, s.name.clone(), "unknown section"));
    }
    let mut take = |name: &str| sections.iter().position(|s| s.name == name).map(|k| sections.remove(k));

    let sis = take("sis");
    let sir = take("sir");
    let beta = take("beta");
    let gamma_sec = take("gamma");
    let solver_sec = take("solver");
    let strategy_sec = take("strategy");
    let sweep_sec = take("sweep");
    let output_sec = take("output");
    let abm_sec = take("abm");
    let probe_sec = take("probe");
    let flags_sec = take("flags");
    let run_sec = take("run");

    let mut model_sec = match (sis, sir) {
        (Some(_), Some(b)) => return Err(Error::config(b.line, "sir", "both [sis] and [sir] given; choose one model")),
        (None, None) => return Err(Error::config(0, "sis|sir", "no model section; add [sis] or [sir]")),
        (Some(a), None) | (None, Some(a)) => a,
    };
    let is_sir = model_sec.name == "sir";

    let mut paper_literal_sir = false;
    if let Some(mut f) = flags_sec {
        if let Some((v, _)) = f.bool("paper_literal_sir")? {
            paper_literal_sir = v;
        }
        f.finish()?;
    }

    let mut seed = 0;
    if let Some(mut r) = run_sec {
        if let Some((v, _)) = r.u64("seed")? {
            seed = v;
        }
        r.finish()?;
    }

    // Model section.
    let mut lines = Lines::default();
    let model_line = model_sec.line;
    let beta = match beta {
        Some(sec) => parse_profile(sec)?,
        None => RateProfile::constant(1.0),
    };
    let gamma_const = model_sec.f64("gamma")?;
    let gamma = match (gamma_const, gamma_sec) {
        (Some((_, line)), Some(_)) => {
            return Err(Error::config(line, "gamma", "set both here and in a [gamma] section"))
        }
        (Some((v, line)), None) => {
            lines.insert("gamma", line);
            RateProfile::constant(v)
        }
        (None, Some(sec)) => parse_profile(sec)?,
        (None, None) => RateProfile::constant(0.1),
    };
    let t_final = model_sec.f64_or("T", 5.0, &mut lines)?;
    let b = model_sec.f64_or("b", 15.0, &mut lines)?;
    let i0 = model_sec.f64_or("i0", 0.01, &mut lines)?;
    let n_steps = match model_sec.usize("n_steps")? {
        Some((n, line)) => {
            lines.insert("n_steps", line);
            n
        }
        None => ((t_final * DEFAULT_STEPS_PER_UNIT).round() as usize).max(1),
    };
    let model = if is_sir {
        let c = model_sec.f64_or("c", 1.0, &mut lines)?;
        let u1_max = model_sec.f64_or("u1_max", 0.06, &mut lines)?;
        let u2_max = model_sec.f64_or("u2_max", 0.3, &mut lines)?;
        Model::Sir(SirParams {
            beta,
            gamma,
            t_final,
            b,
            c,
            u1_max,
            u2_max,
            i0,
            n_steps,
            literal_forms: paper_literal_sir,
        })
    } else {
        let u_max = model_sec.f64_or("u_max", 0.06, &mut lines)?;
        Model::Sis(SisParams {
            beta,
            gamma,
            t_final,
            b,
            u_max,
            i0,
            n_steps,
        })
    };
    model_sec.finish()?;
    model.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = config_key(name);
            Error::config(lines.get(key, model_line), key, reason)
        }
        other => Error::config(model_line, "model", other.to_string()),
    })?;

    // Solver.
    let mut solver_line = 0;
    let mut solver = SolverOptions {
        seed,
        ..SolverOptions::default()
    };
    if let Some(mut s) = solver_sec {
        let line = s.line;
        solver_line = line;
        if let Some((m, l)) = s.string("method") {
            solver.method = Method::parse(&m)
                .ok_or_else(|| Error::config(l, "method", format!("unknown method `{m}` (shooting, fbs)")))?;
        }
        if let Some((v, _)) = s.usize("max_iters")? {
            solver.max_iters = v;
        }
        if let Some((v, _)) = s.f64("tol_residual")? {
            solver.tol_residual = v;
        }
        if let Some((v, _)) = s.f64("tol_control")? {
            solver.tol_control = v;
        }
        if let Some((v, _)) = s.f64("relaxation")? {
            solver.relaxation = v;
        }
        if let Some((v, _)) = s.list("initial_costate_guess")? {
            solver.initial_costate_guess = Some(v);
        }
        if let Some((v, _)) = s.vectors("multi_start")? {
            solver.multi_start = v;
        }
        s.finish()?;
        solver.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::config(line, name, reason),
            other => Error::config(line, "solver", other.to_string()),
        })?;
    }
    let dim = if is_sir { 2 } else { 1 };
    for g in solver.initial_costate_guess.iter().chain(&solver.multi_start) {
        if g.len() != dim {
            return Err(Error::config(solver_line, "initial_costate_guess/multi_start", format!("guesses need {dim} components")));
        }
    }

    // Strategies.
    let mut strategies = vec![
        Strategy::NoControl,
        Strategy::ConstantHalfMax,
        Strategy::HeuristicFollow,
        Strategy::Optimal(solver.clone()),
    ];
    if let Some(mut s) = strategy_sec {
        if let Some((list, line)) = s.string("strategies") {
            strategies = list
                .split(',')
                .map(|n| parse_strategy(n, line, "strategies", &solver))
                .collect::<Result<_>>()?;
            if strategies.is_empty() {
                return Err(Error::config(line, "strategies", "empty list"));
            }
        }
        s.finish()?;
    }

    let mut sweep = None;
    if let Some(mut s) = sweep_sec {
        let line = s.line;
        let (p, pl) = s
            .string("param")
            .ok_or_else(|| Error::config(line, "param", "[sweep] needs a param"))?;
        let param = SweepParam::parse(&p)
            .ok_or_else(|| Error::config(pl, "param", format!("unknown parameter `{p}` (beta, gamma, T, b, c)")))?;
        let (values, vl) = s
            .list("values")?
            .ok_or_else(|| Error::config(line, "values", "[sweep] needs values"))?;
        if values.is_empty() {
            return Err(Error::config(vl, "values", "empty list"));
        }
        s.finish()?;
        sweep = Some(SweepSettings { param, values });
    }

    let mut output = OutputConfig::default();
    if let Some(mut s) = output_sec {
        if let Some((v, _)) = s.string("dir") {
            output.dir = PathBuf::from(v);
        }
        for (key, slot) in [
            ("solution", &mut output.solution),
            ("sweep", &mut output.sweep),
            ("compare", &mut output.compare),
            ("simulate", &mut output.simulate),
            ("probe", &mut output.probe),
        ] {
            if let Some((v, _)) = s.string(key) {
                *slot = v;
            }
        }
        s.finish()?;
    }

    let mut abm = None;
    if let Some(mut s) = abm_sec {
        let mut a = AbmSettings::default();
        if let Some((v, l)) = s.u64("n_agents")? {
            if v == 0 {
                return Err(Error::config(l, "n_agents", "must be at least 1"));
            }
            a.n_agents = v;
        }
        if let Some((v, l)) = s.usize("replications")? {
            if v == 0 {
                return Err(Error::config(l, "replications", "must be at least 1"));
            }
            a.replications = v;
        }
        if let Some((v, l)) = s.f64("dt_event")? {
            if v <= 0.0 || v > t_final {
                return Err(Error::config(l, "dt_event", "must lie in (0, T]"));
            }
            a.dt_event = Some(v);
        }
        if let Some((v, l)) = s.string("controls") {
            a.controls = parse_strategy(&v, l, "controls", &solver)?;
        }
        s.finish()?;
        abm = Some(a);
    }

    let mut probe_guesses: Vec<Vec<f64>> = if is_sir {
        vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![-2.0, 0.0], vec![-5.0, 0.0]]
    } else {
        vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0]]
    };
    if let Some(mut s) = probe_sec {
        if let Some((v, l)) = s.vectors("guesses")? {
            if v.len() < 2 || v.iter().any(|g| g.len() != dim) {
                return Err(Error::config(l, "guesses", format!("need at least two guesses of {dim} components")));
            }
            probe_guesses = v;
        }
        s.finish()?;
    }

    Ok(RunConfig {
        model,
        solver,
        strategies,
        sweep,
        output,
        abm,
        probe_guesses,
        paper_literal_sir,
        seed,
    })
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_vectors(v: &[Vec<f64>]) -> String {
    v.iter().map(|g| fmt_list(g)).collect::<Vec<_>>().join("; ")
}

fn dump_profile(out: &mut String, section: &str, p: &RateProfile) {
    let _ = writeln!(out, "\n[{section}]\nprofile = {}", p.variant_name());
    match p {
        RateProfile::Constant { value } => {
            let _ = writeln!(out, "value = {value}");
        }
        RateProfile::SigmoidUp {
            min,
            max,
            steepness,
            center,
        }
        | RateProfile::SigmoidDown {
            min,
            max,
            steepness,
            center,
        } => {
            let _ = writeln!(out, "min = {min}\nmax = {max}\nsteepness = {steepness}\ncenter = {center}");
        }
        RateProfile::Cosine {
            mean,
            amplitude,
            period,
        } => {
            let _ = writeln!(out, "mean = {mean}\namplitude = {amplitude}\nperiod = {period}");
        }
        RateProfile::Table { times, values } => {
            let _ = writeln!(out, "times = {}\nvalues = {}", fmt_list(times), fmt_list(values));
        }
    }
}

/// Normalized text with every default spelled out; parses back to `cfg`.
pub fn dump_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let (beta, gamma) = match &cfg.model {
        Model::Sis(p) => {
            let _ = writeln!(
                out,
                "[sis]\nT = {}\nb = {}\nu_max = {}\ni0 = {}\nn_steps = {}",
                p.t_final, p.b, p.u_max, p.i0, p.n_steps
            );
            (&p.beta, &p.gamma)
        }
        Model::Sir(p) => {
            let _ = writeln!(
                out,
                "[sir]\nT = {}\nb = {}\nc = {}\nu1_max = {}\nu2_max = {}\ni0 = {}\nn_steps = {}",
                p.t_final, p.b, p.c, p.u1_max, p.u2_max, p.i0, p.n_steps
            );
            (&p.beta, &p.gamma)
        }
    };
    dump_profile(&mut out, "beta", beta);
    dump_profile(&mut out, "gamma", gamma);

    let s = &cfg.solver;
    let _ = writeln!(
        out,
        "\n[solver]\nmethod = {}\nmax_iters = {}\ntol_residual = {}\ntol_control = {}\nrelaxation = {}",
        s.method.name(),
        s.max_iters,
        s.tol_residual,
        s.tol_control,
        s.relaxation
    );
    if let Some(g) = &s.initial_costate_guess {
        let _ = writeln!(out, "initial_costate_guess = {}", fmt_list(g));
    }
    if !s.multi_start.is_empty() {
        let _ = writeln!(out, "multi_start = {}", fmt_vectors(&s.multi_start));
    }

    let names: Vec<&str> = cfg.strategies.iter().map(|s| s.name()).collect();
    let _ = writeln!(out, "\n[strategy]\nstrategies = {}", names.join(", "));

    if let Some(sw) = &cfg.sweep {
        let _ = writeln!(out, "\n[sweep]\nparam = {}\nvalues = {}", sw.param, fmt_list(&sw.values));
    }

    let o = &cfg.output;
    let _ = writeln!(
        out,
        "\n[output]\ndir = {}\nsolution = {}\nsweep = {}\ncompare = {}\nsimulate = {}\nprobe = {}",
        o.dir.display(),
        o.solution,
        o.sweep,
        o.compare,
        o.simulate,
        o.probe
    );

    if let Some(a) = &cfg.abm {
        let _ = writeln!(
            out,
            "\n[abm]\nn_agents = {}\nreplications = {}\ncontrols = {}",
            a.n_agents,
            a.replications,
            a.controls.name()
        );
        if let Some(dt) = a.dt_event {
            let _ = writeln!(out, "dt_event = {dt}");
        }
    }

    let _ = writeln!(out, "\n[probe]\nguesses = {}", fmt_vectors(&cfg.probe_guesses));
    let _ = writeln!(out, "\n[flags]\npaper_literal_sir = {}", cfg.paper_literal_sir);
    let _ = writeln!(out, "\n[run]\nseed = {}", cfg.seed);
    out
}

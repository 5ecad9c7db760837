//! Two-point boundary value solvers for the Pontryagin system.
//!
//! Two independent routes are provided:
//!
//! * **Shooting** integrates state and costate together from a guessed
//!   initial costate, substituting the Hamiltonian-maximising control
//!   pointwise, and refines the guess with a Nelder–Mead simplex (followed by
//!   a finite-difference Newton polish) until the terminal costate matches
//!   the transversality condition.
//! * **Forward–backward sweep** holds a gridded control, integrates the state
//!   forward and the costate backward, and relaxes the control towards the
//!   pointwise Hamiltonian maximiser until it stops changing.
//!
//! Failing to converge is not an error: the returned [`Solution`] carries
//! `converged = false` and its diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{integrate_forward_projected, ControlGrid, StateVector, Trajectory};
use crate::problem::{check_controls, clamp_box, ControlProblem, Controls};
use crate::simplex::nelder_mead;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Shooting,
    ForwardBackwardSweep,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Shooting => "shooting",
            Method::ForwardBackwardSweep => "fbs",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "shooting" => Some(Method::Shooting),
            "fbs" | "forward_backward_sweep" | "forward-backward-sweep" => Some(Method::ForwardBackwardSweep),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub max_iters: usize,
    /// Shooting: Euclidean norm of the terminal costate mismatch.
    pub tol_residual: f64,
    /// Sweep: sup-norm gap between the applied and the Hamiltonian-maximising control.
    pub tol_control: f64,
    /// Sweep: initial weight of the new control in each update.
    pub relaxation: f64,
    /// Shooting: initial costate guess; defaults to the terminal costate.
    pub initial_costate_guess: Option<Vec<f64>>,
    /// Shooting: extra starting guesses, searched concurrently.
    pub multi_start: Vec<Vec<f64>>,
    /// Seed for simplex restarts.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Shooting,
            max_iters: 2000,
            tol_residual: 1e-6,
            tol_control: 1e-6,
            relaxation: 0.5,
            initial_costate_guess: None,
            multi_start: Vec::new(),
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn shooting() -> Self {
        Self::default()
    }

    pub fn fbs() -> Self {
        SolverOptions {
            method: Method::ForwardBackwardSweep,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::invalid("tol_residual", "must be > 0"));
        }
        if !(self.tol_control > 0.0) {
            return Err(Error::invalid("tol_control", "must be > 0"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::invalid("relaxation", "must lie in (0, 1]"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        Ok(())
    }
}

/// Result of a solve, converged or not.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize, const M: usize> {
    pub controls: Controls<M>,
    pub state: Trajectory<[f64; N]>,
    pub adjoint: Trajectory<[f64; N]>,
    pub cost: f64,
    pub converged: bool,
    /// Shooting: terminal costate mismatch. Sweep: final control gap.
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

impl<const N: usize, const M: usize> Solution<N, M> {
    pub fn initial_costate(&self) -> [f64; N] {
        self.adjoint.initial()
    }

    pub fn terminal_costate(&self) -> [f64; N] {
        self.adjoint.terminal()
    }

    /// Largest sup-norm distance between corresponding controls.
    pub fn control_distance(&self, other: &Solution<N, M>) -> Result<f64> {
        let mut d: f64 = 0.0;
        for (a, b) in self.controls.iter().zip(&other.controls) {
            d = d.max(a.sup_distance(b)?);
        }
        Ok(d)
    }
}

/// State and costate integrated together.
#[derive(Debug, Clone, Copy)]
struct Coupled<const N: usize> {
    x: [f64; N],
    lam: [f64; N],
}

impl<const N: usize> StateVector for Coupled<N> {
    fn zero() -> Self {
        Coupled {
            x: [0.0; N],
            lam: [0.0; N],
        }
    }

    fn add_scaled(self, other: Self, factor: f64) -> Self {
        Coupled {
            x: self.x.add_scaled(other.x, factor),
            lam: self.lam.add_scaled(other.lam, factor),
        }
    }

    fn all_finite(&self) -> bool {
        self.x.all_finite() && self.lam.all_finite()
    }
}

fn shoot<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    lambda0: [f64; N],
) -> Result<Trajectory<Coupled<N>>> {
    integrate_forward_projected(
        |t, z: &Coupled<N>| {
            let u = problem.hamiltonian_control(t, &z.x, &z.lam);
            Coupled {
                x: problem.state_rhs(t, &z.x, &u),
                lam: problem.adjoint_rhs(t, &z.x, &z.lam, &u),
            }
        },
        Coupled {
            x: problem.initial_state(),
            lam: lambda0,
        },
        problem.grid(),
        |k, z| {
            Ok(Coupled {
                x: problem.project_state(k, z.x)?,
                lam: z.lam,
            })
        },
    )
}

/// Terminal costate mismatch `λ(T) - λ_target` for an initial costate guess.
/// Blow-ups are reported as infinite components.
pub fn shooting_residual<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    lambda0: &[f64; N],
) -> [f64; N] {
    match shoot(problem, *lambda0) {
        Ok(tr) => {
            let target = problem.terminal_costate();
            let lam_t = tr.terminal().lam;
            std::array::from_fn(|n| lam_t[n] - target[n])
        }
        Err(_) => [f64::INFINITY; N],
    }
}

fn norm(v: &[f64]) -> f64 {
    let s: f64 = v.iter().map(|x| x * x).sum();
    if s.is_nan() {
        f64::INFINITY
    } else {
        s.sqrt()
    }
}

/// Solves the dense `N x N` system `a x = rhs` by Gaussian elimination.
fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut rhs: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Newton steps with a forward-difference Jacobian; only improving steps are kept.
fn newton_polish<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    mut x: [f64; N],
    mut fx: f64,
    max_steps: usize,
) -> ([f64; N], f64, usize) {
    let mut used = 0;
    for _ in 0..max_steps {
        if fx == 0.0 {
            break;
        }
        used += 1;
        let r = shooting_residual(problem, &x);
        let mut jac = [[0.0; N]; N];
        for j in 0..N {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += h;
            let rp = shooting_residual(problem, &xp);
            for i in 0..N {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let Some(dx) = solve_linear(jac, r.map(|v| -v)) else {
            break;
        };
        let cand: [f64; N] = std::array::from_fn(|n| x[n] + dx[n]);
        let fc = norm(&shooting_residual(problem, &cand));
        if fc < fx {
            x = cand;
            fx = fc;
        } else {
            break;
        }
    }
    (x, fx, used)
}

struct ShotResult<const N: usize> {
    lambda0: [f64; N],
    iterations: usize,
}

fn shoot_from<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    start: [f64; N],
    opts: &SolverOptions,
    seed: u64,
) -> ShotResult<N> {
    let objective = |x: &[f64]| {
        let arr: [f64; N] = std::array::from_fn(|n| x[n]);
        norm(&shooting_residual(problem, &arr))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = start;
    let mut best_val = objective(&start);
    let mut iterations = 0;
    let mut step = vec![0.5; N];
    while iterations < opts.max_iters {
        let res = nelder_mead(objective, &best, &step, opts.tol_residual, opts.max_iters - iterations);
        iterations += res.iterations.max(1);
        if res.value < best_val {
            best = std::array::from_fn(|n| res.point[n]);
            best_val = res.value;
        }
        let (x, fx, used) = newton_polish(problem, best, best_val, 8);
        iterations += used;
        best = x;
        best_val = fx;
        if best_val <= opts.tol_residual {
            break;
        }
        // Collapsed or stalled simplex: restart around the incumbent.
        step = (0..N).map(|_| rng.random_range(0.05..1.0)).collect();
    }
    ShotResult {
        lambda0: best,
        iterations,
    }
}

fn costate_guess<const N: usize>(guess: &[f64]) -> Result<[f64; N]> {
    if guess.len() != N {
        return Err(Error::invalid(
            "initial_costate_guess",
            format!("expected {N} components, got {}", guess.len()),
        ));
    }
    Ok(std::array::from_fn(|n| guess[n]))
}

/// Sup-norm gap at which the post-shooting consistency sweeps stop.
const CONSISTENCY_TOL: f64 = 1e-10;
const CONSISTENCY_SWEEPS: usize = 60;

/// Shooting on the initial costate.
pub fn solve_shooting<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    opts: &SolverOptions,
) -> Result<Solution<N, M>> {
    problem.validate()?;
    opts.validate()?;
    let mut starts = vec![match &opts.initial_costate_guess {
        Some(g) => costate_guess(g)?,
        None => problem.terminal_costate(),
    }];
    for g in &opts.multi_start {
        starts.push(costate_guess(g)?);
    }
    let shots: Vec<ShotResult<N>> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &s)| shoot_from(problem, s, opts, opts.seed.wrapping_add(k as u64)))
        .collect();
    let mut candidates = Vec::with_capacity(shots.len());
    for shot in shots {
        let sol = shooting_solution(problem, &shot, opts)?;
        candidates.push(sol);
    }
    let iterations: usize = candidates.iter().map(|s| s.iterations).sum();
    let best = candidates
        .into_iter()
        .min_by(|a, b| {
            (!a.converged)
                .cmp(&!b.converged)
                .then(if a.converged {
                    a.cost.total_cmp(&b.cost)
                } else {
                    a.residual.total_cmp(&b.residual)
                })
        })
        .expect("at least one start");
    Ok(Solution { iterations, ..best })
}

fn shooting_solution<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    shot: &ShotResult<N>,
    opts: &SolverOptions,
) -> Result<Solution<N, M>> {
    let coupled = match shoot(problem, shot.lambda0) {
        Ok(tr) => tr,
        Err(_) => {
            // No finite trajectory from this guess; report the uncontrolled run.
            let controls = problem.zero_controls();
            let state = problem.simulate(&controls)?;
            let adjoint = problem.costate(&state, &controls)?;
            let cost = problem.cost(&state, &controls)?;
            return Ok(Solution {
                controls,
                state,
                adjoint,
                cost,
                converged: false,
                residual: f64::INFINITY,
                iterations: shot.iterations,
                method: Method::Shooting,
            });
        }
    };
    let grid = coupled.grid();
    let split = |f: fn(&Coupled<N>) -> [f64; N]| {
        Trajectory::from_parts(
            grid,
            coupled.states().iter().map(f).collect(),
            coupled.slopes().map(|s| s.iter().map(f).collect()),
        )
    };
    let state = split(|z| z.x);
    let adjoint = split(|z| z.lam);
    let controls = problem.hamiltonian_controls(&state, &adjoint)?;
    let target = problem.terminal_costate();
    let lam_t = adjoint.terminal();
    let residual = norm(&std::array::from_fn::<f64, N, _>(|n| lam_t[n] - target[n]));
    let converged = residual <= opts.tol_residual;
    if converged {
        // The gridded control interpolates linearly between nodes, which near a
        // clamp kink differs from the pointwise law by O(dt^2). A few sweeps
        // from the shooting control make state, costate and grid control
        // mutually consistent on the grid.
        let polished = sweep_from(problem, controls.clone(), 0.5, CONSISTENCY_TOL, CONSISTENCY_SWEEPS)?;
        if polished.converged {
            return Ok(Solution {
                residual,
                iterations: shot.iterations + polished.iterations,
                method: Method::Shooting,
                ..polished
            });
        }
    }
    let cost = problem.cost(&state, &controls)?;
    Ok(Solution {
        controls,
        state,
        adjoint,
        cost,
        converged,
        residual,
        iterations: shot.iterations,
        method: Method::Shooting,
    })
}

/// Forward–backward sweep starting from zero control.
///
/// The returned controls are the ones the returned state was integrated
/// under; `residual` is their sup-norm gap to the Hamiltonian maximiser.
pub fn solve_fbs<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    opts: &SolverOptions,
) -> Result<Solution<N, M>> {
    problem.validate()?;
    opts.validate()?;
    sweep_from(problem, problem.zero_controls(), opts.relaxation, opts.tol_control, opts.max_iters)
}

/// Relaxed forward–backward sweeps from `controls`.
fn sweep_from<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    mut controls: Controls<M>,
    relaxation: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Solution<N, M>> {
    let mut relax = relaxation;
    let mut prev_gap = f64::INFINITY;
    for it in 1..=max_iters {
        let state = problem.simulate(&controls)?;
        let adjoint = problem.costate(&state, &controls)?;
        let target = problem.hamiltonian_controls(&state, &adjoint)?;
        let mut gap: f64 = 0.0;
        for (a, b) in target.iter().zip(&controls) {
            gap = gap.max(a.sup_distance(b)?);
        }
        if gap <= tol || it == max_iters {
            let cost = problem.cost(&state, &controls)?;
            return Ok(Solution {
                controls,
                state,
                adjoint,
                cost,
                converged: gap <= tol,
                residual: gap,
                iterations: it,
                method: Method::ForwardBackwardSweep,
            });
        }
        if gap > prev_gap {
            relax = (relax * 0.5).max(1e-3);
        }
        prev_gap = gap;
        controls = std::array::from_fn(|m| {
            let old = controls[m].values();
            let new = target[m].values();
            ControlGrid::from_fn(controls[m].grid(), |k, _| relax * new[k] + (1.0 - relax) * old[k])
        });
    }
    unreachable!("max_iters >= 1")
}

/// Dispatches on `opts.method`.
pub fn solve<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    opts: &SolverOptions,
) -> Result<Solution<N, M>> {
    match opts.method {
        Method::Shooting => solve_shooting(problem, opts),
        Method::ForwardBackwardSweep => solve_fbs(problem, opts),
    }
}

/// Finite-difference first-order optimality audit.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Directional derivative of J along each sampled projected direction.
    pub derivatives: Vec<f64>,
    /// Smallest directional derivative (0 when no direction is admissible).
    pub worst: f64,
    pub worst_direction: Option<usize>,
    /// Directions whose projection onto the control box moved the control.
    pub admissible_directions: usize,
    pub eps: f64,
}

impl StationarityReport {
    pub fn is_stationary(&self, tol: f64) -> bool {
        self.worst >= -tol
    }
}

pub const STATIONARITY_TOL: f64 = 1e-5;
pub const STATIONARITY_EPS: f64 = 1e-6;

/// Audits a converged solution; see [`audit_controls`].
pub fn verify_stationarity<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    sol: &Solution<N, M>,
    n_directions: usize,
    eps: f64,
    seed: u64,
) -> Result<StationarityReport> {
    if !sol.converged {
        return Err(Error::invalid("solution", "stationarity audit needs a converged solution"));
    }
    audit_controls(problem, &sol.controls, n_directions, eps, seed)
}

/// Samples smooth random directions `d` (a random cosine series with
/// sup-norm 1 per channel, scaled by the channel's box size), projects
/// `u + eps d` onto the box and reports `(J(P(u + eps d)) - J(u)) / eps`.
pub fn audit_controls<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    controls: &Controls<M>,
    n_directions: usize,
    eps: f64,
    seed: u64,
) -> Result<StationarityReport> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be > 0"));
    }
    let grid = problem.grid();
    check_controls(grid, controls)?;
    let bounds = problem.control_bounds();
    let (base, _) = problem.evaluate(controls)?;

    const MODES: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<[[f64; MODES]; M]> = (0..n_directions)
        .map(|_| std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))))
        .collect();
    let horizon = grid.t_end() - grid.t0();

    let results: Vec<Result<(f64, bool)>> = coeffs
        .par_iter()
        .map(|a| {
            let mut moved = false;
            let perturbed: Controls<M> = std::array::from_fn(|m| {
                let raw: Vec<f64> = grid
                    .times()
                    .map(|t| {
                        let phase = std::f64::consts::PI * (t - grid.t0()) / horizon;
                        (0..MODES).map(|j| a[m][j] * (j as f64 * phase).cos()).sum()
                    })
                    .collect();
                let sup = raw.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
                let u = controls[m].values();
                ControlGrid::from_fn(grid, |k, _| {
                    let v = clamp_box(u[k] + eps * bounds[m] * raw[k] / sup, bounds[m]);
                    if v != u[k] {
                        moved = true;
                    }
                    v
                })
            });
            if !moved {
                return Ok((0.0, false));
            }
            let (j, _) = problem.evaluate(&perturbed)?;
            Ok(((j - base) / eps, true))
        })
        .collect();

    let mut derivatives = Vec::with_capacity(n_directions);
    let mut admissible = 0;
    for r in results {
        let (d, moved) = r?;
        admissible += usize::from(moved);
        derivatives.push(d);
    }
    let (worst_direction, worst) = derivatives
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or((None, 0.0), |(k, v)| (Some(k), v));
    Ok(StationarityReport {
        derivatives,
        worst,
        worst_direction,
        admissible_directions: admissible,
        eps,
    })
}

/// Initial costates closer than this are considered the same solution.
pub const UNIQUENESS_SEPARATION: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ProbeRun<const N: usize> {
    pub guess: [f64; N],
    pub converged: bool,
    pub lambda0: [f64; N],
    pub cost: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct CostateCluster<const N: usize> {
    pub lambda0: [f64; N],
    pub cost: f64,
    /// Indices into [`UniquenessReport::runs`].
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport<const N: usize> {
    pub runs: Vec<ProbeRun<N>>,
    pub clusters: Vec<CostateCluster<N>>,
}

impl<const N: usize> UniquenessReport<N> {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Largest distance between converged initial costates.
    pub fn spread(&self) -> f64 {
        let conv: Vec<&ProbeRun<N>> = self.runs.iter().filter(|r| r.converged).collect();
        let mut spread: f64 = 0.0;
        for a in &conv {
            for b in &conv {
                spread = spread.max(distance(&a.lambda0, &b.lambda0));
            }
        }
        spread
    }

    pub fn non_converged(&self) -> usize {
        self.runs.iter().filter(|r| !r.converged).count()
    }
}

fn distance<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Shoots from every guess independently and groups the converged initial
/// costates that lie within [`UNIQUENESS_SEPARATION`] of each other.
pub fn uniqueness_probe<const N: usize, const M: usize, P: ControlProblem<N, M>>(
    problem: &P,
    guesses: &[[f64; N]],
    opts: &SolverOptions,
) -> Result<UniquenessReport<N>> {
    if guesses.len() < 2 {
        return Err(Error::invalid("guesses", "need at least two starting guesses"));
    }
    let runs: Vec<Result<ProbeRun<N>>> = guesses
        .par_iter()
        .map(|g| {
            let o = SolverOptions {
                method: Method::Shooting,
                initial_costate_guess: Some(g.to_vec()),
                multi_start: Vec::new(),
                ..opts.clone()
            };
            let sol = solve_shooting(problem, &o)?;
            Ok(ProbeRun {
                guess: *g,
                converged: sol.converged,
                lambda0: sol.initial_costate(),
                cost: sol.cost,
                residual: sol.residual,
            })
        })
        .collect();
    let runs: Vec<ProbeRun<N>> = runs.into_iter().collect::<Result<_>>()?;

    let mut clusters: Vec<CostateCluster<N>> = Vec::new();
    for (k, run) in runs.iter().enumerate().filter(|(_, r)| r.converged) {
        match clusters
            .iter_mut()
            .find(|c| c.members.iter().any(|&m| distance(&runs[m].lambda0, &run.lambda0) <= UNIQUENESS_SEPARATION))
        {
            Some(c) => c.members.push(k),
            None => clusters.push(CostateCluster {
                lambda0: run.lambda0,
                cost: run.cost,
                members: vec![k],
            }),
        }
    }
    Ok(UniquenessReport { runs, clusters })
}

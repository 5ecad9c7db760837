//! Fixed-step classical Runge–Kutta integration on a uniform grid.
//!
//! State, adjoint and control all live on the same [`TimeGrid`]. Controls are
//! piecewise-linear grid functions ([`ControlGrid`]) sampled at the RK4
//! half-steps. A forward pass records the state derivative at every node so
//! the backward (adjoint) pass can read the state at half-steps by cubic
//! Hermite interpolation without losing fourth order.

use crate::error::{Error, Result};

/// Uniform discretisation of `[t0, t_end]` into `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
            return Err(Error::invalid("t_end", format!("need t_end > t0, got [{t0}, {t_end}]")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be positive"));
        }
        Ok(TimeGrid { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn node_count(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    /// Time of node `k`; the last node is exactly `t_end`.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.node_count()).map(|k| self.time(k))
    }

    /// Segment index and local coordinate θ ∈ [0, 1] for time `t`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(self.t0..=self.t_end).contains(&t) {
            return Err(Error::Domain {
                what: "grid time",
                value: t,
                lo: self.t0,
                hi: self.t_end,
            });
        }
        Ok(self.locate_clamped(t))
    }

    fn locate_clamped(&self, t: f64) -> (usize, f64) {
        let mut x = ((t - self.t0) / self.dt()).clamp(0.0, self.n_steps as f64);
        // Snap roundoff so that node times land exactly on their node.
        let nearest = x.round();
        if (x - nearest).abs() <= 1e-9 {
            x = nearest;
        }
        let k = (x.floor() as usize).min(self.n_steps - 1);
        (k, x - k as f64)
    }
}

/// A control signal: one value per grid node, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl ControlGrid {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Shape(format!(
                "control has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("control", "non-finite value"));
        }
        Ok(ControlGrid { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        ControlGrid {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|k| f(k, grid.time(k))).collect();
        ControlGrid { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm distance to another control on the same grid.
    pub fn sup_distance(&self, other: &ControlGrid) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape("controls live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Piecewise-linear value at `t`; exact at nodes.
    pub fn sample(&self, t: f64) -> Result<f64> {
        let (k, theta) = self.grid.locate(t)?;
        Ok(self.lerp(k, theta))
    }

    pub(crate) fn sample_clamped(&self, t: f64) -> f64 {
        let (k, theta) = self.grid.locate_clamped(t);
        self.lerp(k, theta)
    }

    fn lerp(&self, k: usize, theta: f64) -> f64 {
        if theta == 0.0 {
            return self.values[k];
        }
        if theta == 1.0 {
            return self.values[k + 1];
        }
        self.values[k] + theta * (self.values[k + 1] - self.values[k])
    }

    /// Trapezoid-rule integral of `f(u(t))` over the grid.
    pub fn trapezoid_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        trapezoid(self.grid, self.values.iter().map(|&u| f(u)))
    }
}

/// Composite trapezoid rule for node values on `grid`.
pub fn trapezoid(grid: TimeGrid, values: impl IntoIterator<Item = f64>) -> f64 {
    let n = grid.n_steps();
    let mut sum = 0.0;
    for (k, v) in values.into_iter().enumerate() {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum * grid.dt()
}

/// Minimal vector-space operations needed by the integrator.
pub trait StateVector: Copy + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    /// `self + factor * other`
    fn add_scaled(self, other: Self, factor: f64) -> Self;
    fn all_finite(&self) -> bool;
    fn scaled(self, factor: f64) -> Self {
        Self::zero().add_scaled(self, factor)
    }
}

impl<const N: usize> StateVector for [f64; N] {
    fn zero() -> Self {
        [0.0; N]
    }

    fn add_scaled(mut self, other: Self, factor: f64) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a += factor * b;
        }
        self
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Samples of a state (or costate) vector at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    grid: TimeGrid,
    states: Vec<S>,
    /// Time derivative at each node, when the producer recorded it.
    slopes: Option<Vec<S>>,
}

impl<S: StateVector> Trajectory<S> {
    pub fn new(grid: TimeGrid, states: Vec<S>) -> Result<Self> {
        if states.len() != grid.node_count() {
            return Err(Error::Shape(format!(
                "trajectory has {} states for {} nodes",
                states.len(),
                grid.node_count()
            )));
        }
        Ok(Trajectory {
            grid,
            states,
            slopes: None,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn initial(&self) -> S {
        self.states[0]
    }

    pub fn terminal(&self) -> S {
        self.states[self.states.len() - 1]
    }

    pub fn has_slopes(&self) -> bool {
        self.slopes.is_some()
    }

    pub(crate) fn from_parts(grid: TimeGrid, states: Vec<S>, slopes: Option<Vec<S>>) -> Self {
        debug_assert_eq!(states.len(), grid.node_count());
        Trajectory { grid, states, slopes }
    }

    pub(crate) fn slopes(&self) -> Option<&[S]> {
        self.slopes.as_deref()
    }

    /// Value at `t`: cubic Hermite when node slopes are known, linear otherwise.
    pub fn sample(&self, t: f64) -> Result<S> {
        let (k, theta) = self.grid.locate(t)?;
        Ok(self.segment_value(k, theta))
    }

    pub(crate) fn segment_value(&self, k: usize, theta: f64) -> S {
        if theta == 0.0 {
            return self.states[k];
        }
        if theta == 1.0 {
            return self.states[k + 1];
        }
        let (x0, x1) = (self.states[k], self.states[k + 1]);
        match &self.slopes {
            Some(m) => {
                let h = self.grid.dt();
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                x0.scaled(h00)
                    .add_scaled(m[k], h * h10)
                    .add_scaled(x1, h01)
                    .add_scaled(m[k + 1], h * h11)
            }
            None => x0.scaled(1.0 - theta).add_scaled(x1, theta),
        }
    }

    /// Maps every node through `f`, dropping recorded slopes.
    pub fn map<T: StateVector>(&self, f: impl Fn(&S) -> T) -> Trajectory<T> {
        Trajectory {
            grid: self.grid,
            states: self.states.iter().map(f).collect(),
            slopes: None,
        }
    }
}

/// One classical RK4 step; `eval(false, y)` evaluates at the half-step and
/// `eval(true, y)` at the end of the step.
fn rk4_step<S: StateVector>(x: S, h: f64, k1: S, mut eval: impl FnMut(bool, S) -> S) -> S {
    let k2 = eval(false, x.add_scaled(k1, 0.5 * h));
    let k3 = eval(false, x.add_scaled(k2, 0.5 * h));
    let k4 = eval(true, x.add_scaled(k3, h));
    let incr = k1.add_scaled(k2, 2.0).add_scaled(k3, 2.0).add_scaled(k4, 1.0);
    x.add_scaled(incr, h / 6.0)
}

/// Integrates `x' = rhs(t, x)` from `x0` across `grid` with classical RK4.
pub fn integrate_forward<S, F>(rhs: F, x0: S, grid: TimeGrid) -> Result<Trajectory<S>>
where
    S: StateVector,
    F: FnMut(f64, &S) -> S,
{
    integrate_forward_projected(rhs, x0, grid, |_, x| Ok(x))
}

/// As [`integrate_forward`], passing each new state through `project`
/// (which may snap rounding noise back into the admissible set or reject
/// the step).
pub fn integrate_forward_projected<S, F, P>(
    mut rhs: F,
    x0: S,
    grid: TimeGrid,
    mut project: P,
) -> Result<Trajectory<S>>
where
    S: StateVector,
    F: FnMut(f64, &S) -> S,
    P: FnMut(usize, S) -> Result<S>,
{
    if !x0.all_finite() {
        return Err(Error::Blowup { step: 0, t: grid.t0() });
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut states = Vec::with_capacity(n + 1);
    let mut slopes = Vec::with_capacity(n + 1);
    let mut x = x0;
    for k in 0..n {
        let t = grid.time(k);
        let t_mid = t + 0.5 * dt;
        let t_next = grid.time(k + 1);
        let k1 = rhs(t, &x);
        states.push(x);
        slopes.push(k1);
        let next = rk4_step(x, dt, k1, |end, y| rhs(if end { t_next } else { t_mid }, &y));
        if !next.all_finite() {
            return Err(Error::Blowup { step: k + 1, t: t_next });
        }
        x = project(k + 1, next)?;
    }
    slopes.push(rhs(grid.t_end(), &x));
    states.push(x);
    Ok(Trajectory {
        grid,
        states,
        slopes: Some(slopes),
    })
}

/// Integrates a costate system `λ' = rhs(t, λ, x(t))` backwards from the
/// terminal value `terminal` at `t_end` to `t0`, reading the state `x` from
/// `state` (exact at nodes, Hermite-interpolated at half-steps).
pub fn integrate_backward<S, X, F>(mut rhs: F, terminal: S, state: &Trajectory<X>) -> Result<Trajectory<S>>
where
    S: StateVector,
    X: StateVector,
    F: FnMut(f64, &S, &X) -> S,
{
    let grid = state.grid();
    if !terminal.all_finite() {
        return Err(Error::Blowup {
            step: grid.n_steps(),
            t: grid.t_end(),
        });
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut states = vec![S::zero(); n + 1];
    let mut slopes = vec![S::zero(); n + 1];
    let mut lam = terminal;
    for k in (1..=n).rev() {
        let t = grid.time(k);
        let t_mid = t - 0.5 * dt;
        let t_prev = grid.time(k - 1);
        let x_now = state.states[k];
        let x_mid = state.segment_value(k - 1, 0.5);
        let x_prev = state.states[k - 1];
        let k1 = rhs(t, &lam, &x_now);
        states[k] = lam;
        slopes[k] = k1;
        let next = rk4_step(lam, -dt, k1, |end, y| {
            if end {
                rhs(t_prev, &y, &x_prev)
            } else {
                rhs(t_mid, &y, &x_mid)
            }
        });
        if !next.all_finite() {
            return Err(Error::Blowup { step: k - 1, t: t_prev });
        }
        lam = next;
    }
    slopes[0] = rhs(grid.t0(), &lam, &state.states[0]);
    states[0] = lam;
    Ok(Trajectory {
        grid,
        states,
        slopes: Some(slopes),
    })
}

/// Samples `u` at `t`; errors outside the grid.
pub fn sample_control(u: &ControlGrid, t: f64) -> Result<f64> {
    u.sample(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(0.0, 5.0, 5000).unwrap();
        assert_eq!(g.node_count(), 5001);
        assert_eq!(g.time(5000), 5.0);
        assert_abs_diff_eq!(g.dt(), 1e-3, epsilon = 1e-18);
    }

    #[test]
    fn control_sampling() {
        let u = ControlGrid::new(unit_grid(1), vec![0.0, 1.0]).unwrap();
        assert_eq!(sample_control(&u, 0.5).unwrap(), 0.5);
        assert_eq!(sample_control(&u, 0.0).unwrap(), 0.0);
        assert_eq!(sample_control(&u, 1.0).unwrap(), 1.0);
        assert!(matches!(sample_control(&u, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(sample_control(&u, -1e-9), Err(Error::Domain { .. })));

        let c = ControlGrid::constant(TimeGrid::new(0.0, 5.0, 7).unwrap(), 0.03);
        for t in [0.0, 0.1, 2.2, 4.99, 5.0] {
            assert_eq!(c.sample(t).unwrap(), 0.03);
        }
    }

    #[test]
    fn control_exact_at_nodes() {
        let g = TimeGrid::new(0.0, 3.0, 30).unwrap();
        let u = ControlGrid::from_fn(g, |_, t| (t * 1.7).sin().abs());
        for k in 0..g.node_count() {
            assert_eq!(u.sample(g.time(k)).unwrap(), u.values()[k]);
        }
    }

    #[test]
    fn control_length_mismatch() {
        assert!(matches!(
            ControlGrid::new(unit_grid(4), vec![0.0; 4]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_rhs_constant_trajectory() {
        let tr = integrate_forward(|_, _: &[f64; 1]| [0.0], [3.5], unit_grid(10)).unwrap();
        assert!(tr.states().iter().all(|x| x[0] == 3.5));
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate_forward(|_, x: &[f64; 1]| [x[0]], [1.0], unit_grid(100)).unwrap();
        assert_abs_diff_eq!(tr.terminal()[0], std::f64::consts::E, epsilon = 1e-7);
    }

    #[test]
    fn backward_exponential() {
        let g = unit_grid(100);
        let dummy = integrate_forward(|_, _: &[f64; 1]| [0.0], [0.0], g).unwrap();
        let lam = integrate_backward(|_, l: &[f64; 1], _x: &[f64; 1]| [-l[0]], [1.0], &dummy).unwrap();
        assert_abs_diff_eq!(lam.initial()[0], std::f64::consts::E, epsilon = 1e-7);
        assert_eq!(lam.terminal()[0], 1.0);

        let flat = integrate_backward(|_, _: &[f64; 1], _x: &[f64; 1]| [0.0], [1.0], &dummy).unwrap();
        assert!(flat.states().iter().all(|l| l[0] == 1.0));
    }

    #[test]
    fn backward_matches_reversed_forward() {
        // λ' = a(t) λ backwards from T equals y' = -a(T - τ) y forwards.
        let a = |t: f64| 0.3 + (2.0 * t).cos();
        let g = TimeGrid::new(0.0, 2.0, 400).unwrap();
        let dummy = integrate_forward(|_, _: &[f64; 1]| [0.0], [0.0], g).unwrap();
        let back = integrate_backward(|t, l: &[f64; 1], _x: &[f64; 1]| [a(t) * l[0]], [1.0], &dummy).unwrap();
        let fwd = integrate_forward(|tau, y: &[f64; 1]| [-a(2.0 - tau) * y[0]], [1.0], g).unwrap();
        for k in 0..g.node_count() {
            let l = back.states()[g.n_steps() - k][0];
            let y = fwd.states()[k][0];
            assert!((l - y).abs() <= 1e-10, "node {k}: {l} vs {y}");
        }
    }

    #[test]
    fn blowup_reported_with_step() {
        let err = integrate_forward(|_, x: &[f64; 1]| [x[0] * x[0]], [1.0], TimeGrid::new(0.0, 2.0, 20).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Blowup { step, .. } if step > 0));
    }

    #[test]
    fn hermite_sampling_is_fourth_order_accurate() {
        let g = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let tr = integrate_forward(|_, x: &[f64; 1]| [x[0]], [1.0], g).unwrap();
        let t = 0.51;
        assert_abs_diff_eq!(tr.sample(t).unwrap()[0], t.exp(), epsilon = 1e-8);
        let lin = Trajectory::new(g, tr.states().to_vec()).unwrap();
        assert!((lin.sample(t).unwrap()[0] - t.exp()).abs() > 1e-6);
    }

    #[test]
    fn trapezoid_of_constant_and_linear() {
        let g = TimeGrid::new(0.0, 5.0, 50).unwrap();
        let c = ControlGrid::constant(g, 0.03);
        assert_abs_diff_eq!(c.trapezoid_of(|u| u), 0.15, epsilon = 1e-14);
        let lin = ControlGrid::from_fn(g, |_, t| t);
        assert_abs_diff_eq!(lin.trapezoid_of(|u| u), 12.5, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_bitwise() {
        let g = TimeGrid::new(0.0, 5.0, 500).unwrap();
        let f = |t: f64, x: &[f64; 2]| [-x[1] * t.sin(), x[0] - 0.1 * x[1]];
        let a = integrate_forward(f, [1.0, 0.5], g).unwrap();
        let b = integrate_forward(f, [1.0, 0.5], g).unwrap();
        assert_eq!(a, b);
    }
}

//! Classical fourth-order Runge-Kutta integration on a uniform grid, forward
//! in time for states and backward for adjoints, plus trapezoid quadrature
//! and piecewise-linear sampling of stored trajectories.

use num_traits::Float;

use crate::error::Error;
use crate::scalar::Scalar;

/// Nominal grid spacing in years: 1000 steps over a 5-year horizon.
pub const DEFAULT_STEP_YEARS: f64 = 0.005;

/// Minimal vector operations the integrator needs.
pub trait OdeVector<F: Scalar>: Copy {
    fn zero() -> Self;
    fn scale(self, c: F) -> Self;
    fn add(self, other: Self) -> Self;
    fn max_abs(self) -> F;
    fn is_finite(self) -> bool;

    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-F::one()))
    }
}

impl<F: Scalar> OdeVector<F> for F {
    fn zero() -> Self {
        F::zero()
    }

    fn scale(self, c: F) -> Self {
        self * c
    }

    fn add(self, other: Self) -> Self {
        self + other
    }

    fn max_abs(self) -> F {
        self.abs()
    }

    fn is_finite(self) -> bool {
        Float::is_finite(self)
    }
}

/// Uniform partition of `[t0, t1]` into `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<F> {
    t0: F,
    t1: F,
    n_steps: usize,
}

impl<F: Scalar> TimeGrid<F> {
    pub fn new(t0: F, t1: F, n_steps: usize) -> Result<Self, Error<F>> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid("grid endpoints must be finite"));
        }
        if t1 <= t0 {
            return Err(Error::invalid(format!(
                "grid must have t1 > t0, got [{t0}, {t1}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        Ok(TimeGrid { t0, t1, n_steps })
    }

    /// Grid over `[0, t_f]` at the nominal spacing of
    /// [`DEFAULT_STEP_YEARS`], rounded to a whole number of steps.
    pub fn with_default_resolution(t_f: F) -> Result<Self, Error<F>> {
        if !t_f.is_finite() || t_f <= F::zero() {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {t_f}"
            )));
        }
        let steps = (t_f / F::real(DEFAULT_STEP_YEARS))
            .round()
            .to_usize()
            .ok_or_else(|| Error::invalid("horizon too long for the default grid"))?;
        TimeGrid::new(F::zero(), t_f, steps.max(1))
    }

    pub fn t0(&self) -> F {
        self.t0
    }

    pub fn t1(&self) -> F {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> F {
        (self.t1 - self.t0) / F::count(self.n_steps)
    }

    /// Time of node `k`; node `n_steps` is exactly `t1`.
    pub fn node(&self, k: usize) -> F {
        if k == self.n_steps {
            self.t1
        } else {
            self.t0 + F::count(k) * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = F> + '_ {
        (0..self.n_nodes()).map(move |k| self.node(k))
    }
}

/// Values of a quantity at every node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F, V> {
    grid: TimeGrid<F>,
    values: Vec<V>,
}

impl<F: Scalar, V: OdeVector<F>> Trajectory<F, V> {
    pub fn new(grid: TimeGrid<F>, values: Vec<V>) -> Result<Self, Error<F>> {
        if values.len() != grid.n_nodes() {
            return Err(Error::invalid(format!(
                "trajectory needs {} values for this grid, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(Trajectory { grid, values })
    }

    pub fn constant(grid: TimeGrid<F>, value: V) -> Self {
        Trajectory {
            grid,
            values: vec![value; grid.n_nodes()],
        }
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn value(&self, k: usize) -> V {
        self.values[k]
    }

    pub fn first(&self) -> V {
        self.values[0]
    }

    pub fn last(&self) -> V {
        *self.values.last().expect("trajectory is never empty")
    }

    /// Piecewise-linear interpolation, clamped to the grid span.
    pub fn sample(&self, t: F) -> V {
        let h = self.grid.step();
        let position = (t - self.grid.t0) / h;
        if position <= F::zero() {
            return self.first();
        }
        let last = self.grid.n_steps();
        let index = position
            .floor()
            .to_usize()
            .unwrap_or(last)
            .min(last.saturating_sub(1));
        let theta = position - F::count(index);
        let theta = theta.max(F::zero()).min(F::one());
        let left = self.values[index];
        let right = self.values[index + 1];
        left.add(right.sub(left).scale(theta))
    }

    /// Applies `f` at every node, keeping the grid.
    pub fn map<W: OdeVector<F>>(&self, mut f: impl FnMut(F, V) -> W) -> Trajectory<F, W> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.grid.node(k), v))
            .collect();
        Trajectory {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> F {
        self.values
            .iter()
            .map(|v| v.max_abs())
            .fold(F::zero(), F::max)
    }
}

/// Max-norm change from `previous` to `current`, relative to
/// `max(1, max-norm of current)`. Both trajectories must share a grid.
pub fn relative_change<F: Scalar, V: OdeVector<F>>(
    current: &Trajectory<F, V>,
    previous: &Trajectory<F, V>,
) -> F {
    debug_assert_eq!(current.grid, previous.grid);
    let diff = current
        .values
        .iter()
        .zip(&previous.values)
        .map(|(&a, &b)| a.sub(b).max_abs())
        .fold(F::zero(), F::max);
    diff / F::one().max(current.max_abs())
}

fn rk4_step<F, V, R>(t: F, y: V, h: F, rhs: &mut R) -> V
where
    F: Scalar,
    V: OdeVector<F>,
    R: FnMut(F, V) -> V,
{
    let half = h * F::real(0.5);
    let two = F::real(2.0);
    let k1 = rhs(t, y);
    let k2 = rhs(t + half, y.add(k1.scale(half)));
    let k3 = rhs(t + half, y.add(k2.scale(half)));
    let k4 = rhs(t + h, y.add(k3.scale(h)));
    let increment = k1.add(k2.scale(two)).add(k3.scale(two)).add(k4);
    y.add(increment.scale(h / F::real(6.0)))
}

/// Integrates `y' = rhs(t, y)` from `y(t0) = y0` across the grid.
///
/// Fails with a blow-up error naming the step index as soon as any component
/// stops being finite.
pub fn rk4_forward<F, V, R>(grid: &TimeGrid<F>, y0: V, mut rhs: R) -> Result<Trajectory<F, V>, Error<F>>
where
    F: Scalar,
    V: OdeVector<F>,
    R: FnMut(F, V) -> V,
{
    if !y0.is_finite() {
        return Err(Error::invalid("initial value must be finite"));
    }
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.n_nodes());
    values.push(y0);
    let mut y = y0;
    for k in 0..grid.n_steps() {
        y = rk4_step(grid.node(k), y, h, &mut rhs);
        if !y.is_finite() {
            return Err(Error::BlowUp { step: k });
        }
        values.push(y);
    }
    Trajectory::new(*grid, values)
}

/// Integrates `y' = rhs(t, y)` from the terminal condition `y(t1) = y_final`
/// down the grid; the stored value at `t1` equals `y_final` exactly.
pub fn rk4_backward<F, V, R>(
    grid: &TimeGrid<F>,
    y_final: V,
    mut rhs: R,
) -> Result<Trajectory<F, V>, Error<F>>
where
    F: Scalar,
    V: OdeVector<F>,
    R: FnMut(F, V) -> V,
{
    if !y_final.is_finite() {
        return Err(Error::invalid("terminal value must be finite"));
    }
    let h = grid.step();
    let mut values = vec![V::zero(); grid.n_nodes()];
    values[grid.n_steps()] = y_final;
    let mut y = y_final;
    for k in (1..=grid.n_steps()).rev() {
        y = rk4_step(grid.node(k), y, -h, &mut rhs);
        if !y.is_finite() {
            return Err(Error::BlowUp { step: k - 1 });
        }
        values[k - 1] = y;
    }
    Trajectory::new(*grid, values)
}

/// Trapezoid rule over the grid; `samples` holds one value per node.
pub fn trapezoid<F: Scalar>(grid: &TimeGrid<F>, samples: &[F]) -> Result<F, Error<F>> {
    if samples.len() != grid.n_nodes() {
        return Err(Error::invalid(format!(
            "quadrature needs {} samples for this grid, got {}",
            grid.n_nodes(),
            samples.len()
        )));
    }
    let sum: F = samples.iter().copied().sum();
    let ends = samples[0] + samples[samples.len() - 1];
    Ok(grid.step() * (sum - F::real(0.5) * ends))
}

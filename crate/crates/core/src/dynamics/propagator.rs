//! Classical fourth-order Runge-Kutta for a two-component complex state,
//! with phase-limited substepping.
//!
//! Samples sit on a uniform base grid. Each base interval is split into
//! `m` equal RK4 substeps so that the phase accumulated by the fastest
//! oscillation of the equation over one substep stays below a fixed bound.
//! Without this the stability function of RK4 damps the rapidly rotating
//! component and the norm leaks.

use num_complex::Complex64;

use super::{Sample, StepControl};
use crate::error::{Error, Result};

pub(crate) type State = [Complex64; 2];

/// A linear two-level equation `y' = A(x) y` in some independent variable `x`.
pub(crate) trait TwoLevelEquation {
    fn rhs(&self, x: f64, y: &State) -> State;

    /// Upper bound of the local angular frequency on `[a, b]`, per unit `x`.
    fn max_rate(&self, a: f64, b: f64) -> f64;

    /// Converts the raw state into a reported sample.
    fn sample(&self, x: f64, y: &State) -> Sample;

    /// Quantity that the exact flow conserves (equal to 1 initially).
    fn norm(&self, y: &State) -> f64 {
        y[0].norm_sqr() + y[1].norm_sqr()
    }
}

/// Uniform base grid `x0 + k (x1 - x0) / n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BaseGrid {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
    pub stride: usize,
}

impl BaseGrid {
    pub fn dx(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.x1 - self.x0) / self.n as f64
        }
    }

    fn node(&self, k: usize) -> f64 {
        if k == self.n {
            self.x1
        } else {
            self.x0 + self.dx() * k as f64
        }
    }
}

pub(crate) struct Propagation {
    pub samples: Vec<Sample>,
    pub norm_drift: f64,
    pub max_substeps: usize,
}

#[inline]
fn axpy(y: &State, h: f64, k: &State) -> State {
    [y[0] + k[0] * h, y[1] + k[1] * h]
}

#[inline]
pub(crate) fn rk4_step<E: TwoLevelEquation>(eq: &E, x: f64, y: &State, h: f64) -> State {
    let half = 0.5 * h;
    let k1 = eq.rhs(x, y);
    let k2 = eq.rhs(x + half, &axpy(y, half, &k1));
    let k3 = eq.rhs(x + half, &axpy(y, half, &k2));
    let k4 = eq.rhs(x + h, &axpy(y, h, &k3));
    let w = h / 6.0;
    [
        y[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
        y[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
    ]
}

fn substeps<E: TwoLevelEquation>(eq: &E, a: f64, b: f64, control: &StepControl) -> u64 {
    match control.max_phase_per_step {
        None => 1,
        Some(max_phase) => {
            let phase = eq.max_rate(a, b) * (b - a).abs();
            let m = (phase / max_phase).ceil();
            if m.is_finite() {
                m.max(1.0) as u64
            } else {
                u64::MAX
            }
        }
    }
}

/// Total RK4 steps the run will take, checked against the budget before
/// any integration happens.
fn plan<E: TwoLevelEquation>(eq: &E, grid: &BaseGrid, control: &StepControl) -> Result<()> {
    let total = (0..grid.n)
        .map(|k| substeps(eq, grid.node(k), grid.node(k + 1), control))
        .fold(0u64, u64::saturating_add);
    if total > control.step_budget {
        return Err(Error::StepBudget {
            required: total,
            budget: control.step_budget,
        });
    }
    Ok(())
}

pub(crate) fn propagate<E: TwoLevelEquation>(
    eq: &E,
    y0: State,
    grid: &BaseGrid,
    control: &StepControl,
) -> Result<Propagation> {
    plan(eq, grid, control)?;

    let stride = grid.stride.max(1);
    let mut samples = Vec::with_capacity(grid.n / stride + 2);
    samples.push(eq.sample(grid.x0, &y0));
    let mut y = y0;
    let mut norm_drift = (eq.norm(&y0) - 1.0).abs();
    let mut max_substeps = 1;

    for k in 0..grid.n {
        let a = grid.node(k);
        let b = grid.node(k + 1);
        let m = substeps(eq, a, b, control) as usize;
        max_substeps = max_substeps.max(m);
        let h = (b - a) / m as f64;
        for j in 0..m {
            y = rk4_step(eq, a + h * j as f64, &y, h);
        }
        let norm = eq.norm(&y);
        if !norm.is_finite() {
            return Err(Error::Divergence {
                s: eq.sample(b, &y).s,
            });
        }
        norm_drift = norm_drift.max((norm - 1.0).abs());
        if (k + 1) % stride == 0 || k + 1 == grid.n {
            samples.push(eq.sample(b, &y));
        }
    }

    Ok(Propagation {
        samples,
        norm_drift,
        max_substeps,
    })
}

//! Time evolution of the two diabatic amplitudes during a passage through
//! the crossing.
//!
//! With the nuclei moving at constant velocity, constant coupling and a
//! linear diabatic gap, the amplitude `c1` of the first diabatic state obeys
//! a one-parameter equation in the dimensionless time `s = |H12| (t - tc) / hbar`:
//!
//! ```text
//! c1'' = i lambda s c1' - c1,    c1(s0) = 1,  c1'(s0) = 0,
//! lambda = hbar dH v / |H12|^2
//! ```
//!
//! where `dH` is the slope difference `d(H11 - H22)/dR` at the crossing.
//! [`integrate_dimensionless`] solves this second-order form;
//! [`integrate_physical`] propagates the coupled first-order pair
//! `c1' = -i w c2`, `c2' = -i w* c1` in physical time. Both report
//! samples in `s`, so their traces can be compared point by point.
//!
//! Phase convention: `w(t) = (H12 / hbar) exp(i alpha (t - tc)^2 / (2 hbar))`
//! with `alpha = dH v`. The second-order integrator recovers
//! `c2 = i c1' exp(-i lambda s^2 / 2)`, which coincides with the physical
//! `c2` for real positive `H12`; for complex `H12` the two differ by the
//! constant phase `exp(-i arg H12)`.

mod propagator;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use propagator::{propagate, BaseGrid, State, TwoLevelEquation};

/// Default dimensionless base step.
pub const DEFAULT_STEP: f64 = 5e-4;
/// Default bound on the phase a single RK4 substep may sweep, in radians.
pub const DEFAULT_MAX_PHASE: f64 = 5e-3;
/// Default start of the dimensionless time window.
pub const DEFAULT_S0: f64 = -10.0;
pub const DEFAULT_S_END: f64 = 50.0;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-6;

/// Step selection shared by both integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Dimensionless base step; samples lie on this grid.
    pub step: f64,
    /// Keep every `stride`-th base step (the first and last points are always kept).
    pub stride: usize,
    /// Split each base step so no RK4 substep sweeps more than this phase.
    /// `None` gives plain fixed-step RK4.
    pub max_phase_per_step: Option<f64>,
    /// Halve the step until the largest per-sample change of `p1` drops
    /// below this tolerance.
    pub refine: Option<f64>,
    pub max_refinements: u32,
    /// Upper limit on the total number of RK4 steps of one run.
    pub step_budget: u64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            step: DEFAULT_STEP,
            stride: 1,
            max_phase_per_step: Some(DEFAULT_MAX_PHASE),
            refine: None,
            max_refinements: 8,
            step_budget: 400_000_000,
        }
    }
}

impl StepControl {
    /// Plain RK4 with the given step and no substepping.
    pub fn fixed(step: f64) -> Self {
        StepControl {
            step,
            max_phase_per_step: None,
            ..StepControl::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::domain(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if self.stride == 0 {
            return Err(Error::domain("stride must be >= 1"));
        }
        if let Some(phase) = self.max_phase_per_step {
            if !(phase.is_finite() && phase > 0.0) {
                return Err(Error::domain(format!(
                    "max phase per step must be > 0, got {phase}"
                )));
            }
        }
        if let Some(tol) = self.refine {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::domain(format!(
                    "refine tolerance must be > 0, got {tol}"
                )));
            }
        }
        Ok(())
    }

    fn base_steps(&self, span: f64) -> usize {
        if span <= 0.0 {
            0
        } else {
            // tolerate spans that are an integer multiple of the step up to rounding
            (span / self.step - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// One retained point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl Sample {
    pub fn p1(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn p2(&self) -> f64 {
        self.c2.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMeta {
    pub lambda: f64,
    pub s0: f64,
    pub s_end: f64,
    /// Effective dimensionless base step.
    pub step: f64,
    pub stride: usize,
    /// Largest number of RK4 substeps used inside one base step.
    pub max_substeps: usize,
    pub refinements: u32,
}

/// Sampled amplitudes of a passage, in dimensionless time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Largest `|p1 + p2 - 1|` seen at any base step.
    pub norm_drift: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn p1(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(Sample::p1)
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory always holds the initial sample")
    }
}

/// The one-parameter passage problem in dimensionless time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessLZProblem {
    pub lambda: f64,
    pub s0: f64,
    pub s_end: f64,
    pub control: StepControl,
    /// Accept `lambda < 0` (reversed slope ordering).
    pub allow_signed: bool,
}

impl DimensionlessLZProblem {
    /// Default window `[-10, 50]` and default step control.
    pub fn new(lambda: f64) -> Self {
        DimensionlessLZProblem {
            lambda,
            s0: DEFAULT_S0,
            s_end: DEFAULT_S_END,
            control: StepControl::default(),
            allow_signed: false,
        }
    }

    pub fn window(mut self, s0: f64, s_end: f64) -> Self {
        self.s0 = s0;
        self.s_end = s_end;
        self
    }

    pub fn control(mut self, control: StepControl) -> Self {
        self.control = control;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::domain(format!(
                "lambda must be finite, got {}",
                self.lambda
            )));
        }
        if self.lambda < 0.0 && !self.allow_signed {
            return Err(Error::domain("lambda must be >= 0"));
        }
        if !(self.s0.is_finite() && self.s_end.is_finite()) {
            return Err(Error::domain("time window must be finite"));
        }
        if self.s_end < self.s0 {
            return Err(Error::domain(format!(
                "s_end ({}) must not precede s0 ({})",
                self.s_end, self.s0
            )));
        }
        self.control.validate()
    }
}

/// Passage in physical units: constant coupling, constant nuclear velocity
/// and a diabatic gap that is linear in `R` around the crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalLZProblem {
    pub coupling: Complex64,
    /// `d(H11 - H22)/dR` at the crossing.
    pub slope_difference: f64,
    pub velocity: f64,
    pub hbar: f64,
    pub t0: f64,
    /// Time at which the nuclei pass the crossing.
    pub t_c: f64,
    pub t_end: f64,
    /// `step` is interpreted in dimensionless time.
    pub control: StepControl,
}

impl PhysicalLZProblem {
    /// `alpha = dH v`, the rate of change of the diabatic gap in time.
    pub fn alpha(&self) -> f64 {
        self.slope_difference * self.velocity
    }

    pub fn lambda(&self) -> f64 {
        self.hbar * self.alpha() / self.coupling.norm_sqr()
    }

    fn time_scale(&self) -> f64 {
        self.hbar / self.coupling.norm()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.slope_difference,
            self.velocity,
            self.hbar,
            self.t0,
            self.t_c,
            self.t_end,
        ]
        .iter()
        .all(|x| x.is_finite())
            && self.coupling.is_finite();
        if !finite {
            return Err(Error::domain("physical parameters must be finite"));
        }
        if self.coupling.norm() == 0.0 {
            return Err(Error::SingularReduction);
        }
        if self.velocity <= 0.0 {
            return Err(Error::domain(format!(
                "velocity must be > 0, got {}",
                self.velocity
            )));
        }
        if self.hbar <= 0.0 {
            return Err(Error::domain(format!(
                "hbar must be > 0, got {}",
                self.hbar
            )));
        }
        if self.t_end < self.t0 {
            return Err(Error::domain("t_end must not precede t0"));
        }
        self.control.validate()
    }
}

/// Maps a physical passage onto the dimensionless problem: `lambda` from
/// the parameters, and the time window through `s = |H12| (t - tc) / hbar`.
/// The resulting `lambda` keeps the sign of the slope difference.
pub fn reduce_to_dimensionless(p: &PhysicalLZProblem) -> Result<DimensionlessLZProblem> {
    p.validate()?;
    let scale = p.time_scale();
    Ok(DimensionlessLZProblem {
        lambda: p.lambda(),
        s0: (p.t0 - p.t_c) / scale,
        s_end: (p.t_end - p.t_c) / scale,
        control: p.control,
        allow_signed: true,
    })
}

/// A passage through the crossing of a diabatic model, with the nuclei
/// placed at the crossing at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingPassage {
    pub crossing: f64,
    pub problem: PhysicalLZProblem,
}

impl CrossingPassage {
    /// Linearizes `model` at the crossing found in `bracket` and builds the
    /// physical problem whose window maps to `[s0, s_end]`.
    pub fn from_model(
        model: &DiabaticModel,
        bracket: (f64, f64),
        velocity: f64,
        hbar: f64,
        (s0, s_end): (f64, f64),
        control: StepControl,
    ) -> Result<Self> {
        let crossing = model.find_crossing(bracket.0, bracket.1)?;
        let slope_difference = model.slope_difference(crossing)?;
        let coupling = model.evaluate(crossing)?.h12;
        if coupling.norm() == 0.0 {
            return Err(Error::SingularReduction);
        }
        let scale = hbar / coupling.norm();
        let problem = PhysicalLZProblem {
            coupling,
            slope_difference,
            velocity,
            hbar,
            t0: s0 * scale,
            t_c: 0.0,
            t_end: s_end * scale,
            control,
        };
        problem.validate()?;
        Ok(CrossingPassage { crossing, problem })
    }

    /// Internuclear distance along the straight-line trajectory.
    pub fn distance_at(&self, t: f64) -> f64 {
        self.crossing + self.problem.velocity * (t - self.problem.t_c)
    }

    pub fn initial_distance(&self) -> f64 {
        self.distance_at(self.problem.t0)
    }
}

/// `(c1, c1')` for `c1'' = i lambda s c1' - c1`.
struct SecondOrderForm {
    lambda: f64,
}

impl TwoLevelEquation for SecondOrderForm {
    #[inline]
    fn rhs(&self, s: f64, y: &State) -> State {
        [y[1], Complex64::new(0.0, self.lambda * s) * y[1] - y[0]]
    }

    fn max_rate(&self, a: f64, b: f64) -> f64 {
        self.lambda.abs() * a.abs().max(b.abs()) + 1.0
    }

    fn sample(&self, s: f64, y: &State) -> Sample {
        let phase = Complex64::from_polar(1.0, -0.5 * self.lambda * s * s);
        Sample {
            s,
            c1: y[0],
            c2: Complex64::i() * y[1] * phase,
        }
    }
}

/// `(c1, c2)` in physical time.
struct CoupledForm {
    coupling_rate: Complex64,
    gap_rate: f64,
    t_c: f64,
    time_scale: f64,
}

impl CoupledForm {
    #[inline]
    fn w(&self, t: f64) -> Complex64 {
        let tau = t - self.t_c;
        self.coupling_rate * Complex64::from_polar(1.0, 0.5 * self.gap_rate * tau * tau)
    }
}

impl TwoLevelEquation for CoupledForm {
    #[inline]
    fn rhs(&self, t: f64, y: &State) -> State {
        let w = self.w(t);
        let minus_i = Complex64::new(0.0, -1.0);
        [minus_i * w * y[1], minus_i * w.conj() * y[0]]
    }

    fn max_rate(&self, a: f64, b: f64) -> f64 {
        let tau = (a - self.t_c).abs().max((b - self.t_c).abs());
        self.gap_rate.abs() * tau + self.coupling_rate.norm()
    }

    fn sample(&self, t: f64, y: &State) -> Sample {
        Sample {
            s: (t - self.t_c) / self.time_scale,
            c1: y[0],
            c2: y[1],
        }
    }
}

fn initial_state() -> State {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}

/// Largest per-sample change of `p1` between two runs on nested grids.
fn max_p1_change(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    coarse
        .p1()
        .zip(fine.p1())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Runs `attempt(n_steps, stride)` and, when refinement is requested,
/// keeps doubling the step count (and stride, so samples stay aligned)
/// until successive runs agree.
fn with_refinement<F>(control: &StepControl, span: f64, attempt: F) -> Result<Trajectory>
where
    F: Fn(usize, usize) -> Result<Trajectory>,
{
    let n = control.base_steps(span);
    let mut current = attempt(n, control.stride)?;
    let Some(tolerance) = control.refine else {
        return Ok(current);
    };
    if n == 0 {
        return Ok(current);
    }
    let mut last_change = f64::INFINITY;
    for halving in 1..=control.max_refinements {
        let factor = 1usize << halving;
        let mut finer = attempt(n * factor, control.stride * factor)?;
        last_change = max_p1_change(&current, &finer);
        finer.meta.refinements = halving;
        if last_change < tolerance {
            return Ok(finer);
        }
        current = finer;
    }
    Err(Error::NotConverged {
        tolerance,
        halvings: control.max_refinements,
        last_change,
    })
}

/// Solves the dimensionless second-order equation from `c1(s0) = 1`, `c1'(s0) = 0`.
pub fn integrate_dimensionless(p: &DimensionlessLZProblem) -> Result<Trajectory> {
    p.validate()?;
    let eq = SecondOrderForm { lambda: p.lambda };
    with_refinement(&p.control, p.s_end - p.s0, |n, stride| {
        let grid = BaseGrid {
            x0: p.s0,
            x1: p.s_end,
            n,
            stride,
        };
        let out = propagate(&eq, initial_state(), &grid, &p.control)?;
        Ok(Trajectory {
            samples: out.samples,
            norm_drift: out.norm_drift,
            meta: TrajectoryMeta {
                lambda: p.lambda,
                s0: p.s0,
                s_end: p.s_end,
                step: grid.dx(),
                stride,
                max_substeps: out.max_substeps,
                refinements: 0,
            },
        })
    })
}

/// Propagates `(c1, c2)` in physical time from `c1(t0) = 1`, `c2(t0) = 0`.
///
/// The accumulated phase `alpha (t - tc)^2 / (2 hbar)` is evaluated in
/// closed form. Samples are reported in dimensionless time.
pub fn integrate_physical(p: &PhysicalLZProblem) -> Result<Trajectory> {
    p.validate()?;
    let scale = p.time_scale();
    let eq = CoupledForm {
        coupling_rate: p.coupling / p.hbar,
        gap_rate: p.alpha() / p.hbar,
        t_c: p.t_c,
        time_scale: scale,
    };
    let s0 = (p.t0 - p.t_c) / scale;
    let s_end = (p.t_end - p.t_c) / scale;
    with_refinement(&p.control, s_end - s0, |n, stride| {
        let grid = BaseGrid {
            x0: p.t0,
            x1: p.t_end,
            n,
            stride,
        };
        let out = propagate(&eq, initial_state(), &grid, &p.control)?;
        Ok(Trajectory {
            samples: out.samples,
            norm_drift: out.norm_drift,
            meta: TrajectoryMeta {
                lambda: p.lambda(),
                s0,
                s_end,
                step: grid.dx() / scale,
                stride,
                max_substeps: out.max_substeps,
                refinements: 0,
            },
        })
    })
}

/// Mean of `p1` over the trailing `window_fraction` of the samples.
///
/// Averaging over the tail smooths the post-crossing oscillations of `p1`
/// around its limiting value.
pub fn survival_probability(t: &Trajectory, window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    const MIN_SAMPLES: usize = 10;
    let count = ((t.len() as f64) * window_fraction).round() as usize;
    if count < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: count,
        });
    }
    let tail = &t.samples[t.len() - count..];
    Ok(tail.iter().map(Sample::p1).sum::<f64>() / count as f64)
}

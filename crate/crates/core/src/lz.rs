//! Closed-form Landau-Zener survival probability and comparisons against
//! integrated trajectories.

use std::f64::consts::TAU;

use crate::dynamics::{
    integrate_dimensionless, survival_probability, DimensionlessLZProblem, StepControl, Trajectory,
    DEFAULT_S0, DEFAULT_S_END, DEFAULT_WINDOW_FRACTION,
};
use crate::error::{Error, Result};

/// Asymptotic probability `exp(-2 pi / lambda)` of staying in the first
/// diabatic state after one passage.
///
/// `lambda = 0` returns 0, the continuous limit (complete transfer).
pub fn lz_survival(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok((-TAU / lambda).exp())
}

/// Integration settings for a numeric-vs-analytic comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    pub s0: f64,
    pub s_end: f64,
    pub window_fraction: f64,
    pub control: StepControl,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            s0: DEFAULT_S0,
            s_end: DEFAULT_S_END,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            control: StepControl::default(),
        }
    }
}

impl CompareSettings {
    pub fn problem(&self, lambda: f64) -> DimensionlessLZProblem {
        DimensionlessLZProblem::new(lambda)
            .window(self.s0, self.s_end)
            .control(self.control)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "window fraction must lie in (0, 1], got {}",
                self.window_fraction
            )));
        }
        self.problem(1.0).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LZComparison {
    pub lambda: f64,
    pub p1_numeric: f64,
    pub p1_analytic: f64,
    pub abs_error: f64,
    /// `abs_error / p1_analytic`; infinite when the analytic value underflows.
    pub rel_error: f64,
    pub s0: f64,
    pub s_end: f64,
    pub step: f64,
}

impl LZComparison {
    /// Pairs a tail average with the closed form.
    pub fn from_trajectory(t: &Trajectory, window_fraction: f64) -> Result<Self> {
        let lambda = t.meta.lambda;
        let p1_numeric = survival_probability(t, window_fraction)?;
        let p1_analytic = lz_survival(lambda.abs())?;
        let abs_error = (p1_numeric - p1_analytic).abs();
        Ok(LZComparison {
            lambda,
            p1_numeric,
            p1_analytic,
            abs_error,
            rel_error: abs_error / p1_analytic,
            s0: t.meta.s0,
            s_end: t.meta.s_end,
            step: t.meta.step,
        })
    }
}

/// Integrates one passage and compares its tail-averaged survival
/// probability with `exp(-2 pi / lambda)`.
pub fn lz_compare(lambda: f64, settings: &CompareSettings) -> Result<LZComparison> {
    Ok(lz_compare_with_trace(lambda, settings)?.0)
}

/// Like [`lz_compare`], also returning the trajectory.
pub fn lz_compare_with_trace(
    lambda: f64,
    settings: &CompareSettings,
) -> Result<(LZComparison, Trajectory)> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::domain("lambda must be > 0"));
    }
    settings.validate()?;
    let trajectory = integrate_dimensionless(&settings.problem(lambda))?;
    let comparison = LZComparison::from_trajectory(&trajectory, settings.window_fraction)?;
    Ok((comparison, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((lz_survival(TAU).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!((lz_survival(10.0).unwrap() - 0.5334880910911033).abs() < 1e-15);
        assert!((lz_survival(4.0).unwrap() - 0.20787957635076193).abs() < 1e-15);
        assert!(lz_survival(1e9).unwrap() >= 1.0 - 1e-8);
        assert_eq!(lz_survival(0.0).unwrap(), 0.0);
        assert!(lz_survival(-1.0).is_err());
        assert!(lz_survival(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_is_increasing() {
        let values: Vec<f64> = (1..200)
            .map(|k| lz_survival(0.1 * k as f64).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn compare_rejects_nonpositive_lambda() {
        let s = CompareSettings::default();
        assert!(matches!(lz_compare(0.0, &s), Err(Error::Domain(_))));
        assert!(matches!(lz_compare(-2.0, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn compare_lambda_ten() {
        let c = lz_compare(10.0, &CompareSettings::default()).unwrap();
        assert!(c.abs_error <= 0.02, "{c:?}");
        assert_eq!(c.abs_error, (c.p1_numeric - c.p1_analytic).abs());
        assert_eq!((c.s0, c.s_end), (-10.0, 50.0));
    }

    #[test]
    fn compare_lambda_four() {
        let c = lz_compare(4.0, &CompareSettings::default()).unwrap();
        assert!((c.p1_analytic - 0.2079).abs() < 1e-4);
        assert!(c.abs_error <= 0.02, "{c:?}");
    }

    #[test]
    fn compare_adiabatic_limit() {
        // Starting at s0 = -10 the initial diabatic state already overlaps the
        // upper adiabatic state by roughly (1 / (lambda s0))^2, which survives
        // the passage; an earlier start removes that leakage.
        let c = lz_compare(0.5, &CompareSettings::default()).unwrap();
        assert!(c.p1_analytic < 4e-6);
        assert!(c.p1_numeric <= 0.05, "{c:?}");
        let early = CompareSettings {
            s0: -100.0,
            ..CompareSettings::default()
        };
        let c = lz_compare(0.5, &early).unwrap();
        assert!(c.p1_numeric <= 0.01, "{c:?}");
    }

    #[test]
    fn longer_windows_do_not_degrade() {
        let errors: Vec<f64> = [20.0, 50.0, 100.0]
            .iter()
            .map(|&s_end| {
                let s = CompareSettings {
                    s_end,
                    ..CompareSettings::default()
                };
                lz_compare(10.0, &s).unwrap().abs_error
            })
            .collect();
        assert!(errors.iter().all(|&e| e <= 0.02), "{errors:?}");
        // flat within the oscillation band
        assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-3), "{errors:?}");
    }
}

//! Diabatic two-state models and their adiabatic (eigen) representation.
//!
//! A model is three functions of the internuclear distance `R`: the diagonal
//! diabatic energies `H11(R)`, `H22(R)` and the coupling `H12(R)`. `H21` is
//! always the complex conjugate of `H12`, so the electronic matrix is
//! Hermitian at every `R`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Closed interval of admissible distances. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub min: f64,
    pub max: f64,
    /// Whether `min` itself is excluded.
    pub open_min: bool,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        min: f64::NEG_INFINITY,
        max: f64::INFINITY,
        open_min: false,
    };

    pub const POSITIVE: Domain = Domain {
        min: 0.0,
        max: f64::INFINITY,
        open_min: true,
    };

    pub fn new(min: f64, max: f64) -> Self {
        Domain {
            min,
            max,
            open_min: false,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        let above = if self.open_min {
            r > self.min
        } else {
            r >= self.min
        };
        r.is_finite() && above && r <= self.max
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.open_min { '(' } else { '[' };
        write!(f, "{open}{}, {}]", self.min, self.max)
    }
}

type RealCurve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexCurve = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// User-supplied curves. Derivatives are taken by central differences.
#[derive(Clone)]
pub struct CustomModel {
    h11: RealCurve,
    h22: RealCurve,
    h12: ComplexCurve,
    domain: Domain,
}

impl CustomModel {
    pub fn new<F11, F22, F12>(h11: F11, h22: F22, h12: F12, domain: Domain) -> Self
    where
        F11: Fn(f64) -> f64 + Send + Sync + 'static,
        F22: Fn(f64) -> f64 + Send + Sync + 'static,
        F12: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        CustomModel {
            h11: Arc::new(h11),
            h22: Arc::new(h22),
            h12: Arc::new(h12),
            domain,
        }
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// A parametric two-state diabatic model.
#[derive(Debug, Clone)]
pub enum DiabaticModel {
    /// `H11 = e1_0 + slope1 R`, `H22 = e2_0 + slope2 R`, constant coupling.
    LinearCrossing {
        e1_0: f64,
        slope1: f64,
        e2_0: f64,
        slope2: f64,
        h12: Complex64,
    },
    /// Schematic ionic/covalent pair: a flat covalent curve
    /// `H11 = covalent_level` and a Coulombic ionic curve
    /// `H22 = covalent_level + ionic_asymptote - coulomb / R`.
    /// Only defined for `R > 0`.
    IonicCovalent {
        covalent_level: f64,
        ionic_asymptote: f64,
        coulomb: f64,
        h12: Complex64,
    },
    Custom(CustomModel),
}

/// Diabatic matrix elements at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiabaticElements {
    pub h11: f64,
    pub h22: f64,
    pub h12: Complex64,
}

impl DiabaticModel {
    /// The linear model with `H11 = 1 + R`, `H22 = 2 - R`, `H12 = 0.1`.
    pub fn toy() -> Self {
        DiabaticModel::LinearCrossing {
            e1_0: 1.0,
            slope1: 1.0,
            e2_0: 2.0,
            slope2: -1.0,
            h12: Complex64::new(0.1, 0.0),
        }
    }

    /// Schematic NaCl-like ionic/covalent pair in eV and Angstrom:
    /// ionization energy of Na minus electron affinity of Cl for the
    /// asymptote, `e^2 / (4 pi eps0)` for the Coulomb coefficient.
    pub fn ionic_covalent() -> Self {
        DiabaticModel::IonicCovalent {
            covalent_level: 0.0,
            ionic_asymptote: 1.53,
            coulomb: 14.40,
            h12: Complex64::new(0.05, 0.0),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            DiabaticModel::LinearCrossing { .. } => Domain::REAL_LINE,
            DiabaticModel::IonicCovalent { .. } => Domain::POSITIVE,
            DiabaticModel::Custom(c) => c.domain,
        }
    }

    /// Replaces the coupling of a parametric model. Custom models are returned unchanged.
    pub fn with_coupling(mut self, coupling: Complex64) -> Self {
        match &mut self {
            DiabaticModel::LinearCrossing { h12, .. }
            | DiabaticModel::IonicCovalent { h12, .. } => *h12 = coupling,
            DiabaticModel::Custom(_) => {}
        }
        self
    }

    /// Matrix elements at `r`.
    pub fn evaluate(&self, r: f64) -> Result<DiabaticElements> {
        let domain = self.domain();
        if !domain.contains(r) {
            return Err(Error::domain(format!(
                "R = {r} outside model domain {domain}"
            )));
        }
        let elements = match self {
            DiabaticModel::LinearCrossing {
                e1_0,
                slope1,
                e2_0,
                slope2,
                h12,
            } => DiabaticElements {
                h11: e1_0 + slope1 * r,
                h22: e2_0 + slope2 * r,
                h12: *h12,
            },
            DiabaticModel::IonicCovalent {
                covalent_level,
                ionic_asymptote,
                coulomb,
                h12,
            } => DiabaticElements {
                h11: *covalent_level,
                h22: covalent_level + ionic_asymptote - coulomb / r,
                h12: *h12,
            },
            DiabaticModel::Custom(c) => DiabaticElements {
                h11: (c.h11)(r),
                h22: (c.h22)(r),
                h12: (c.h12)(r),
            },
        };
        if !(elements.h11.is_finite() && elements.h22.is_finite() && elements.h12.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite matrix element at R = {r}"
            )));
        }
        Ok(elements)
    }

    fn gap_function(&self, r: f64) -> Result<f64> {
        let e = self.evaluate(r)?;
        Ok(e.h11 - e.h22)
    }

    /// Locates a zero of `H11 - H22` on `[lo, hi]` by bisection.
    ///
    /// With several roots in the bracket, whichever one bisection converges
    /// to is returned.
    pub fn find_crossing(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
        }
        let mut a = lo;
        let mut b = hi;
        let mut fa = self.gap_function(a)?;
        let fb = self.gap_function(b)?;
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() == fb.signum() {
            return Err(Error::Bracket { lo, hi });
        }

        let mut mid = 0.5 * (a + b);
        for _ in 0..MAX_BISECTIONS {
            mid = 0.5 * (a + b);
            let e = self.evaluate(mid)?;
            let fm = e.h11 - e.h22;
            let tol = 1e-12 * f64::max(1.0, e.h11.abs() + e.h22.abs());
            if fm.abs() <= tol || mid <= a || mid >= b {
                return Ok(mid);
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        Ok(mid)
    }

    /// `d(H11 - H22)/dR` at `r`.
    pub fn slope_difference(&self, r: f64) -> Result<f64> {
        let domain = self.domain();
        if !domain.contains(r) {
            return Err(Error::domain(format!(
                "R = {r} outside model domain {domain}"
            )));
        }
        match self {
            DiabaticModel::LinearCrossing { slope1, slope2, .. } => Ok(slope1 - slope2),
            DiabaticModel::IonicCovalent { coulomb, .. } => Ok(-coulomb / (r * r)),
            DiabaticModel::Custom(c) => {
                let mut h = 1e-6 * f64::max(1.0, r.abs());
                // keep both stencil points strictly inside the domain
                let room = f64::min(r - c.domain.min, c.domain.max - r);
                if room <= 0.0 {
                    return Err(Error::domain(format!(
                        "R = {r} is on the domain boundary; no central difference"
                    )));
                }
                if h >= room {
                    h = 0.5 * room;
                }
                let fp = self.gap_function(r + h)?;
                let fm = self.gap_function(r - h)?;
                Ok((fp - fm) / (2.0 * h))
            }
        }
    }

    /// Diabatic elements plus adiabatic solution at every grid point, in grid order.
    pub fn sample_curves(&self, grid: &[f64]) -> Result<Vec<CurvePoint>> {
        grid.iter()
            .map(|&r| {
                let elements = self.evaluate(r)?;
                Ok(CurvePoint {
                    r,
                    elements,
                    adiabatic: adiabatic_solve(elements.h11, elements.h22, elements.h12),
                })
            })
            .collect()
    }
}

const MAX_BISECTIONS: usize = 200;

/// Eigen-decomposition of the 2x2 Hermitian matrix `[[H11, H12], [H12*, H22]]`.
///
/// Column `j` of the coefficient matrix is `(c1j, c2j)`, the expansion of the
/// adiabatic state `psi_j` in the diabatic basis. Each column is normalized
/// and phased so that `c1j` is real and non-negative (when `c1j = 0`, `c2j`
/// is made real and positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticSolution {
    pub e1: f64,
    pub e2: f64,
    pub gap: f64,
    pub c11: Complex64,
    pub c21: Complex64,
    pub c12: Complex64,
    pub c22: Complex64,
}

impl AdiabaticSolution {
    /// Weight of the first diabatic state in the lower adiabatic state.
    pub fn c11_sq(&self) -> f64 {
        self.c11.norm_sqr()
    }

    /// Weight of the first diabatic state in the upper adiabatic state.
    pub fn c12_sq(&self) -> f64 {
        self.c12.norm_sqr()
    }

    pub fn lower_state(&self) -> [Complex64; 2] {
        [self.c11, self.c21]
    }

    pub fn upper_state(&self) -> [Complex64; 2] {
        [self.c12, self.c22]
    }
}

/// One row of a curve scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub r: f64,
    pub elements: DiabaticElements,
    pub adiabatic: AdiabaticSolution,
}

/// Closed-form eigenvalues and eigenvectors of a 2x2 Hermitian matrix.
///
/// `E1,2 = (H11 + H22)/2 -/+ gap/2` with `gap = sqrt((H11 - H22)^2 + 4|H12|^2)`.
/// Eigenvectors follow the ratio `c2j / c1j = (Ej - H11) / H12`, evaluated
/// from whichever row of `H - Ej` avoids cancellation. For `H12 = 0` the
/// states are the diabatic basis vectors, ordered so that `E1 <= E2`.
pub fn adiabatic_solve(h11: f64, h22: f64, h12: Complex64) -> AdiabaticSolution {
    let mean = 0.5 * (h11 + h22);
    let half_diff = 0.5 * (h11 - h22);
    let coupling = h12.norm();
    let half_gap = half_diff.hypot(coupling);
    let e1 = mean - half_gap;
    let e2 = mean + half_gap;

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if half_gap == 0.0 {
        return AdiabaticSolution {
            e1,
            e2,
            gap: 0.0,
            c11: one,
            c21: zero,
            c12: zero,
            c22: one,
        };
    }

    // (H - E1) v = 0: rows give (d + r) a + H12 b = 0 and H12* a + (r - d) b = 0.
    let lower = if half_diff >= 0.0 {
        [-h12, Complex64::new(half_diff + half_gap, 0.0)]
    } else {
        [Complex64::new(half_gap - half_diff, 0.0), -h12.conj()]
    };
    // (H - E2) v = 0: rows give (d - r) a + H12 b = 0 and H12* a - (r + d) b = 0.
    let upper = if half_diff <= 0.0 {
        [h12, Complex64::new(half_gap - half_diff, 0.0)]
    } else {
        [Complex64::new(half_gap + half_diff, 0.0), h12.conj()]
    };
    let [c11, c21] = normalize_phased(lower);
    let [c12, c22] = normalize_phased(upper);

    AdiabaticSolution {
        e1,
        e2,
        gap: 2.0 * half_gap,
        c11,
        c21,
        c12,
        c22,
    }
}

fn normalize_phased(v: [Complex64; 2]) -> [Complex64; 2] {
    let norm = v[0].norm().hypot(v[1].norm());
    let pivot = if v[0].norm() > 0.0 { v[0] } else { v[1] };
    // multiply by conj(pivot)/|pivot| to make the pivot real and positive
    let phase = pivot.conj() / (pivot.norm() * norm);
    let mut out = [v[0] * phase, v[1] * phase];
    if v[0].norm() > 0.0 {
        out[0] = Complex64::new(out[0].re, 0.0);
    } else {
        out[1] = Complex64::new(out[1].re, 0.0);
    }
    out
}

/// Uniform grid of `n` points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

//! Two-level avoided crossings and Landau-Zener passages.
//!
//! - [`model`]: diabatic curves, the closed-form 2x2 adiabatic solution,
//!   crossing location and slope difference.
//! - [`dynamics`]: RK4 propagation of the diabatic amplitudes through the
//!   crossing, in dimensionless or physical time.
//! - [`lz`]: the closed-form survival probability `exp(-2 pi / lambda)` and
//!   numeric comparisons against it.
//! - [`sweep`]: batch runs and figure datasets.
//! - [`output`]: bit-stable CSV/JSON writers.
//! - [`cli`]: the `crossing-lab` command line.
//!
//! ```
//! use crossing_lab::{lz::lz_survival, model::{adiabatic_solve, DiabaticModel}};
//!
//! let toy = DiabaticModel::toy();
//! let rc = toy.find_crossing(0.0, 1.0)?;
//! let e = toy.evaluate(rc)?;
//! let s = adiabatic_solve(e.h11, e.h22, e.h12);
//! assert!((s.gap - 0.2).abs() < 1e-12);
//! assert!((lz_survival(10.0)? - 0.53349).abs() < 1e-5);
//! # Ok::<(), crossing_lab::Error>(())
//! ```

pub mod cli;
pub mod dynamics;
mod error;
pub mod lz;
pub mod model;
pub mod output;
pub mod sweep;

pub use error::{Error, ErrorCategory, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/avoided-crossings.md")]
    mod avoided_crossings {}
    #[doc = include_str!("../../../book/src/time-evolution.md")]
    mod time_evolution {}
    #[doc = include_str!("../../../book/src/landau-zener.md")]
    mod landau_zener {}
    #[doc = include_str!("../../../book/src/sweeps-and-cli.md")]
    mod sweeps_and_cli {}
}

//! Radial focusing cubic Klein-Gordon toolkit.
//!
//! Evolves radial data for `u_tt - Δu + u = u^3` in three dimensions through the
//! reduced field `v = r u`, classifies evolutions as blowup or dispersive, and
//! sweeps parameterised data families to chart two-dimensional sections of the
//! forward scattering set together with the Payne-Sattinger regions.
//!
//! Module map:
//!
//! * [`groundstate`] - shooting for the ground state `Q`, the functionals `E`, `J`, `K`
//!   and Payne-Sattinger membership.
//! * [`scheme`] - the implicit energy-conserving scheme, the explicit scheme and the
//!   discrete energy.
//! * [`classify`] - ball norm monitoring and the blowup/dispersive/indecisive verdict.
//! * [`datafn`] - expression language for radial data profiles and builtin figure families.
//! * [`sweep`] - parallel (A, B[, C]) grid sweeps with checkpoint/resume.
//! * [`bisect`] - boundary refinement along a segment and ringing traces.
//! * [`render`] - section images (PPM) and record CSV files.

pub mod bisect;
pub mod classify;
pub mod config;
pub mod datafn;
mod error;
pub mod grid;
pub mod groundstate;
pub mod render;
pub mod scheme;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::RadialGrid;

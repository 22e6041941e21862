//! Simulation toolkit for autonomous (measurement-free) dissipative three-qubit
//! error correction with trapped ions.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`], [`operator`], [`state`]: composite ion/mode Hilbert spaces,
//!   sparse complex operators and dense states, excitation-number truncation.
//! - [`lindblad`]: Lindblad models, the Liouvillian and an adaptive
//!   Dormand–Prince integrator over the reachable part of the density matrix.
//! - [`model`]: Hamiltonians and jump operators for every code variant and
//!   dynamics level (explicit ancilla modes, engineered decay, effective and
//!   ideal correction jumps).
//! - [`backend`]: one model per dynamics level behind a common interface.
//! - [`effective`]: adiabatic elimination of the excited manifold and the
//!   closed-form effective rates.
//! - [`rates`]: the three-subspace rate-equation model.
//! - [`optimize`]: analytic and numeric optimum of the engineered cooling rate
//!   and drive strength.
//! - [`metrology`]: Ramsey sequences and sensitivity curves.
//! - `harness` (feature `cli`): scenario configuration, figure presets and
//!   CSV/JSON output used by the `aqec` binary.
//!
//! All rates and frequencies are expressed in units of a reference rate,
//! canonically the single-qubit bit-flip rate Γ = 1.

pub mod backend;
pub mod effective;
pub mod error;
#[cfg(feature = "cli")]
pub mod harness;
pub mod lindblad;
pub mod metrology;
pub mod model;
pub mod operator;
pub mod optimize;
pub mod rates;
pub mod space;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

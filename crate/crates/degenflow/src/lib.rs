//! Spectral numerics for degenerate periodic flows on the annulus.
//!
//! A periodic flow on the annulus `[0, 1] x S^1` whose speed vanishes at the
//! inner boundary has no spectral gap, and time averages of observables
//! converge to their spatial averages without a uniform rate on all of `L^2`.
//! On a subspace with fractional radial regularity and mode decay, a uniform
//! algebraic rate does hold, controlled by the density of the generator's
//! spectrum near zero. This crate provides the pieces needed to compute all
//! of that at desk scale and check the pieces against one another:
//!
//! - [`profile`]: flow speed profiles `c * m^alpha` and tabulated variants;
//! - [`grid`]: graded composite Gauss-Legendre grids on `[0, 1]`;
//! - [`fibered`]: mean-zero functions stored as per-fiber Fourier data;
//! - [`sobolev`]: the mixed-regularity norm with its singular double
//!   integral, plus Hölder-constant diagnostics;
//! - [`evolution`]: the unitary flow, exact time averaging through the sinc
//!   multiplier, and the averaging error norm;
//! - [`spectral`]: band structure, the spectral distribution function, and
//!   the density of states by explicit mode sums and by a finite-difference
//!   oracle;
//! - [`toy`]: the single-branch fibered model with regular-value analysis;
//! - [`ensemble`]: reproducible families of test functions with known
//!   regularity;
//! - [`experiments`]: rate measurements, envelope checks, and sweeps;
//! - [`cli`]: the command-line driver with CSV/JSON output.
//!
//! Everything is pure and deterministic for fixed inputs; seeded generators
//! are part of the reproducibility contract. See the runnable programs under
//! `examples/` for one walk-through per capability.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fibered;
pub mod grid;
pub mod numeric;
pub mod params;
pub mod profile;
pub mod record;
pub mod sobolev;
pub mod spectral;
pub mod toy;

pub use error::{Error, Result};
pub use fibered::{Descriptor, FiberedFunction, ModeShape};
pub use grid::MGrid;
pub use params::{ParamReport, SpectralParams};
pub use profile::FlowProfile;
pub use record::{ExperimentRecord, GridMeta, RecordKind, Value};

//! Numerical laboratory for fractional Sobolev energies on discretized open sets.
//!
//! The crate discretizes bounded open sets of the line and the plane as
//! occupancy masks on uniform dyadic grids, evaluates Gagliardo
//! (s,p)-seminorms and their zero extensions, solves the variational
//! capacity problem with certified witnesses, and runs capacitary
//! diagnostics (Maz'ya testing condition, Whitney quasiadditivity,
//! zero-extension ratios, local maximal operator probes).
//!
//! Modules follow the pipeline:
//!
//! * [`geometry`] — grid domains, exact distance fields, Whitney decompositions;
//! * [`energy`] — seminorms, weights, cutoffs and related quadrature;
//! * [`capacity`] — constrained minimization with certified gaps;
//! * [`analysis`] — diagnostic reports built on top of the other layers;
//! * [`probe`] — deterministic test-function families;
//! * [`reference`] — independent brute-force oracles used by the test suites.

pub mod analysis;
pub mod capacity;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod probe;
pub mod reference;
pub mod sum;

pub use geometry::{
    DistField, DomainError, DomainSpec, DyadicCube, DyadicStep, EnergyParams, GridDomain,
    ParamError, SlitSnowflakeSpec, WhitneyDecomposition,
};

/// Library version string, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

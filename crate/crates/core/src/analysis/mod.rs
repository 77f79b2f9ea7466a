//! Capacitary diagnostics: testing conditions, quasiadditivity,
//! zero-extension ratios, maximal-operator probes.

mod families;
mod levels;
mod maximal;
mod reports;

pub use families::{
    concentric_family, level_family, slit_whitney_cubes, whitney_union_family, CompactProbe,
};
pub use levels::{level_truncation, mazya_replay, LevelDecomposition, MazyaReplay};
pub use maximal::{
    local_maximal, maximal_cube_bound_violations, mean_split, MeanSplit,
};
pub use reports::{
    hardy_report, maximal_boundedness_probe, mazya_test, quasi_report, quasiadditivity,
    whitney_cap_lower_check, zero_extension_report, CapLowerItem, CapLowerReport, HardyReport,
    MaximalBoundednessReport, MazyaItem, MazyaReport, QuasiItem, QuasiMode, QuasiReport,
    ZeroExtItem, ZeroExtReport,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Capacity(#[from] crate::capacity::CapacityError),
    #[error("{0}")]
    Params(#[from] crate::geometry::ParamError),
    #[error("hardy bracket is empty: lower {lower} > upper {upper}")]
    EmptyBracket { lower: f64, upper: f64 },
    #[error("weak quasiadditivity needs a finite union of Whitney cubes; cell {0} has a partial cube")]
    NotCubeUnion(u32),
    #[error("no usable probes: {0}")]
    NoProbes(String),
}

/// Constant of the truncation chain: 2^{3p+2}/(1-2^{-p}).
pub fn truncation_chain_constant(p: f64) -> f64 {
    2f64.powf(3.0 * p + 2.0) / (1.0 - 2f64.powf(-p))
}

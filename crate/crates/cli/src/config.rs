//! Experiment configuration: JSON with dyadic-rational grid steps.

use anyhow::{bail, Context, Result};
use fraclab::geometry::{DomainSpec, DyadicStep, EnergyParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostic {
    Mazya,
    Quasi,
    Zeroext,
    Hardy,
    Maximal,
    Caplower,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Diagnostic::Mazya => "mazya",
            Diagnostic::Quasi => "quasi",
            Diagnostic::Zeroext => "zeroext",
            Diagnostic::Hardy => "hardy",
            Diagnostic::Maximal => "maximal",
            Diagnostic::Caplower => "caplower",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactFamilyConfig {
    /// Unions of non-flagged Whitney cubes up to each generation.
    WhitneyUnions { generations: Vec<u32> },
    /// Distance superlevel sets {dist ≥ f·max dist}.
    Concentric { fractions: Vec<f64> },
    /// Whitney cubes inside the slit reference square with the m-th
    /// diameter threshold (slit-snowflake domains only).
    SlitWhitney { ms: Vec<u32> },
}

impl Default for CompactFamilyConfig {
    fn default() -> Self {
        CompactFamilyConfig::Concentric { fractions: vec![0.5, 0.35, 0.25] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeFamilyConfig {
    SmoothNoise { count: usize, rounds: usize },
    Trig { count: usize, max_frequency: u32 },
    Ramps { deltas: Vec<f64> },
    LogRamps { deltas: Vec<f64> },
    /// One Whitney cutoff per generation, nearest the boundary.
    Cutoffs,
    /// The u_m family of the slit construction.
    SlitFamily { ms: Vec<u32> },
    /// Cutoffs of the K_m Whitney cubes nearest the slit.
    KmCutoffs { ms: Vec<u32>, per_m: usize },
}

impl Default for ProbeFamilyConfig {
    fn default() -> Self {
        ProbeFamilyConfig::SmoothNoise { count: 8, rounds: 2 }
    }
}

/// Soft trend expectations; failures flip the exit code to "trend
/// unverified" without failing the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum TrendCheck {
    /// Testing-condition ratios grow by at least `min_growth` per item.
    MazyaRatiosIncreasing { min_growth: f64 },
    QuasiRatiosIncreasing,
    QuasiMax { value: f64 },
    /// sup over probes of the zero-extension ratio stays within a band.
    ZeroextSupBand { factor: f64 },
    /// Probe energies stay within max/min ≤ factor.
    EnergiesBand { factor: f64 },
    EnergiesDecreasing,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
pub struct SolverOverrides {
    pub cg_rel_residual: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub pgd_max_iter: Option<usize>,
    pub fft_threshold: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub s: f64,
    pub p: f64,
    pub n: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub params: ParamsConfig,
    /// Strictly decreasing ladder of grid steps, e.g. ["1/32", "1/64"].
    pub resolutions: Vec<DyadicStep>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default)]
    pub compact_family: CompactFamilyConfig,
    #[serde(default)]
    pub probe_family: ProbeFamilyConfig,
    #[serde(default)]
    pub solver: SolverOverrides,
    /// Declared relative tolerance of the exterior weight bracket.
    #[serde(default = "default_weight_tolerance")]
    pub weight_tolerance: f64,
    #[serde(default)]
    pub trends: Vec<TrendCheck>,
    /// Default output directory; the --out flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

fn default_weight_tolerance() -> f64 {
    0.01
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<EnergyParams> {
        EnergyParams::new(self.params.s, self.params.p, self.params.n)
            .context("invalid energy parameters")
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.resolutions.is_empty() {
            bail!("resolution ladder is empty");
        }
        for w in self.resolutions.windows(2) {
            if w[1].value() >= w[0].value() {
                bail!("resolution ladder must be strictly decreasing: {} then {}", w[0], w[1]);
            }
        }
        let min = self.domain.min_admissible_step().map_err(|e| anyhow::anyhow!("{e}"))?;
        for h in &self.resolutions {
            if h.exp() < min.exp() {
                bail!(
                    "step {h} too coarse for {}; minimal admissible step is {min}",
                    self.domain.kind_name()
                );
            }
        }
        if self.diagnostics.is_empty() {
            bail!("diagnostic list is empty");
        }
        if matches!(self.compact_family, CompactFamilyConfig::SlitWhitney { .. })
            && !matches!(self.domain, DomainSpec::KochMinusSlit(_))
        {
            bail!("slit_whitney compacta need a koch_minus_slit domain");
        }
        if matches!(self.probe_family, ProbeFamilyConfig::SlitFamily { .. } | ProbeFamilyConfig::KmCutoffs { .. })
            && !matches!(self.domain, DomainSpec::KochMinusSlit(_))
        {
            bail!("slit probe families need a koch_minus_slit domain");
        }
        Ok(())
    }

    /// Hash of the canonical serialized configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        fraclab::io::sha256_hex(canonical.as_bytes())
    }
}

pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text).context("cannot parse config")?;
    config.validate()?;
    Ok(config)
}

/// Configs shipped with the binary.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "cube_sp_lt_1" => Some(include_str!("../../../configs/cube_sp_lt_1.json")),
        "koch_slit_sp_eq_1" => Some(include_str!("../../../configs/koch_slit_sp_eq_1.json")),
        "interval_hardy_critical" => {
            Some(include_str!("../../../configs/interval_hardy_critical.json"))
        }
        _ => None,
    }
}

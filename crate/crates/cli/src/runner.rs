//! Executes a configuration: builds geometry, runs diagnostics, writes
//! reports, evaluates trend expectations.

use crate::config::{
    CompactFamilyConfig, Diagnostic, ExperimentConfig, ProbeFamilyConfig, TrendCheck,
};
use anyhow::{anyhow, bail, Context, Result};
use fraclab::analysis::{
    concentric_family, hardy_report, maximal_boundedness_probe, mazya_test, quasi_report,
    quasiadditivity, slit_whitney_cubes, whitney_cap_lower_check, whitney_union_family,
    CompactProbe, QuasiMode,
};
use fraclab::capacity::{slit_test_family, CapacitySolver, CompactCellSet, SolverConfig};
use fraclab::energy::{EnergyForm, GridFunction, WeightField};
use fraclab::geometry::{
    DistField, DomainSpec, DyadicStep, GridDomain, WhitneyDecomposition,
};
use fraclab::io;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Exit classification: hard invariant failures dominate unverified trends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    TrendUnverified,
    InvariantViolated,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::TrendUnverified => 2,
            Outcome::InvariantViolated => 1,
        }
    }
}

#[derive(Debug, Serialize)]
struct Envelope<T: Serialize> {
    config_hash: String,
    code_version: &'static str,
    diagnostic: String,
    h: String,
    domain_hash: String,
    s: f64,
    p: f64,
    n: u8,
    payload: T,
}

#[derive(Debug, Serialize)]
struct RunOutcome {
    config_hash: String,
    code_version: &'static str,
    invariant_violations: Vec<String>,
    trend_flags: Vec<String>,
    reports: Vec<String>,
}

pub struct Level {
    pub h: DyadicStep,
    pub domain: Arc<GridDomain>,
    pub dist: DistField,
    pub whitney: WhitneyDecomposition,
    pub form: EnergyForm,
}

pub fn build_level(config: &ExperimentConfig, h: DyadicStep) -> Result<Level> {
    let domain = GridDomain::build(&config.domain, h).map_err(|e| anyhow!("{e}"))?;
    let dist = domain.distance_field();
    let whitney = WhitneyDecomposition::build(&domain).map_err(|e| anyhow!("{e}"))?;
    let form = EnergyForm::new(domain.clone(), config.params()?);
    Ok(Level { h, domain, dist, whitney, form })
}

fn solver_config(config: &ExperimentConfig) -> SolverConfig {
    let mut cfg = SolverConfig { fft_threshold: 2048, ..Default::default() };
    if let Some(v) = config.solver.cg_rel_residual {
        cfg.cg_rel_residual = v;
    }
    if let Some(v) = config.solver.cg_max_iter {
        cfg.cg_max_iter = v;
    }
    if let Some(v) = config.solver.pgd_max_iter {
        cfg.pgd_max_iter = v;
    }
    if let Some(v) = config.solver.fft_threshold {
        cfg.fft_threshold = v;
    }
    cfg
}

fn compact_family(config: &ExperimentConfig, level: &Level) -> Result<Vec<CompactProbe>> {
    let family = match &config.compact_family {
        CompactFamilyConfig::WhitneyUnions { generations } => {
            whitney_union_family(&level.whitney, &level.dist, generations)?
        }
        CompactFamilyConfig::Concentric { fractions } => {
            concentric_family(&level.domain, &level.dist, fractions)?
        }
        CompactFamilyConfig::SlitWhitney { ms } => {
            let DomainSpec::KochMinusSlit(spec) = &config.domain else {
                bail!("slit_whitney compacta need a koch_minus_slit domain");
            };
            let mut out = Vec::new();
            for &m in ms {
                let cubes = slit_whitney_cubes(&level.whitney, spec, m);
                if cubes.is_empty() {
                    continue;
                }
                let cells: Vec<u32> = cubes
                    .iter()
                    .flat_map(|&i| level.whitney.cube_cells(&level.whitney.cubes[i].cube))
                    .collect();
                let set = CompactCellSet::new(level.domain.clone(), cells, &level.dist)?;
                out.push(CompactProbe { label: format!("K_{m}"), set, candidate: None });
            }
            out
        }
    };
    if family.is_empty() {
        bail!("compact family is empty at h = {}", level.h);
    }
    Ok(family)
}

fn probe_family(
    config: &ExperimentConfig,
    level: &Level,
    seed: u64,
) -> Result<Vec<(String, GridFunction)>> {
    let probes = match &config.probe_family {
        ProbeFamilyConfig::SmoothNoise { count, rounds } => {
            fraclab::probe::smooth_noise(&level.domain, seed, *count, *rounds)
        }
        ProbeFamilyConfig::Trig { count, max_frequency } => {
            fraclab::probe::trig_polynomials(&level.domain, seed, *count, *max_frequency)
        }
        ProbeFamilyConfig::Ramps { deltas } => {
            fraclab::probe::boundary_ramps(&level.domain, &level.dist, deltas)
        }
        ProbeFamilyConfig::LogRamps { deltas } => {
            fraclab::probe::log_ramps(&level.domain, &level.dist, deltas)
        }
        ProbeFamilyConfig::Cutoffs => fraclab::probe::cutoffs_by_generation(&level.whitney),
        ProbeFamilyConfig::SlitFamily { ms } => {
            let DomainSpec::KochMinusSlit(spec) = &config.domain else {
                bail!("slit_family probes need a koch_minus_slit domain");
            };
            let mut out = Vec::new();
            for &m in ms {
                let f = slit_test_family(&level.domain, spec, m)?;
                out.push((format!("u_{m}"), f.func));
            }
            out
        }
        ProbeFamilyConfig::KmCutoffs { ms, per_m } => {
            let DomainSpec::KochMinusSlit(spec) = &config.domain else {
                bail!("km_cutoffs probes need a koch_minus_slit domain");
            };
            let mut out = Vec::new();
            for &m in ms {
                let mut cubes = slit_whitney_cubes(&level.whitney, spec, m);
                cubes.sort_by(|&a, &b| {
                    level.whitney.cubes[a].dist.partial_cmp(&level.whitney.cubes[b].dist).unwrap()
                });
                cubes.truncate(*per_m);
                out.extend(fraclab::probe::cutoffs_of(&level.whitney, &cubes, &format!("K{m}")));
            }
            out
        }
    };
    if probes.is_empty() {
        bail!("probe family is empty at h = {}", level.h);
    }
    Ok(probes)
}

pub struct Runner<'a> {
    pub config: &'a ExperimentConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    config_hash: String,
    invariant_violations: Vec<String>,
    trend_flags: Vec<String>,
    reports: Vec<String>,
    csv_rows: Vec<Vec<String>>,
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig, out_dir: &Path, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create {}", out_dir.display()))?;
        Ok(Self {
            config,
            out_dir: out_dir.to_path_buf(),
            seed,
            config_hash: config.hash(),
            invariant_violations: Vec::new(),
            trend_flags: Vec::new(),
            reports: Vec::new(),
            csv_rows: Vec::new(),
        })
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.out_dir.join(name);
        let text = serde_json::to_string_pretty(value).context("serialize report")?;
        std::fs::write(&path, text).with_context(|| format!("write {}", path.display()))?;
        self.reports.push(name.to_string());
        Ok(())
    }

    fn envelope<T: Serialize>(&self, diagnostic: &str, level: &Level, payload: T) -> Envelope<T> {
        Envelope {
            config_hash: self.config_hash.clone(),
            code_version: fraclab::VERSION,
            diagnostic: diagnostic.to_string(),
            h: level.h.to_string(),
            domain_hash: level.domain.hash().to_string(),
            s: self.config.params.s,
            p: self.config.params.p,
            n: self.config.params.n,
            payload,
        }
    }

    fn csv(&mut self, diagnostic: &str, h: DyadicStep, item: &str, quantity: &str, value: f64) {
        self.csv_rows.push(vec![
            diagnostic.to_string(),
            h.to_string(),
            item.to_string(),
            quantity.to_string(),
            format!("{value}"),
        ]);
    }

    /// Execute every diagnostic at every resolution.
    pub fn run(&mut self) -> Result<Outcome> {
        for &h in &self.config.resolutions {
            let level = build_level(self.config, h)?;
            self.emit_geometry(&level)?;
            let validation = level.whitney.validate();
            if validation.eq_violations > 0 || !validation.partition_exact {
                self.invariant_violations.push(format!(
                    "h={h}: whitney validation failed ({} violations, partition {})",
                    validation.eq_violations, validation.partition_exact
                ));
            }
            let cfg = solver_config(self.config);
            let solver = CapacitySolver::with_config(&level.form, &level.whitney, cfg);
            let probes = probe_family(self.config, &level, self.seed)?;

            // Per-resolution trend data.
            let mut mazya_ratios: Vec<f64> = Vec::new();
            let mut quasi_ratios: Vec<f64> = Vec::new();
            let mut zeroext_ratios: Vec<f64> = Vec::new();
            let mut energies: Vec<f64> = Vec::new();

            for (label, u) in &probes {
                let e = level.form.seminorm_p(u);
                energies.push(e);
                self.csv("energy", h, label, "seminorm_p", e);
            }

            for diag in &self.config.diagnostics {
                match diag {
                    Diagnostic::Mazya => {
                        let family = compact_family(self.config, &level)?;
                        let weight = WeightField::hardy(&level.dist, level.form.params());
                        let report = mazya_test(&solver, &weight, &level.dist, &family);
                        mazya_ratios =
                            report.items.iter().filter_map(|i| i.ratio).collect();
                        for item in &report.items {
                            self.csv("mazya", h, &item.label, "left_mass", item.left_mass.hi);
                            self.csv("mazya", h, &item.label, "capacity", item.capacity);
                            if let Some(r) = item.ratio {
                                self.csv("mazya", h, &item.label, "ratio", r);
                            }
                        }
                        self.write_json(
                            &format!("report_mazya_{}.json", file_tag(h)),
                            &self.envelope("mazya", &level, &report),
                        )?;
                    }
                    Diagnostic::Quasi => {
                        let family = compact_family(self.config, &level)?;
                        let mode = match self.config.compact_family {
                            CompactFamilyConfig::Concentric { .. } => QuasiMode::General,
                            _ => QuasiMode::Weak,
                        };
                        let mut items = Vec::new();
                        for probe in &family {
                            let item = quasiadditivity(
                                &solver,
                                &level.whitney,
                                &level.dist,
                                &probe.label,
                                &probe.set,
                                mode,
                            )?;
                            if let Some(r) = item.ratio {
                                // Subadditivity lower bound is an invariant.
                                if r < 1.0 - 4.0 * item.gap_total / item.capacity {
                                    self.invariant_violations.push(format!(
                                        "h={h}: quasiadditivity ratio {r} below subadditive floor"
                                    ));
                                }
                                quasi_ratios.push(r);
                                self.csv("quasi", h, &item.label, "ratio", r);
                            }
                            self.csv("quasi", h, &item.label, "sum_parts", item.sum_parts);
                            self.csv("quasi", h, &item.label, "capacity", item.capacity);
                            items.push(item);
                        }
                        let report = quasi_report(items, mode);
                        self.write_json(
                            &format!("report_quasi_{}.json", file_tag(h)),
                            &self.envelope("quasi", &level, &report),
                        )?;
                    }
                    Diagnostic::Zeroext => {
                        let exterior = WeightField::exterior(
                            &level.domain,
                            level.form.params(),
                            self.config.weight_tolerance,
                        );
                        let family = compact_family(self.config, &level)?;
                        let report = fraclab::analysis::zero_extension_report(
                            &solver,
                            &exterior,
                            &level.dist,
                            &probes,
                            &family,
                        )?;
                        for item in &report.items {
                            if item.ratio.lo < 1.0 {
                                self.invariant_violations.push(format!(
                                    "h={h}: zero-extension ratio below 1 for {}",
                                    item.label
                                ));
                            }
                            zeroext_ratios.push(item.ratio.hi);
                            self.csv("zeroext", h, &item.label, "ratio_hi", item.ratio.hi);
                        }
                        self.write_json(
                            &format!("report_zeroext_{}.json", file_tag(h)),
                            &self.envelope("zeroext", &level, &report),
                        )?;
                    }
                    Diagnostic::Hardy => {
                        let weight = WeightField::hardy(&level.dist, level.form.params());
                        let report =
                            hardy_report(&solver, &weight, &level.dist, &probes, Vec::new())?;
                        self.csv("hardy", h, "bracket", "lower", report.lower_bound);
                        if let Some(ub) = report.upper_bound {
                            self.csv("hardy", h, "bracket", "upper", ub);
                        }
                        self.write_json(
                            &format!("report_hardy_{}.json", file_tag(h)),
                            &self.envelope("hardy", &level, &report),
                        )?;
                    }
                    Diagnostic::Maximal => {
                        let report =
                            maximal_boundedness_probe(&level.form, &level.dist, &probes)?;
                        for (label, r) in &report.ratios {
                            self.csv("maximal", h, label, "ratio", *r);
                        }
                        self.write_json(
                            &format!("report_maximal_{}.json", file_tag(h)),
                            &self.envelope("maximal", &level, &report),
                        )?;
                    }
                    Diagnostic::Caplower => {
                        let report =
                            whitney_cap_lower_check(&solver, &level.whitney, &level.dist, 6)?;
                        for item in &report.items {
                            self.csv(
                                "caplower",
                                h,
                                &format!("gen{}", item.gen),
                                "ratio",
                                item.ratio,
                            );
                        }
                        self.write_json(
                            &format!("report_caplower_{}.json", file_tag(h)),
                            &self.envelope("caplower", &level, &report),
                        )?;
                    }
                }
            }

            self.check_trends(h, &mazya_ratios, &quasi_ratios, &zeroext_ratios, &energies);
        }

        let header = ["diagnostic", "h", "item", "quantity", "value"];
        let csv = io::to_csv(&header, &self.csv_rows);
        std::fs::write(self.out_dir.join("summary.csv"), csv)?;

        let outcome = if !self.invariant_violations.is_empty() {
            Outcome::InvariantViolated
        } else if !self.trend_flags.is_empty() {
            Outcome::TrendUnverified
        } else {
            Outcome::Ok
        };
        let summary = RunOutcome {
            config_hash: self.config_hash.clone(),
            code_version: fraclab::VERSION,
            invariant_violations: self.invariant_violations.clone(),
            trend_flags: self.trend_flags.clone(),
            reports: self.reports.clone(),
        };
        self.write_json("outcome.json", &summary)?;
        Ok(outcome)
    }

    pub fn emit_geometry(&mut self, level: &Level) -> Result<()> {
        let tag = file_tag(level.h);
        self.write_json(&format!("domain_{tag}.json"), &io::domain_to_file(&level.domain))?;
        self.write_json(
            &format!("whitney_{tag}.json"),
            &io::whitney_to_records(&level.whitney),
        )?;
        Ok(())
    }

    pub fn write_domain_only(&mut self, level: &Level) -> Result<()> {
        let tag = file_tag(level.h);
        self.write_json(&format!("domain_{tag}.json"), &io::domain_to_file(&level.domain))
    }

    pub fn write_named<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_json(name, value)
    }

    /// Probe energies: interior seminorm plus the zero-extension bracket.
    pub fn energy_records(&self, level: &Level) -> Result<Vec<serde_json::Value>> {
        let probes = probe_family(self.config, level, self.seed)?;
        let exterior = WeightField::exterior(
            &level.domain,
            level.form.params(),
            self.config.weight_tolerance,
        );
        let (s, p) = (self.config.params.s, self.config.params.p);
        let mut out = Vec::new();
        for (label, u) in &probes {
            let sem = level.form.seminorm_p(u);
            let ext = level.form.zero_extended_p(u, &exterior);
            out.push(serde_json::json!({
                "label": label,
                "seminorm": io::EnergyRecord::exact(sem, p, s),
                "zero_extended": io::EnergyRecord::bracketed(ext, p, s),
            }));
        }
        Ok(out)
    }

    /// Capacity of every compact set in the configured family, with witness
    /// files written next to the records.
    pub fn capacity_records(&mut self, level: &Level) -> Result<Vec<serde_json::Value>> {
        let family = compact_family(self.config, level)?;
        let cfg = solver_config(self.config);
        let solver = CapacitySolver::with_config(&level.form, &level.whitney, cfg);
        let tag = file_tag(level.h);
        let mut out = Vec::new();
        for probe in &family {
            let result = solver.solve(&probe.set).map_err(|e| anyhow!("{e}"))?;
            let witness_name = format!("witness_{}_{tag}.json", probe.label);
            self.write_json(&witness_name, &io::function_to_file(&result.witness))?;
            let record = io::CapacityRecord::from_result(&result, Some(witness_name));
            out.push(serde_json::json!({ "label": probe.label, "result": record }));
        }
        Ok(out)
    }

    // `!(x < band)` deliberately treats NaN as a failed check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check_trends(
        &mut self,
        h: DyadicStep,
        mazya_ratios: &[f64],
        quasi_ratios: &[f64],
        zeroext_ratios: &[f64],
        energies: &[f64],
    ) {
        let ran = |d: Diagnostic| self.config.diagnostics.contains(&d);
        let mut flags = Vec::new();
        let mut flag = |msg: String| flags.push(format!("h={h}: {msg}"));
        for trend in &self.config.trends {
            // Checks tied to a diagnostic that was not selected are skipped
            // (single-diagnostic report runs keep the full trend list).
            match trend {
                TrendCheck::MazyaRatiosIncreasing { min_growth } => {
                    if !ran(Diagnostic::Mazya) {
                        continue;
                    }
                    if mazya_ratios.len() < 2
                        || mazya_ratios.windows(2).any(|w| w[1] < min_growth * w[0])
                    {
                        flag(format!("testing ratios not growing ≥{min_growth}×: {mazya_ratios:?}"));
                    }
                }
                TrendCheck::QuasiRatiosIncreasing => {
                    if !ran(Diagnostic::Quasi) {
                        continue;
                    }
                    if quasi_ratios.len() < 2 || quasi_ratios.windows(2).any(|w| w[1] <= w[0]) {
                        flag(format!("quasiadditivity ratios not increasing: {quasi_ratios:?}"));
                    }
                }
                TrendCheck::QuasiMax { value } => {
                    if !ran(Diagnostic::Quasi) {
                        continue;
                    }
                    if quasi_ratios.iter().any(|r| r > value) {
                        flag(format!("quasiadditivity ratio above {value}: {quasi_ratios:?}"));
                    }
                }
                TrendCheck::ZeroextSupBand { factor } => {
                    if !ran(Diagnostic::Zeroext) {
                        continue;
                    }
                    let max = zeroext_ratios.iter().copied().fold(f64::MIN, f64::max);
                    let min = zeroext_ratios.iter().copied().fold(f64::MAX, f64::min);
                    if zeroext_ratios.is_empty() || !(max / min < *factor) {
                        flag(format!(
                            "zero-extension ratios vary by ≥{factor}×: {zeroext_ratios:?}"
                        ));
                    }
                }
                TrendCheck::EnergiesBand { factor } => {
                    let max = energies.iter().copied().fold(f64::MIN, f64::max);
                    let min = energies.iter().copied().fold(f64::MAX, f64::min);
                    if energies.is_empty() || !(max / min < *factor) {
                        flag(format!("probe energies vary by ≥{factor}×: {energies:?}"));
                    }
                }
                TrendCheck::EnergiesDecreasing => {
                    if energies.len() < 2 || energies.windows(2).any(|w| w[1] >= w[0]) {
                        flag(format!("probe energies not strictly decreasing: {energies:?}"));
                    }
                }
            }
        }
        self.trend_flags.extend(flags);
    }
}

pub fn file_tag(h: DyadicStep) -> String {
    h.to_string().replace('/', "_")
}

//! Diagnostic report builders.

use super::families::CompactProbe;
use super::{maximal, AnalysisError};
use crate::capacity::{CapacitySolver, CompactCellSet};
use crate::energy::{Bracket, EnergyForm, GridFunction, WeightField, WeightKind};
use crate::geometry::{CubeFlag, DistField, WhitneyDecomposition};
use crate::sum::compensated_sum;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

// ---------------------------------------------------------------------------
// Testing condition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MazyaItem {
    pub label: String,
    pub left_mass: Bracket,
    pub capacity: f64,
    pub gap: f64,
    /// Capacity actually used in the ratio: solver value capped by the
    /// candidate's energy when one is supplied.
    pub capacity_used: f64,
    /// mass / capacity_used; `None` encodes an unbounded ratio.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MazyaReport {
    pub weight: WeightKind,
    pub items: Vec<MazyaItem>,
    /// Aggregate c = max ratio; `None` when some ratio is unbounded.
    pub c_emp: Option<f64>,
    /// Implied embedding constant c·2^{3p+2}/(1-2^{-p}).
    pub implied_constant: Option<f64>,
}

/// Evaluate the testing condition `∫_K ω ≤ c · cap(K,G)` over a family of
/// compact sets. Ratios with capacity below the certified gap are reported
/// as unbounded rather than failing. Compact sets reaching into pinned
/// boundary cells are trimmed for the solve; their mass keeps the full set.
pub fn mazya_test(
    solver: &CapacitySolver,
    weight: &WeightField,
    dist: &DistField,
    family: &[CompactProbe],
) -> MazyaReport {
    let form = solver.form();
    let items: Vec<MazyaItem> = family
        .par_iter()
        .map(|probe| {
            let chi = GridFunction::indicator(form.domain().clone(), probe.set.cells());
            let left_mass = form.weighted_mass(&chi, weight);
            let (capacity, gap) = match solver.trim(&probe.set, dist) {
                Some(trimmed) => match solver.solve(&trimmed) {
                    Ok(r) => (r.value, r.gap),
                    Err(_) => (f64::NAN, f64::INFINITY),
                },
                None => (f64::NAN, f64::INFINITY),
            };
            let candidate_energy = probe.candidate.as_ref().map(|u| form.seminorm_p(u));
            let (capacity_used, ratio) = match candidate_energy {
                // An explicit admissible candidate certifies the ratio on its
                // own: mass / min(candidate energy, solver value).
                Some(e) => {
                    let used = if capacity.is_finite() { e.min(capacity) } else { e };
                    (used, (used > 0.0).then(|| left_mass.hi / used))
                }
                None => (
                    capacity,
                    (capacity.is_finite() && capacity > gap)
                        .then(|| left_mass.hi / capacity),
                ),
            };
            MazyaItem { label: probe.label.clone(), left_mass, capacity, gap, capacity_used, ratio }
        })
        .collect();
    let unbounded = items.iter().any(|i| i.ratio.is_none());
    let c_emp = if unbounded {
        None
    } else {
        items.iter().filter_map(|i| i.ratio).fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        })
    };
    let implied_constant =
        c_emp.map(|c| c * super::truncation_chain_constant(form.params().p));
    MazyaReport { weight: weight.kind, items, c_emp, implied_constant }
}

// ---------------------------------------------------------------------------
// Hardy bracket
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct HardyReport {
    /// Best Rayleigh quotient over the probes (and the probe span for p = 2).
    pub lower_bound: f64,
    pub lower_witness: String,
    pub mazya: MazyaReport,
    /// Implied upper bound from the testing condition.
    pub upper_bound: Option<f64>,
    pub per_probe: Vec<(String, f64)>,
}

/// Bracket the best Hardy constant: probe quotients from below, the testing
/// condition with the probes' own level compacta from above.
///
/// Probes are restricted to the solver's admissible class (zero on the
/// boundary-truncated cells), the discrete stand-in for compactly supported
/// test functions; without it a strictly positive probe has the constant 1 as
/// its lowest truncation and the testing family degenerates.
///
/// For p = 2 the lower bound also maximizes the quotient over the span of the
/// probes by power iteration on the projected matrix pencil; the maximizer's
/// level compacta are fed back into the testing family, which keeps the
/// bracket ordered. An empty bracket is a hard invariant failure.
pub fn hardy_report(
    solver: &CapacitySolver,
    weight: &WeightField,
    dist: &DistField,
    probes: &[(String, GridFunction)],
    extra_compacta: Vec<CompactProbe>,
) -> Result<HardyReport, AnalysisError> {
    let form = solver.form();
    let probes: Vec<(String, GridFunction)> = probes
        .iter()
        .map(|(l, u)| (l.clone(), solver.restrict_to_class(u)))
        .collect();
    let mut per_probe = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut lower_witness = String::new();
    let mut family = extra_compacta;
    for (label, u) in &probes {
        let sem = form.seminorm_p(u);
        family.extend(super::families::level_family(label, u, dist)?);
        if sem <= 0.0 {
            continue;
        }
        let quotient = form.weighted_mass(u, weight).hi / sem;
        per_probe.push((label.clone(), quotient));
        if quotient > lower {
            lower = quotient;
            lower_witness = label.clone();
        }
    }
    if per_probe.is_empty() {
        return Err(AnalysisError::NoProbes("all probes have zero seminorm".into()));
    }

    if form.params().p == 2.0 {
        if let Some(star) = rayleigh_span_maximizer(solver, weight, &probes) {
            let sem = form.seminorm_p(&star);
            if sem > 0.0 {
                let quotient = form.weighted_mass(&star, weight).hi / sem;
                per_probe.push(("rayleigh_span".into(), quotient));
                family.extend(super::families::level_family("rayleigh_span", &star, dist)?);
                if quotient > lower {
                    lower = quotient;
                    lower_witness = "rayleigh_span".into();
                }
            }
        }
    }

    let mazya = mazya_test(solver, weight, dist, &family);
    let upper_bound = mazya.implied_constant;
    if let Some(ub) = upper_bound {
        if lower > ub {
            return Err(AnalysisError::EmptyBracket { lower, upper: ub });
        }
    }
    Ok(HardyReport { lower_bound: lower, lower_witness, mazya, upper_bound, per_probe })
}

/// Maximize mass(u)/energy(u) over the span of the probes: project both
/// bilinear forms onto the span, drop the energy-null directions, and run
/// power iteration on the reduced pencil.
fn rayleigh_span_maximizer(
    solver: &CapacitySolver,
    weight: &WeightField,
    probes: &[(String, GridFunction)],
) -> Option<GridFunction> {
    let form = solver.form();
    let domain = form.domain();
    let hn = domain.cell_volume();
    let d = probes.len();
    if d < 2 {
        return None;
    }
    let mut s = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let e = solver.energy_bilinear(&probes[i].1, &probes[j].1);
            s[(i, j)] = e;
            s[(j, i)] = e;
            let m = compensated_sum(
                probes[i]
                    .1
                    .values()
                    .iter()
                    .zip(probes[j].1.values())
                    .enumerate()
                    .map(|(c, (x, y))| x * y * weight.value(c as u32)),
            ) * hn;
            b[(i, j)] = m;
            b[(j, i)] = m;
        }
    }
    let eig = s.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return None;
    }
    let keep: Vec<usize> =
        (0..d).filter(|&i| eig.eigenvalues[i] > 1e-12 * lmax).collect();
    if keep.is_empty() {
        return None;
    }
    let r = keep.len();
    let mut p = DMatrix::zeros(d, r);
    for (col, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt().recip();
        for row in 0..d {
            p[(row, col)] = eig.eigenvectors[(row, i)] * scale;
        }
    }
    let m = p.transpose() * &b * &p;
    let mut y = DVector::from_element(r, (r as f64).sqrt().recip());
    let mut quotient = 0.0;
    for _ in 0..500 {
        let my = &m * &y;
        let norm = my.norm();
        if norm <= 0.0 {
            return None;
        }
        let next = my / norm;
        let q = (next.transpose() * &m * &next)[(0, 0)];
        let done = (q - quotient).abs() <= 1e-13 * q.abs().max(1e-300);
        y = next;
        quotient = q;
        if done {
            break;
        }
    }
    let coeffs = p * y;
    let mut values = vec![0.0; domain.cell_count()];
    for (a, (_, u)) in probes.iter().enumerate() {
        let c = coeffs[a];
        for (i, v) in u.values().iter().enumerate() {
            values[i] += c * v;
        }
    }
    Some(GridFunction::new(domain.clone(), values))
}

// ---------------------------------------------------------------------------
// Quasiadditivity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasiMode {
    General,
    /// K must be a finite union of Whitney cubes.
    Weak,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiItem {
    pub label: String,
    /// Number of Whitney cubes meeting K.
    pub parts: usize,
    /// Σ_Q cap(K ∩ Q, G).
    pub sum_parts: f64,
    pub capacity: f64,
    /// Total certified gap: cap(K) gap plus all part gaps.
    pub gap_total: f64,
    /// N_K = sum_parts / capacity; `None` when capacity ≤ gap.
    pub ratio: Option<f64>,
    /// Cells of K inside boundary-truncated cubes, excluded from both sides.
    pub excluded_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiReport {
    pub mode: QuasiMode,
    pub items: Vec<QuasiItem>,
    pub n_max: Option<f64>,
}

/// Quasiadditivity ratio of one compact set with respect to the Whitney
/// decomposition. Cells lying in flagged cubes are excluded from both sides
/// and reported.
pub fn quasiadditivity(
    solver: &CapacitySolver,
    whitney: &WhitneyDecomposition,
    dist: &DistField,
    label: &str,
    k: &CompactCellSet,
    mode: QuasiMode,
) -> Result<QuasiItem, AnalysisError> {
    let form = solver.form();
    let mut by_cube: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    let mut excluded_cells = 0usize;
    for &cell in k.cells() {
        let cube = whitney.cube_of_cell(cell);
        if whitney.cubes[cube as usize].flag == CubeFlag::BoundaryTruncated {
            excluded_cells += 1;
            continue;
        }
        by_cube.entry(cube).or_default().push(cell);
    }
    if mode == QuasiMode::Weak {
        for (&cube, cells) in &by_cube {
            let full = whitney.cube_cells(&whitney.cubes[cube as usize].cube);
            if cells.len() != full.len() {
                return Err(AnalysisError::NotCubeUnion(cells[0]));
            }
        }
    }
    let effective: Vec<u32> = by_cube.values().flatten().copied().collect();
    let k_eff = CompactCellSet::new(form.domain().clone(), effective, dist)?;
    let parts: Vec<Vec<u32>> = by_cube.into_values().collect();
    let solved: Vec<(f64, f64)> = parts
        .par_iter()
        .map(|cells| {
            let set = CompactCellSet::new(form.domain().clone(), cells.clone(), dist)
                .expect("nonempty part");
            match solver.solve(&set) {
                Ok(r) => (r.value, r.gap),
                Err(_) => (f64::NAN, f64::INFINITY),
            }
        })
        .collect();
    let sum_parts = compensated_sum(solved.iter().map(|s| s.0));
    let whole = solver.solve(&k_eff)?;
    let gap_total = whole.gap + compensated_sum(solved.iter().map(|s| s.1));
    let ratio = (whole.value > gap_total).then(|| sum_parts / whole.value);
    Ok(QuasiItem {
        label: label.to_string(),
        parts: parts.len(),
        sum_parts,
        capacity: whole.value,
        gap_total,
        ratio,
        excluded_cells,
    })
}

pub fn quasi_report(items: Vec<QuasiItem>, mode: QuasiMode) -> QuasiReport {
    let n_max = items
        .iter()
        .filter_map(|i| i.ratio)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    QuasiReport { mode, items, n_max }
}

// ---------------------------------------------------------------------------
// Zero extension
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ZeroExtItem {
    pub label: String,
    pub seminorm: f64,
    pub extended: Bracket,
    /// |E u|^p / |u|^p as a bracket; always ≥ 1.
    pub ratio: Bracket,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroExtReport {
    pub items: Vec<ZeroExtItem>,
    pub sup_ratio: Bracket,
    pub mazya: MazyaReport,
}

/// Zero-extension ratios over a probe family, plus the testing condition for
/// the exterior weight over the given compacta.
pub fn zero_extension_report(
    solver: &CapacitySolver,
    exterior: &WeightField,
    dist: &DistField,
    probes: &[(String, GridFunction)],
    compacta: &[CompactProbe],
) -> Result<ZeroExtReport, AnalysisError> {
    assert_eq!(exterior.kind, WeightKind::Exterior);
    let form = solver.form();
    let mut items = Vec::new();
    let mut sup = Bracket { lo: f64::NEG_INFINITY, hi: f64::NEG_INFINITY };
    for (label, u) in probes {
        let sem = form.seminorm_p(u);
        if sem <= 0.0 {
            continue;
        }
        let extended = form.zero_extended_p(u, exterior);
        let ratio = Bracket { lo: extended.lo / sem, hi: extended.hi / sem };
        sup = Bracket { lo: sup.lo.max(ratio.lo), hi: sup.hi.max(ratio.hi) };
        items.push(ZeroExtItem { label: label.clone(), seminorm: sem, extended, ratio });
    }
    if items.is_empty() {
        return Err(AnalysisError::NoProbes("all probes have zero seminorm".into()));
    }
    let mazya = mazya_test(solver, exterior, dist, compacta);
    Ok(ZeroExtReport { items, sup_ratio: sup, mazya })
}

// ---------------------------------------------------------------------------
// Maximal operator boundedness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MaximalBoundednessReport {
    pub ratios: Vec<(String, f64)>,
    pub max_ratio: f64,
    pub skipped: usize,
}

/// Record |M_G u|^p / |u|^p over the probes. Stability across refinements,
/// not any fixed constant, is the meaningful signal.
pub fn maximal_boundedness_probe(
    form: &EnergyForm,
    dist: &DistField,
    probes: &[(String, GridFunction)],
) -> Result<MaximalBoundednessReport, AnalysisError> {
    form.params().require_p_above_one()?;
    let mut ratios = Vec::new();
    let mut skipped = 0usize;
    let computed: Vec<Option<(String, f64)>> = probes
        .par_iter()
        .map(|(label, u)| {
            let sem = form.seminorm_p(u);
            if sem <= 0.0 {
                return None;
            }
            let m = maximal::local_maximal(u, dist);
            Some((label.clone(), form.seminorm_p(&m) / sem))
        })
        .collect();
    for c in computed {
        match c {
            Some(r) => ratios.push(r),
            None => skipped += 1,
        }
    }
    if ratios.is_empty() {
        return Err(AnalysisError::NoProbes("all probes have zero seminorm".into()));
    }
    let max_ratio = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(MaximalBoundednessReport { ratios, max_ratio, skipped })
}

// ---------------------------------------------------------------------------
// Whitney capacity lower bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CapLowerItem {
    pub gen: u32,
    pub side: f64,
    pub capacity: f64,
    /// cap(Q,G) / ℓ(Q)^{n-sp}.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapLowerReport {
    pub items: Vec<CapLowerItem>,
    pub min_ratio_by_gen: Vec<(u32, f64)>,
    pub min_ratio: f64,
}

/// Per-cube capacity-to-scale ratios cap(Q,G)/ℓ^{n-sp} over the non-flagged
/// cubes, subsampled per generation.
pub fn whitney_cap_lower_check(
    solver: &CapacitySolver,
    whitney: &WhitneyDecomposition,
    dist: &DistField,
    per_gen_cap: usize,
) -> Result<CapLowerReport, AnalysisError> {
    let form = solver.form();
    form.params().require_subcritical()?;
    let exponent = form.params().n as f64 - form.params().sp();
    let mut per_gen: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, wc) in whitney.cubes.iter().enumerate() {
        if wc.flag == CubeFlag::Interior {
            let list = per_gen.entry(wc.cube.gen).or_default();
            if list.len() < per_gen_cap {
                list.push(i);
            }
        }
    }
    let all: Vec<usize> = per_gen.values().flatten().copied().collect();
    let items: Vec<CapLowerItem> = all
        .par_iter()
        .map(|&i| {
            let wc = &whitney.cubes[i];
            let cells = whitney.cube_cells(&wc.cube);
            let set = CompactCellSet::new(form.domain().clone(), cells, dist)
                .expect("cube cells occupied");
            let capacity = solver.solve(&set).map(|r| r.value).unwrap_or(f64::NAN);
            let side = whitney.side(&wc.cube);
            CapLowerItem { gen: wc.cube.gen, side, capacity, ratio: capacity / side.powf(exponent) }
        })
        .collect();
    let mut min_by_gen: std::collections::BTreeMap<u32, f64> = Default::default();
    for item in &items {
        let e = min_by_gen.entry(item.gen).or_insert(f64::INFINITY);
        *e = e.min(item.ratio);
    }
    let min_ratio = min_by_gen.values().copied().fold(f64::INFINITY, f64::min);
    Ok(CapLowerReport {
        items,
        min_ratio_by_gen: min_by_gen.into_iter().collect(),
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::families::CompactProbe;
    use crate::energy::EnergyForm;
    use crate::geometry::{DomainSpec, EnergyParams, GridDomain};
    use std::sync::Arc;

    struct Fixture {
        dom: Arc<GridDomain>,
        dist: DistField,
        form: EnergyForm,
        whitney: WhitneyDecomposition,
    }

    fn fixture(spec: &DomainSpec, h: &str, s: f64, p: f64, n: u8) -> Fixture {
        let dom = GridDomain::build(spec, h.parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let form = EnergyForm::new(dom.clone(), EnergyParams::new(s, p, n).unwrap());
        let whitney = WhitneyDecomposition::build(&dom).unwrap();
        Fixture { dom, dist, form, whitney }
    }

    #[test]
    fn mazya_ratio_bounded_by_witness_energy() {
        let f = fixture(&DomainSpec::Square, "1/16", 0.5, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let w = WeightField::hardy(&f.dist, f.form.params());
        let cells: Vec<u32> = (0..f.dom.cell_count() as u32)
            .filter(|&i| f.dist.value(i) >= 0.25)
            .collect();
        let set = CompactCellSet::new(f.dom.clone(), cells, &f.dist).unwrap();
        let witness = solver.solve(&set).unwrap();
        let report = mazya_test(
            &solver,
            &w,
            &f.dist,
            &[CompactProbe { label: "k".into(), set, candidate: None }],
        );
        let item = &report.items[0];
        let bound = item.left_mass.hi / ((1.0 - 1e-9) * f.form.seminorm_p(&witness.witness));
        assert!(item.ratio.unwrap() <= bound);
    }

    #[test]
    fn hardy_bracket_contains_probe_quotients() {
        let f = fixture(&DomainSpec::Square, "1/16", 0.4, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let w = WeightField::hardy(&f.dist, f.form.params());
        let probes = crate::probe::boundary_ramps(&f.dom, &f.dist, &[0.25, 0.125]);
        let report = hardy_report(&solver, &w, &f.dist, &probes, Vec::new()).unwrap();
        let upper = report.upper_bound.expect("bounded family");
        for (label, q) in &report.per_probe {
            assert!(*q <= upper, "{label}: quotient {q} above upper bound {upper}");
        }
        assert!(report.lower_bound <= upper);
        // Span maximizer should do at least as well as each single probe.
        let span = report
            .per_probe
            .iter()
            .find(|(l, _)| l == "rayleigh_span")
            .map(|(_, q)| *q)
            .expect("p=2 runs the span path");
        for (label, q) in &report.per_probe {
            if label != "rayleigh_span" {
                assert!(span >= *q - 1e-9 * q.abs(), "span {span} below probe {label} = {q}");
            }
        }
    }

    #[test]
    fn hardy_bracket_valid_for_general_p() {
        // No span path at p ≠ 2: probe maxima below, the chain bound above.
        let f = fixture(&DomainSpec::Interval, "1/64", 0.5, 1.5, 1);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let w = WeightField::hardy(&f.dist, f.form.params());
        let probes = crate::probe::boundary_ramps(&f.dom, &f.dist, &[0.25, 0.125, 0.0625]);
        let report = hardy_report(&solver, &w, &f.dist, &probes, Vec::new()).unwrap();
        assert!(report.per_probe.iter().all(|(l, _)| l != "rayleigh_span"));
        let upper = report.upper_bound.expect("bounded family");
        assert!(report.lower_bound <= upper);
        assert!(report.lower_bound > 0.0);
    }

    #[test]
    fn quasi_single_cube_is_unit_ratio() {
        let f = fixture(&DomainSpec::Square, "1/16", 0.5, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let wc = f
            .whitney
            .cubes
            .iter()
            .find(|c| c.flag == CubeFlag::Interior && f.whitney.cells_per_side(&c.cube) >= 2)
            .unwrap();
        let set =
            CompactCellSet::new(f.dom.clone(), f.whitney.cube_cells(&wc.cube), &f.dist).unwrap();
        let item =
            quasiadditivity(&solver, &f.whitney, &f.dist, "single", &set, QuasiMode::Weak)
                .unwrap();
        assert_eq!(item.parts, 1);
        let ratio = item.ratio.unwrap();
        assert!((ratio - 1.0).abs() <= 2.0 * item.gap_total / item.capacity + 1e-9);
        // Lower bound from subadditivity of max-witnesses.
        assert!(ratio >= 1.0 - 4.0 * item.gap_total / item.capacity);
    }

    #[test]
    fn quasi_weak_mode_rejects_partial_cubes() {
        let f = fixture(&DomainSpec::Square, "1/16", 0.5, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let wc = f
            .whitney
            .cubes
            .iter()
            .find(|c| c.flag == CubeFlag::Interior && f.whitney.cells_per_side(&c.cube) >= 2)
            .unwrap();
        let mut cells = f.whitney.cube_cells(&wc.cube);
        cells.pop();
        let set = CompactCellSet::new(f.dom.clone(), cells, &f.dist).unwrap();
        assert!(matches!(
            quasiadditivity(&solver, &f.whitney, &f.dist, "partial", &set, QuasiMode::Weak),
            Err(AnalysisError::NotCubeUnion(_))
        ));
    }

    #[test]
    fn zero_extension_ratios_at_least_one() {
        let f = fixture(&DomainSpec::Square, "1/16", 0.4, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let ext = WeightField::exterior(&f.dom, f.form.params(), 0.01);
        let probes = crate::probe::smooth_noise(&f.dom, 7, 3, 2);
        let report = zero_extension_report(&solver, &ext, &f.dist, &probes, &[]).unwrap();
        for item in &report.items {
            assert!(item.ratio.lo >= 1.0, "{}: ratio {:?}", item.label, item.ratio);
        }
        assert!(report.sup_ratio.hi >= report.sup_ratio.lo);
    }

    #[test]
    fn maximal_boundedness_skips_constants() {
        let f = fixture(&DomainSpec::disk(), "1/32", 0.5, 2.0, 2);
        let mut probes = crate::probe::smooth_noise(&f.dom, 3, 2, 1);
        probes.push(("const".into(), crate::energy::GridFunction::constant(f.dom.clone(), 1.0)));
        let report = maximal_boundedness_probe(&f.form, &f.dist, &probes).unwrap();
        assert_eq!(report.skipped, 1);
        assert_eq!(report.ratios.len(), 2);
        assert!(report.max_ratio.is_finite());
    }

    #[test]
    fn cap_lower_ratios_equal_under_dyadic_scaling() {
        // Homogeneity: the same cube in a coordinate-doubled domain gives the
        // same cap/ℓ^{n-sp} ratio.
        let f = fixture(&DomainSpec::disk(), "1/32", 0.75, 2.0, 2);
        let solver = CapacitySolver::new(&f.form, &f.whitney);
        let report = whitney_cap_lower_check(&solver, &f.whitney, &f.dist, 3).unwrap();
        let sdom = f.dom.scaled(1);
        let sdist = sdom.distance_field();
        let sform = EnergyForm::new(sdom.clone(), *f.form.params());
        let swhitney = WhitneyDecomposition::build(&sdom).unwrap();
        let ssolver = CapacitySolver::new(&sform, &swhitney);
        let sreport = whitney_cap_lower_check(&ssolver, &swhitney, &sdist, 3).unwrap();
        assert_eq!(report.items.len(), sreport.items.len());
        for (a, b) in report.items.iter().zip(&sreport.items) {
            assert_eq!(a.gen, b.gen);
            assert!(
                (a.ratio - b.ratio).abs() <= 1e-10 * a.ratio.abs(),
                "gen {}: {} vs {}",
                a.gen,
                a.ratio,
                b.ratio
            );
        }
    }
}

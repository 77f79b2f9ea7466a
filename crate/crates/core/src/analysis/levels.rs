//! Dyadic level-set decomposition and the truncation chain replay.

use crate::capacity::{CapacitySolver, CompactCellSet};
use crate::energy::{clamp01, GridFunction, WeightField};
use crate::geometry::DistField;
use serde::Serialize;
use std::collections::BTreeMap;

/// Dyadic class of a positive value: the unique k with `v ∈ (2^k, 2^{k+1}]`,
/// computed exactly from the float representation.
fn dyadic_class(v: f64) -> i32 {
    debug_assert!(v > 0.0 && v.is_finite());
    let bits = v.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    debug_assert!(raw_exp > 0, "subnormal values are out of range for level sets");
    let e = raw_exp - 1023;
    let mantissa = bits & 0x000f_ffff_ffff_ffff;
    if mantissa == 0 {
        e - 1
    } else {
        e
    }
}

/// Level sets of |u|: annuli `A_k = {2^k < |u| ≤ 2^{k+1}}` and the zero set F.
/// Together they partition the occupied cells exactly.
#[derive(Debug, Clone)]
pub struct LevelDecomposition {
    u_abs: Vec<f64>,
    domain: std::sync::Arc<crate::geometry::GridDomain>,
    pub zero_cells: Vec<u32>,
    /// (k, cells of A_k), ascending in k, every entry nonempty.
    pub annuli: Vec<(i32, Vec<u32>)>,
}

pub fn level_truncation(u: &GridFunction) -> LevelDecomposition {
    let mut zero_cells = Vec::new();
    let mut by_class: BTreeMap<i32, Vec<u32>> = BTreeMap::new();
    for (i, &v) in u.values().iter().enumerate() {
        if v == 0.0 {
            zero_cells.push(i as u32);
        } else {
            by_class.entry(dyadic_class(v.abs())).or_default().push(i as u32);
        }
    }
    LevelDecomposition {
        u_abs: u.values().iter().map(|v| v.abs()).collect(),
        domain: u.domain().clone(),
        zero_cells,
        annuli: by_class.into_iter().collect(),
    }
}

impl LevelDecomposition {
    /// The truncation u_k: 1 where |u| ≥ 2^{k+1}, |u|/2^k - 1 on the open
    /// band, 0 where |u| ≤ 2^k. Powers of two keep each branch exact.
    pub fn truncation(&self, k: i32) -> GridFunction {
        let hi = 2f64.powi(k + 1);
        let lo = 2f64.powi(k);
        let values = self
            .u_abs
            .iter()
            .map(|&v| {
                if v >= hi {
                    1.0
                } else if v <= lo {
                    0.0
                } else {
                    v / lo - 1.0
                }
            })
            .collect();
        GridFunction::new(self.domain.clone(), values)
    }

    /// Dyadic class of a cell, if nonzero.
    pub fn class_of(&self, cell: u32) -> Option<i32> {
        let v = self.u_abs[cell as usize];
        (v != 0.0).then(|| dyadic_class(v))
    }

    /// Count of violations of the pairwise truncation inequality
    /// `|u_k(x)-u_k(y)| ≤ 2·2^{-j}·|u(x)-u(y)|` over all cell pairs with
    /// classes i ≤ k ≤ j (the zero set acting as class -∞). Exhaustive.
    pub fn pair_inequality_violations(&self, u: &GridFunction) -> usize {
        let n = self.u_abs.len() as u32;
        let classes: Vec<Option<i32>> = (0..n).map(|i| self.class_of(i)).collect();
        let ks: Vec<i32> = self.annuli.iter().map(|(k, _)| *k).collect();
        let mut violations = 0;
        for &k in &ks {
            let uk = self.truncation(k);
            for x in 0..n {
                let cx = classes[x as usize];
                if matches!(cx, Some(i) if i > k) {
                    continue;
                }
                for y in 0..n {
                    let j = match classes[y as usize] {
                        Some(j) if j >= k => j,
                        _ => continue,
                    };
                    let lhs = (uk.value(x) - uk.value(y)).abs();
                    let rhs = 2.0 * 2f64.powi(-j) * (u.value(x) - u.value(y)).abs();
                    if lhs > rhs {
                        violations += 1;
                    }
                }
            }
        }
        violations
    }
}

/// Outcome of replaying the truncation chain on one function: the weighted
/// mass must be bounded by `c_emp · 2^{3p+2}/(1-2^{-p}) · |u|^p` where `c_emp`
/// is the largest mass/capacity ratio over the function's own level compacta.
#[derive(Debug, Clone, Serialize)]
pub struct MazyaReplay {
    pub mass: f64,
    pub seminorm: f64,
    pub c_emp: f64,
    pub bound: f64,
    pub holds: bool,
    pub levels: usize,
}

/// Replay the truncation argument discretely for a clamped function.
///
/// Capacities of the level compacta are never taken above the energy of the
/// matching truncation u_k (which is admissible), so the chain inequality is
/// checked exactly as derived. General-p solves descend from u_k with a
/// capped iteration budget; monotone line search keeps them below that energy.
pub fn mazya_replay(
    solver: &CapacitySolver,
    weight: &WeightField,
    dist: &DistField,
    u: &GridFunction,
    pgd_iter_cap: usize,
) -> MazyaReplay {
    let form = solver.form();
    let u = clamp01(u);
    let seminorm = form.seminorm_p(&u);
    let mass = form.weighted_mass(&u, weight).hi;
    let dec = level_truncation(&u);
    let mut c_emp: f64 = 0.0;
    let mut levels = 0;
    for &(kk, ref cells) in &dec.annuli {
        // The chain pairs A_{k+1} with u_k: here kk = k+1. The truncation is
        // admissible for the level compactum, so its energy always caps the
        // capacity value entering the ratio; solves run on the set trimmed to
        // the solver's class and start from u_k (monotone descent).
        let k = kk - 1;
        let uk = dec.truncation(k);
        let uk_energy = form.seminorm_p(&uk);
        let set = CompactCellSet::new(form.domain().clone(), cells.clone(), dist)
            .expect("annulus is nonempty");
        let mass_k = form.weighted_mass(&GridFunction::indicator(form.domain().clone(), cells), weight).hi;
        let solved = solver.trim(&set, dist).and_then(|trimmed| {
            if form.params().p == 2.0 {
                solver.solve(&trimmed).ok()
            } else {
                solver.solve_seeded(&trimmed, &solver.restrict_to_class(&uk), pgd_iter_cap).ok()
            }
        });
        let cap_used = match solved {
            Some(r) => r.value.min(uk_energy),
            None => uk_energy,
        };
        levels += 1;
        let ratio = if cap_used > 0.0 { mass_k / cap_used } else { f64::INFINITY };
        c_emp = c_emp.max(ratio);
    }
    let constant = super::truncation_chain_constant(form.params().p);
    let bound = c_emp * constant * seminorm;
    let holds = if seminorm == 0.0 || !bound.is_finite() {
        mass == 0.0 || !bound.is_finite()
    } else {
        mass <= bound
    };
    MazyaReplay { mass, seminorm, c_emp, bound, holds, levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, GridDomain};

    fn tiny_domain() -> std::sync::Arc<GridDomain> {
        GridDomain::build(&DomainSpec::Interval, "1/4".parse().unwrap()).unwrap()
    }

    #[test]
    fn classes_from_spec_values() {
        // 0.75 ∈ (1/2, 1] → A_{-1}; 1.5 ∈ (1,2] → A_0; 3 ∈ (2,4] → A_1.
        let dom = tiny_domain();
        let u = GridFunction::new(dom, vec![0.0, 0.75, 1.5, 3.0]);
        let dec = level_truncation(&u);
        assert_eq!(dec.zero_cells, vec![0]);
        assert_eq!(
            dec.annuli,
            vec![(-1, vec![1u32]), (0, vec![2]), (1, vec![3])]
        );
    }

    #[test]
    fn exact_powers_fall_in_lower_annulus() {
        let dom = tiny_domain();
        let u = GridFunction::new(dom, vec![1.0, 2.0, 0.5, 4.0]);
        let dec = level_truncation(&u);
        // 1 ∈ (1/2,1] → A_{-1}; 2 ∈ (1,2] → A_0; 0.5 ∈ (1/4,1/2] → A_{-2}; 4 ∈ (2,4] → A_1.
        assert_eq!(
            dec.annuli,
            vec![(-2, vec![2u32]), (-1, vec![0]), (0, vec![1]), (1, vec![3])]
        );
    }

    #[test]
    fn truncation_formula_value() {
        let dom = tiny_domain();
        let u = GridFunction::new(dom, vec![1.5, 0.0, 0.0, 0.0]);
        let dec = level_truncation(&u);
        // u_0(1.5) = 1.5/1 - 1 = 0.5.
        assert_eq!(dec.truncation(0).value(0), 0.5);
        assert_eq!(dec.truncation(-1).value(0), 1.0);
        assert_eq!(dec.truncation(1).value(0), 0.0);
    }

    #[test]
    fn truncation_range_and_plateaus() {
        let dom = GridDomain::build(&DomainSpec::Interval, "1/16".parse().unwrap()).unwrap();
        let vals: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin().abs() * 3.0).collect();
        let u = GridFunction::new(dom, vals);
        let dec = level_truncation(&u);
        for &(k, _) in &dec.annuli {
            let uk = dec.truncation(k);
            for (i, &v) in uk.values().iter().enumerate() {
                assert!((0.0..=1.0).contains(&v));
                let a = u.value(i as u32).abs();
                if a >= 2f64.powi(k + 1) {
                    assert_eq!(v, 1.0);
                }
                if a <= 2f64.powi(k) {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn pair_inequality_exhaustive_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dom = GridDomain::build(&DomainSpec::Square, "1/8".parse().unwrap()).unwrap();
        for _ in 0..50 {
            let vals: Vec<f64> =
                (0..dom.cell_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u = GridFunction::new(dom.clone(), vals);
            let dec = level_truncation(&u);
            assert_eq!(dec.pair_inequality_violations(&u), 0);
        }
    }

    #[test]
    fn replay_bound_holds_on_random_clamped() {
        use crate::energy::EnergyForm;
        use crate::geometry::{EnergyParams, WhitneyDecomposition};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let dom =
            GridDomain::build(&DomainSpec::SquareMinusSlit, "1/16".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let whitney = WhitneyDecomposition::build(&dom).unwrap();
        for &(s, p) in &[(0.4, 2.0), (0.6, 1.5)] {
            let form = EnergyForm::new(dom.clone(), EnergyParams::new(s, p, 2).unwrap());
            let solver = crate::capacity::CapacitySolver::new(&form, &whitney);
            let w = crate::energy::WeightField::hardy(&dist, form.params());
            for _ in 0..5 {
                let vals: Vec<f64> =
                    (0..dom.cell_count()).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let u = GridFunction::new(dom.clone(), vals);
                let replay = mazya_replay(&solver, &w, &dist, &u, 120);
                assert!(replay.holds, "s={s} p={p}: {replay:?}");
                assert!(replay.c_emp.is_finite());
            }
        }
    }
}

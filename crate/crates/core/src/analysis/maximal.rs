//! Local Hardy-Littlewood maximal operator on grid domains.

use crate::energy::GridFunction;
use crate::geometry::{CubeFlag, DistField, WhitneyDecomposition};
use rayon::prelude::*;

/// Discrete local maximal function: the supremum over radii
/// `r ∈ {h, 2h, …, ⌊dist(x,∂G)/h⌋·h}` of the mean of |u| over cells with
/// centers in the open ball B(x,r), including the single-cell radius so that
/// `M_G u ≥ |u|` pointwise. Every ball with r < dist(x,∂G) stays inside the
/// domain, so all its lattice positions are occupied.
pub fn local_maximal(u: &GridFunction, dist: &DistField) -> GridFunction {
    let domain = u.domain();
    let hv = domain.h.value();
    let cells = domain.cells();
    let one_dim = domain.n == 1;

    // Offsets grouped by the first integer radius k at which |Δ| < k.
    let max_k = cells
        .iter()
        .enumerate()
        .map(|(i, _)| (dist.value(i as u32) / hv).floor() as i64)
        .max()
        .unwrap_or(0);
    let mut groups: Vec<Vec<(i64, i64)>> = vec![Vec::new(); (max_k + 2) as usize];
    let reach = max_k;
    if reach >= 1 {
        let js = if one_dim { 0..=0 } else { -reach..=reach };
        for dj in js {
            for di in -reach..=reach {
                if di == 0 && dj == 0 {
                    continue;
                }
                let r2 = di * di + dj * dj;
                let entry = (r2 as f64).sqrt().floor() as i64 + 1;
                if entry <= max_k {
                    groups[entry as usize].push((di, dj));
                }
            }
        }
    }

    let values: Vec<f64> = (0..cells.len())
        .into_par_iter()
        .map(|i| {
            let [ci, ri] = cells[i];
            let own = u.value(i as u32).abs();
            let rmax = (dist.value(i as u32) / hv).floor() as i64;
            let mut best = own;
            let mut sum = own;
            let mut count = 1usize;
            for k in 2..=rmax {
                for &(di, dj) in &groups[k as usize] {
                    if let Some(j) = domain.cell_index(ci as i64 + di, ri as i64 + dj) {
                        sum += u.value(j).abs();
                        count += 1;
                    } else {
                        debug_assert!(false, "ball of admissible radius left the domain");
                    }
                }
                best = best.max(sum / count as f64);
            }
            best
        })
        .collect();
    GridFunction::new(domain.clone(), values)
}

/// Partition of the non-flagged Whitney cubes by the cell-average threshold:
/// `low` holds cubes with ⟨u⟩_Q < 1/2, `high` the rest (ties go high).
#[derive(Debug, Clone)]
pub struct MeanSplit {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

pub fn mean_split(u: &GridFunction, whitney: &WhitneyDecomposition) -> MeanSplit {
    assert!(
        u.values().iter().all(|&v| v >= 0.0),
        "mean split expects a nonnegative (clamped) function"
    );
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (idx, wc) in whitney.cubes.iter().enumerate() {
        if wc.flag != CubeFlag::Interior {
            continue;
        }
        let cells = whitney.cube_cells(&wc.cube);
        let mean: f64 =
            cells.iter().map(|&c| u.value(c)).sum::<f64>() / cells.len() as f64;
        if mean < 0.5 {
            low.push(idx);
        } else {
            high.push(idx);
        }
    }
    MeanSplit { low, high }
}

/// Count violations of the ball-volume lower bound `M_G u ≥ ⟨u⟩_Q / ρ_n`
/// (ρ_n = 2π in 2-D, 2 in 1-D) at the eligible cells of the given cubes:
/// those with dist(x,∂G) > diam(Q), so the covering radius is admissible.
pub fn maximal_cube_bound_violations(
    u: &GridFunction,
    maximal: &GridFunction,
    whitney: &WhitneyDecomposition,
    dist: &DistField,
    cube_indices: &[usize],
) -> usize {
    let domain = u.domain();
    let rho = if domain.n == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut violations = 0;
    for &idx in cube_indices {
        let wc = &whitney.cubes[idx];
        let cells = whitney.cube_cells(&wc.cube);
        let mean: f64 = cells.iter().map(|&c| u.value(c)).sum::<f64>() / cells.len() as f64;
        let diam = whitney.diam(&wc.cube);
        for &c in &cells {
            if dist.value(c) > diam && maximal.value(c) < mean / rho {
                violations += 1;
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, GridDomain};
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_function_fixed_point() {
        let dom = GridDomain::build(&DomainSpec::Square, "1/16".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let u = GridFunction::constant(dom, 0.7);
        let m = local_maximal(&u, &dist);
        for &v in m.values() {
            assert!((v - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_bruteforce_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dom = GridDomain::build(&DomainSpec::Square, "1/16".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        for _ in 0..3 {
            let vals: Vec<f64> =
                (0..dom.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = GridFunction::new(dom.clone(), vals);
            let m = local_maximal(&u, &dist);
            let oracle = crate::reference::maximal_bruteforce(&u, &dist);
            for (i, &o) in oracle.iter().enumerate() {
                assert!(
                    (m.value(i as u32) - o).abs() <= 1e-12 * o.abs().max(1.0),
                    "cell {i}: {} vs oracle {o}",
                    m.value(i as u32)
                );
            }
        }
    }

    #[test]
    fn dominates_absolute_value_and_sublinear() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let dom = GridDomain::build(&DomainSpec::disk(), "1/32".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let a = GridFunction::new(
            dom.clone(),
            (0..dom.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let b = GridFunction::new(
            dom.clone(),
            (0..dom.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let ma = local_maximal(&a, &dist);
        let mb = local_maximal(&b, &dist);
        let sum = GridFunction::new(
            dom.clone(),
            a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect(),
        );
        let msum = local_maximal(&sum, &dist);
        let scaled = local_maximal(&a.scaled(-2.5), &dist);
        for i in 0..dom.cell_count() as u32 {
            assert!(ma.value(i) >= a.value(i).abs());
            assert!(msum.value(i) <= ma.value(i) + mb.value(i) + 1e-12);
            assert!((scaled.value(i) - 2.5 * ma.value(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn one_dimensional_oracle_and_mean_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let dom = GridDomain::build(&DomainSpec::Interval, "1/32".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let dec = WhitneyDecomposition::build(&dom).unwrap();
        for _ in 0..5 {
            let vals: Vec<f64> =
                (0..dom.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let u = GridFunction::new(dom.clone(), vals);
            let m = local_maximal(&u, &dist);
            let oracle = crate::reference::maximal_bruteforce(&u, &dist);
            for (i, &o) in oracle.iter().enumerate() {
                assert!((m.value(i as u32) - o).abs() <= 1e-12 * o.max(1.0));
            }
            let all: Vec<usize> = (0..dec.cubes.len())
                .filter(|&i| dec.cubes[i].flag == CubeFlag::Interior)
                .collect();
            assert_eq!(maximal_cube_bound_violations(&u, &m, &dec, &dist, &all), 0);
        }
    }

    #[test]
    fn whitney_mean_bound_holds_on_square() {
        use crate::geometry::WhitneyDecomposition;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dom = GridDomain::build(&DomainSpec::Square, "1/32".parse().unwrap()).unwrap();
        let dist = dom.distance_field();
        let dec = WhitneyDecomposition::build(&dom).unwrap();
        for _ in 0..5 {
            let vals: Vec<f64> =
                (0..dom.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let u = GridFunction::new(dom.clone(), vals);
            let m = local_maximal(&u, &dist);
            let all: Vec<usize> = (0..dec.cubes.len())
                .filter(|&i| dec.cubes[i].flag == CubeFlag::Interior)
                .collect();
            assert_eq!(maximal_cube_bound_violations(&u, &m, &dec, &dist, &all), 0);
        }
    }

    #[test]
    fn covering_ball_counts_stay_below_volume_ratio() {
        // For a cell x anywhere in a q-cell cube, the smallest integer radius
        // m whose open ball covers all cube centers satisfies
        // #{(a,b): a²+b² < m²} ≤ 2π·q², which is what makes the
        // M_G u ≥ ⟨u⟩_Q/(2π) bound exact in the count-normalized average.
        // The worst case is a corner cell: m = ⌊√2(q-1)⌋ + 1.
        for q in 1i64..=128 {
            let m = (((2 * (q - 1) * (q - 1)) as f64).sqrt().floor() as i64) + 1;
            let mut count = 0i64;
            for a in -m..=m {
                for b in -m..=m {
                    if a * a + b * b < m * m {
                        count += 1;
                    }
                }
            }
            let bound = 2.0 * std::f64::consts::PI * (q * q) as f64;
            assert!(
                (count as f64) <= bound,
                "q={q}: ball count {count} exceeds 2πq² = {bound}"
            );
        }
        // One dimension: 2m-1 centers against 2q.
        for q in 1i64..=4096 {
            let m = q; // covering radius q-1, next integer radius
            assert!(2 * m - 1 <= 2 * q);
        }
    }

    #[test]
    fn mean_split_trivial_cases() {
        let dom = GridDomain::build(&DomainSpec::Square, "1/16".parse().unwrap()).unwrap();
        let dec = WhitneyDecomposition::build(&dom).unwrap();
        let ones = GridFunction::constant(dom.clone(), 1.0);
        let split = mean_split(&ones, &dec);
        assert!(split.low.is_empty());
        let zeros = GridFunction::constant(dom.clone(), 0.0);
        let split = mean_split(&zeros, &dec);
        assert!(split.high.is_empty());
    }

    use crate::geometry::WhitneyDecomposition;
}

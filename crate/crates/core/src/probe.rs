//! Deterministic test-function families.
//!
//! Everything here is a pure function of the domain and an explicit seed, so
//! reports built from probes are reproducible run to run.

use crate::energy::GridFunction;
use crate::geometry::{CubeFlag, DistField, GridDomain, WhitneyDecomposition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub type Probe = (String, GridFunction);

/// Independent uniform values in [0,1] per cell.
pub fn uniform_noise(domain: &Arc<GridDomain>, seed: u64, count: usize) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|t| {
            let values = (0..domain.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            (format!("noise_{t}"), GridFunction::new(domain.clone(), values))
        })
        .collect()
}

/// Uniform noise smoothed by a few rounds of neighbor averaging.
pub fn smooth_noise(
    domain: &Arc<GridDomain>,
    seed: u64,
    count: usize,
    rounds: usize,
) -> Vec<Probe> {
    uniform_noise(domain, seed, count)
        .into_iter()
        .map(|(label, u)| {
            let mut vals = u.values().to_vec();
            for _ in 0..rounds {
                let prev = vals.clone();
                for (i, &[col, row]) in domain.cells().iter().enumerate() {
                    let mut sum = prev[i];
                    let mut n = 1.0;
                    for (dc, dr) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                        if let Some(j) = domain.cell_index(col as i64 + dc, row as i64 + dr) {
                            sum += prev[j as usize];
                            n += 1.0;
                        }
                    }
                    vals[i] = sum / n;
                }
            }
            (format!("smooth_{label}"), GridFunction::new(domain.clone(), vals))
        })
        .collect()
}

/// Random trigonometric polynomials sampled at cell centers. The underlying
/// function of the seed is resolution-independent, so the same probe can be
/// evaluated on refined grids for convergence studies.
pub fn trig_polynomials(
    domain: &Arc<GridDomain>,
    seed: u64,
    count: usize,
    max_frequency: u32,
) -> Vec<Probe> {
    (0..count)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(t as u64 + 1)));
            let terms: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    (
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0..=max_frequency) as f64,
                        rng.gen_range(0..=max_frequency) as f64,
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let f = move |p: [f64; 2]| -> f64 {
                terms
                    .iter()
                    .map(|&(a, kx, ky, phase)| {
                        a * (std::f64::consts::TAU * (kx * p[0] + ky * p[1]) + phase).cos()
                    })
                    .sum()
            };
            (format!("trig_{t}"), GridFunction::from_fn(domain.clone(), f))
        })
        .collect()
}

/// Boundary ramps u_δ = min(1, dist(x,∂G)/δ): the admissible family whose
/// energy collapses as δ shrinks when sp < 1.
pub fn boundary_ramps(domain: &Arc<GridDomain>, dist: &DistField, deltas: &[f64]) -> Vec<Probe> {
    deltas
        .iter()
        .map(|&delta| {
            let values =
                dist.values().iter().map(|&d| (d / delta).min(1.0)).collect();
            (format!("ramp_{delta}"), GridFunction::new(domain.clone(), values))
        })
        .collect()
}

/// Logarithmic distance profiles `clamp(log2(dist/δ)/A, 0, 1)`, the sharp
/// test shapes in the critical regime sp = 1.
pub fn log_ramps(domain: &Arc<GridDomain>, dist: &DistField, deltas: &[f64]) -> Vec<Probe> {
    let dmax = dist.values().iter().copied().fold(0.0, f64::max);
    deltas
        .iter()
        .map(|&delta| {
            let a = (dmax / delta).log2().max(1.0);
            let values = dist
                .values()
                .iter()
                .map(|&d| ((d / delta).log2() / a).clamp(0.0, 1.0))
                .collect();
            (format!("logramp_{delta}"), GridFunction::new(domain.clone(), values))
        })
        .collect()
}

/// Radial bump of height 1 centered in the bounding box.
pub fn central_bump(domain: &Arc<GridDomain>) -> Probe {
    let hv = domain.h.value();
    let cx = (domain.origin[0] as f64 + domain.ncols as f64 / 2.0) * hv;
    let cy = if domain.n == 1 {
        0.0
    } else {
        (domain.origin[1] as f64 + domain.nrows as f64 / 2.0) * hv
    };
    let radius = domain.ncols as f64 * hv / 3.0;
    let f = move |p: [f64; 2]| {
        let dx = p[0] - cx;
        let dy = p[1] - cy;
        (1.0 - (dx * dx + dy * dy).sqrt() / radius).max(0.0)
    };
    ("bump".into(), GridFunction::from_fn(domain.clone(), f))
}

/// One Whitney cutoff per generation, taken from the cube closest to the
/// boundary in that generation.
pub fn cutoffs_by_generation(whitney: &WhitneyDecomposition) -> Vec<Probe> {
    let mut best: std::collections::BTreeMap<u32, usize> = Default::default();
    for (i, wc) in whitney.cubes.iter().enumerate() {
        if wc.flag != CubeFlag::Interior {
            continue;
        }
        match best.entry(wc.cube.gen) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(i);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                if wc.dist < whitney.cubes[*e.get()].dist {
                    e.insert(i);
                }
            }
        }
    }
    best.into_iter()
        .map(|(gen, i)| {
            let cutoff = crate::energy::whitney_cutoff(whitney, &whitney.cubes[i].cube);
            (format!("cutoff_gen_{gen}"), cutoff.func)
        })
        .collect()
}

/// Cutoffs of the given cubes.
pub fn cutoffs_of(whitney: &WhitneyDecomposition, cubes: &[usize], label: &str) -> Vec<Probe> {
    cubes
        .iter()
        .map(|&i| {
            let cutoff = crate::energy::whitney_cutoff(whitney, &whitney.cubes[i].cube);
            (format!("{label}_cube_{i}"), cutoff.func)
        })
        .collect()
}

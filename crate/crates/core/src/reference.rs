//! Independent brute-force reference implementations.
//!
//! These oracles deliberately avoid the optimized code paths (kernel tables,
//! FFT convolutions, incremental ring sums): distances and kernel values are
//! recomputed from coordinates on every use, and sums run naively. The test
//! suites compare the production paths against them.

use crate::energy::GridFunction;
use crate::geometry::{DistField, EnergyParams, GridDomain};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Naive double-loop Gagliardo p-energy over ordered pairs.
pub fn seminorm_bruteforce(u: &GridFunction, params: &EnergyParams) -> f64 {
    let domain = u.domain();
    let nn = domain.cell_count() as u32;
    let q = params.kernel_exponent();
    let mut total = 0.0;
    for i in 0..nn {
        let xi = domain.cell_center(i);
        for j in 0..nn {
            if i == j {
                continue;
            }
            let xj = domain.cell_center(j);
            let dx = xi[0] - xj[0];
            let dy = xi[1] - xj[1];
            let dist = (dx * dx + dy * dy).sqrt();
            total += (u.value(i) - u.value(j)).abs().powf(params.p) / dist.powf(q);
        }
    }
    total * domain.h.value().powi(2 * params.n as i32)
}

/// Same quadrature accumulated in an arbitrary pair order (compensated), for
/// the permutation-determinism check.
pub fn seminorm_in_order(u: &GridFunction, params: &EnergyParams, order: &[u32]) -> f64 {
    let domain = u.domain();
    let q = params.kernel_exponent();
    let mut acc = crate::sum::Accumulator::new();
    for (a, &i) in order.iter().enumerate() {
        let xi = domain.cell_center(i);
        for &j in order.iter().skip(a + 1) {
            let xj = domain.cell_center(j);
            let dx = xi[0] - xj[0];
            let dy = xi[1] - xj[1];
            let dist = (dx * dx + dy * dy).sqrt();
            acc.add((u.value(i) - u.value(j)).abs().powf(params.p) / dist.powf(q));
        }
    }
    2.0 * acc.value() * domain.h.value().powi(2 * params.n as i32)
}

/// Dense constrained solve of the p = 2 capacity problem: assemble the full
/// weight matrix, eliminate the constrained cells (u = 1 on K, u = 0 on the
/// pinned boundary cells) and solve by LU.
/// Returns (energy value, witness values).
pub fn dense_capacity_p2(
    domain: &Arc<GridDomain>,
    params: &EnergyParams,
    k_cells: &[u32],
    pinned_cells: &[u32],
) -> (f64, Vec<f64>) {
    assert_eq!(params.p, 2.0);
    let n = domain.cell_count();
    let q = params.kernel_exponent();
    let h2n = domain.h.value().powi(2 * params.n as i32);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = domain.cell_center(i as u32);
        for j in 0..n {
            if i == j {
                continue;
            }
            let xj = domain.cell_center(j as u32);
            let dx = xi[0] - xj[0];
            let dy = xi[1] - xj[1];
            let dist = (dx * dx + dy * dy).sqrt();
            w[(i, j)] = h2n / dist.powf(q);
        }
    }
    let mut fixed = vec![None::<f64>; n];
    for &c in k_cells {
        fixed[c as usize] = Some(1.0);
    }
    for &c in pinned_cells {
        assert!(fixed[c as usize].is_none(), "compact set touches a pinned cell");
        fixed[c as usize] = Some(0.0);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if !free.is_empty() {
        let nf = free.len();
        let mut a = DMatrix::zeros(nf, nf);
        let mut b = DVector::zeros(nf);
        for (fi, &i) in free.iter().enumerate() {
            let d: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
            for (fj, &j) in free.iter().enumerate() {
                a[(fi, fj)] = if fi == fj { d } else { -w[(i, j)] };
            }
            b[fi] = (0..n)
                .filter_map(|j| fixed[j].map(|v| w[(i, j)] * v))
                .sum();
        }
        let sol = a.lu().solve(&b).expect("reduced system is positive definite");
        for (fi, &i) in free.iter().enumerate() {
            values[i] = sol[fi];
        }
    }
    let mut energy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = values[i] - values[j];
                energy += w[(i, j)] * d * d;
            }
        }
    }
    (energy, values)
}

/// Pinned cells of a domain: the boundary-truncated cells of its Whitney
/// decomposition.
pub fn pinned_cells(whitney: &crate::geometry::WhitneyDecomposition) -> Vec<u32> {
    let mut out = Vec::new();
    for wc in &whitney.cubes {
        if wc.flag == crate::geometry::CubeFlag::BoundaryTruncated {
            out.extend(whitney.cube_cells(&wc.cube));
        }
    }
    out.sort_unstable();
    out
}

/// Exterior weight by midpoint quadrature over an exterior grid of the given
/// radius plus the exact analytic tail `σ_{n-1}·R^{-sp}/(sp)`.
///
/// `inside` decides membership in the open set G; the quadrature grid is the
/// cell lattice of the domain refined by `refine`. Requires the cut radius to
/// cover the domain seen from x, i.e. R ≥ 2·diam as in the weight contract.
pub fn exterior_weight_quadrature(
    domain: &GridDomain,
    params: &EnergyParams,
    x: [f64; 2],
    radius: f64,
    refine: u32,
    inside: &dyn Fn([f64; 2]) -> bool,
) -> f64 {
    assert!(radius >= 2.0 * domain.bbox_diameter(), "cut radius must be ≥ 2·diam");
    let sp = params.sp();
    let q = params.kernel_exponent();
    let he = domain.h.value() / refine as f64;
    let steps = (radius / he).ceil() as i64 + 1;
    let mut sum = 0.0;
    if params.n == 1 {
        for i in -steps..steps {
            let y = x[0] + (i as f64 + 0.5) * he;
            let d = (y - x[0]).abs();
            if d > radius || inside([y, 0.0]) {
                continue;
            }
            sum += he / d.powf(q);
        }
    } else {
        for i in -steps..steps {
            for j in -steps..steps {
                let y = [x[0] + (i as f64 + 0.5) * he, x[1] + (j as f64 + 0.5) * he];
                let dx = y[0] - x[0];
                let dy = y[1] - x[1];
                let d = (dx * dx + dy * dy).sqrt();
                if d > radius || inside(y) {
                    continue;
                }
                sum += he * he / d.powf(q);
            }
        }
    }
    sum + params.sphere_measure() * radius.powf(-sp) / sp
}

/// Local maximal function by explicit enumeration of every admissible radius
/// and every cell in each ball.
pub fn maximal_bruteforce(u: &GridFunction, dist: &DistField) -> Vec<f64> {
    let domain = u.domain();
    let hv = domain.h.value();
    let n = domain.cell_count() as u32;
    let mut out = vec![0.0; n as usize];
    for i in 0..n {
        let xi = domain.cell_center(i);
        let mut best = u.value(i).abs();
        let rmax = (dist.value(i) / hv).floor() as i64;
        for rk in 1..=rmax {
            let r = rk as f64 * hv;
            let mut sum = 0.0;
            let mut count = 0usize;
            for j in 0..n {
                let xj = domain.cell_center(j);
                let dx = xj[0] - xi[0];
                let dy = xj[1] - xi[1];
                if (dx * dx + dy * dy).sqrt() < r {
                    sum += u.value(j).abs();
                    count += 1;
                }
            }
            if count > 0 {
                best = best.max(sum / count as f64);
            }
        }
        out[i as usize] = best;
    }
    out
}

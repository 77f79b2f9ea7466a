//! Discrete Gagliardo (s,p)-energies, weights and test-function helpers.
//!
//! The seminorm quadrature over a grid domain with occupied cell centers
//! `x_i` is
//!
//! ```text
//! |u|^p ≈ Σ_{i≠j} |u(x_i) - u(x_j)|^p · h^{2n} / |x_i - x_j|^{n+sp}
//! ```
//!
//! with the diagonal excluded and no near-diagonal singularity correction.
//! Sums run in fixed lexicographic order; the default accumulation is
//! compensated, so results are reproducible and independent of the worker
//! count.

mod weight;

pub use weight::{WeightField, WeightKind};

use crate::geometry::{EnergyParams, GridDomain};
use crate::sum::{compensated_sum, Accumulator};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Real values on the occupied cells of a domain; implicitly zero outside,
/// which is exactly the zero extension of the function to the whole space.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), domain.cell_count(), "value vector must match occupied cells");
        assert!(values.iter().all(|v| v.is_finite()), "grid function values must be finite");
        Self { domain, values }
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        let n = domain.cell_count();
        Self::new(domain, vec![c; n])
    }

    /// Indicator of a cell set.
    pub fn indicator(domain: Arc<GridDomain>, cells: &[u32]) -> Self {
        let mut values = vec![0.0; domain.cell_count()];
        for &c in cells {
            values[c as usize] = 1.0;
        }
        Self::new(domain, values)
    }

    /// Build from a pointwise map of cell centers.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.cell_count() as u32).map(|i| f(domain.cell_center(i))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, cell: u32) -> f64 {
        self.values[cell as usize]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.domain.clone(), self.values.iter().map(|v| c * v).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.domain.hash(), other.domain.hash());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self::new(self.domain.clone(), values)
    }

    /// Pointwise maximum.
    pub fn max(&self, other: &Self) -> Self {
        assert_eq!(self.domain.hash(), other.domain.hash());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.max(*b)).collect();
        Self::new(self.domain.clone(), values)
    }
}

/// Pointwise truncation to [0,1]. Being a 1-Lipschitz post-composition, it
/// never increases the seminorm.
pub fn clamp01(u: &GridFunction) -> GridFunction {
    GridFunction::new(
        u.domain.clone(),
        u.values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SummationMode {
    /// Plain running sum in lexicographic pair order.
    FixedOrder,
    /// Neumaier-compensated accumulation in the same order (default).
    #[default]
    Compensated,
}

/// Certified interval for quantities whose exact value is bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Pairwise kernel values by integer offset: `k(Δ) = (h|Δ|)^{-(n+sp)}`.
pub(crate) struct KernelTable {
    ncols: usize,
    vals: Vec<f64>,
}

impl KernelTable {
    fn build(domain: &GridDomain, params: &EnergyParams) -> Self {
        let ncols = domain.ncols;
        let nrows = domain.nrows;
        let q = -params.kernel_exponent() / 2.0;
        let h2 = domain.h.value() * domain.h.value();
        let mut vals = vec![0.0; ncols * nrows];
        for dj in 0..nrows {
            for di in 0..ncols {
                if di == 0 && dj == 0 {
                    continue;
                }
                let r2 = (di * di + dj * dj) as f64;
                vals[dj * ncols + di] = (h2 * r2).powf(q);
            }
        }
        Self { ncols, vals }
    }

    #[inline]
    pub(crate) fn get(&self, di: u32, dj: u32) -> f64 {
        self.vals[dj as usize * self.ncols + di as usize]
    }
}

/// The (s,p)-energy form bound to one domain: parameters, summation mode and
/// the cached kernel table. The form is symmetric in each pair and has zero
/// diagonal by construction.
pub struct EnergyForm {
    domain: Arc<GridDomain>,
    params: EnergyParams,
    summation: SummationMode,
    kernel: KernelTable,
}

impl EnergyForm {
    pub fn new(domain: Arc<GridDomain>, params: EnergyParams) -> Self {
        let kernel = KernelTable::build(&domain, &params);
        Self { domain, params, summation: SummationMode::default(), kernel }
    }

    pub fn with_summation(mut self, mode: SummationMode) -> Self {
        self.summation = mode;
        self
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn params(&self) -> &EnergyParams {
        &self.params
    }

    pub(crate) fn kernel(&self) -> &KernelTable {
        &self.kernel
    }

    fn check_domain(&self, u: &GridFunction) {
        assert_eq!(
            u.domain().hash(),
            self.domain.hash(),
            "grid function lives on a different domain"
        );
    }

    /// p-th power of the discrete Gagliardo seminorm.
    ///
    /// Deterministic for a fixed summation mode: rows are accumulated in
    /// lexicographic order and reduced in fixed row order regardless of how
    /// many workers execute.
    pub fn seminorm_p(&self, u: &GridFunction) -> f64 {
        self.check_domain(u);
        let cells = self.domain.cells();
        let vals = &u.values;
        let p = self.params.p;
        let compensated = self.summation == SummationMode::Compensated;
        let row_sums: Vec<f64> = (0..cells.len())
            .into_par_iter()
            .map(|i| {
                let [ci, ri] = cells[i];
                let ui = vals[i];
                let mut acc = Accumulator::new();
                let mut naive = 0.0;
                for (j, &[cj, rj]) in cells.iter().enumerate().skip(i + 1) {
                    let d = ui - vals[j];
                    if d == 0.0 {
                        continue;
                    }
                    let di = ci.abs_diff(cj);
                    let dj = ri.abs_diff(rj);
                    let k = self.kernel.get(di, dj);
                    let term = if p == 2.0 { d * d * k } else { d.abs().powf(p) * k };
                    if compensated {
                        acc.add(term);
                    } else {
                        naive += term;
                    }
                }
                if compensated {
                    acc.value()
                } else {
                    naive
                }
            })
            .collect();
        let h2n = self.domain.h.value().powi(2 * self.params.n as i32);
        2.0 * h2n * compensated_sum(row_sums)
    }

    /// Weighted p-mass Σ |u(x_i)|^p w(x_i) h^n, bracketed when the weight is.
    pub fn weighted_mass(&self, u: &GridFunction, w: &WeightField) -> Bracket {
        self.check_domain(u);
        let p = self.params.p;
        let hn = self.domain.cell_volume();
        let mut lo = Accumulator::new();
        let mut hi = Accumulator::new();
        for (i, &v) in u.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let m = if p == 2.0 { v * v } else { v.abs().powf(p) };
            lo.add(m * w.lower(i as u32));
            hi.add(m * w.upper(i as u32));
        }
        Bracket { lo: lo.value() * hn, hi: hi.value() * hn }
    }

    /// p-th power of the seminorm of the zero extension over the whole space:
    /// `|E u|^p = |u|^p_G + 2·Σ_i |u(x_i)|^p ω(x_i) h^n` with ω the exterior
    /// weight. Returns the bracket induced by the weight bracket.
    pub fn zero_extended_p(&self, u: &GridFunction, exterior: &WeightField) -> Bracket {
        assert_eq!(exterior.kind, WeightKind::Exterior, "needs the exterior weight");
        let inner = self.seminorm_p(u);
        let mass = self.weighted_mass(u, exterior);
        Bracket { lo: inner + 2.0 * mass.lo, hi: inner + 2.0 * mass.hi }
    }
}

/// Piecewise-linear Whitney cutoff: 1 on Q, 0 outside Q* = (17/16)Q, linear
/// in the sup-norm distance across the collar of width ℓ(Q)/32.
pub struct CutoffResult {
    pub func: GridFunction,
    /// Collar thinner than one cell: the ramp degenerated to an indicator.
    pub degenerate: bool,
}

pub fn whitney_cutoff(
    dec: &crate::geometry::WhitneyDecomposition,
    cube: &crate::geometry::DyadicCube,
) -> CutoffResult {
    let domain = dec.domain().clone();
    let q = dec.cells_per_side(cube) as i64;
    let hv = domain.h.value();
    let collar = q as f64 * hv / 32.0;
    let degenerate = collar < hv;
    let c0 = cube.corner[0] * q;
    let r0 = if domain.n == 1 { 0 } else { cube.corner[1] * q };
    let mut values = vec![0.0; domain.cell_count()];
    for cell in dec.dilate(cube, crate::geometry::Dilation::Star) {
        let [col, row] = domain.cells()[cell as usize];
        // Sup-norm distance from the cell center to the closed cube, in units of h/2.
        let off_c = (2 * (col as i64 - c0) + 1 - q).abs() - q;
        let off_r = if domain.n == 1 { 0 } else { (2 * (row as i64 - r0) + 1 - q).abs() - q };
        let s = off_c.max(off_r).max(0) as f64 * hv / 2.0;
        values[cell as usize] = (1.0 - s / collar).clamp(0.0, 1.0);
    }
    CutoffResult { func: GridFunction::new(domain, values), degenerate }
}

//! Variational (s,p)-capacity of compact cell sets, with certified gaps.

mod conv;
mod slit;

pub use slit::{slit_test_family, SlitTestFunction};

use crate::energy::{clamp01, EnergyForm, GridFunction};
use crate::geometry::{DistField, GridDomain, WhitneyDecomposition};
use crate::sum::compensated_sum;
use conv::ConvPlan;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Nonempty set of occupied cells at positive distance from the boundary.
#[derive(Debug, Clone)]
pub struct CompactCellSet {
    domain: Arc<GridDomain>,
    cells: Vec<u32>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CapacityError {
    #[error("compact set is empty")]
    EmptySet,
    #[error("compact set touches a boundary-truncated Whitney cell (cell {0})")]
    TouchesFlaggedCell(u32),
    #[error("{0}")]
    Params(#[from] crate::geometry::ParamError),
    #[error("family member {member} is not admissible: u = {value} < 1 at cell {cell}")]
    NotAdmissible { member: usize, cell: u32, value: f64 },
    #[error("interior solution violates the maximum principle (value {0})")]
    MaximumPrinciple(f64),
    #[error("slit family index m={m} needs a finer grid: collar radius {radius} < h/2 = {min}")]
    SlitTooCoarse { m: u32, radius: f64, min: f64 },
}

impl CompactCellSet {
    pub fn new(
        domain: Arc<GridDomain>,
        mut cells: Vec<u32>,
        dist: &DistField,
    ) -> Result<Self, CapacityError> {
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(CapacityError::EmptySet);
        }
        let margin = cells.iter().map(|&c| dist.value(c)).fold(f64::INFINITY, f64::min);
        Ok(Self { domain, cells, margin })
    }

    /// Like [`CompactCellSet::new`] but rejects sets that touch
    /// boundary-truncated Whitney cells.
    pub fn strict_interior(
        domain: Arc<GridDomain>,
        cells: Vec<u32>,
        dist: &DistField,
        whitney: &WhitneyDecomposition,
    ) -> Result<Self, CapacityError> {
        let set = Self::new(domain, cells, dist)?;
        for &c in &set.cells {
            let cube = whitney.cube_of_cell(c);
            if whitney.cubes[cube as usize].flag == crate::geometry::CubeFlag::BoundaryTruncated {
                return Err(CapacityError::TouchesFlaggedCell(c));
            }
        }
        Ok(set)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: u32) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn union(&self, other: &Self, dist: &DistField) -> Result<Self, CapacityError> {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        Self::new(self.domain.clone(), cells, dist)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.iter().all(|c| other.contains(*c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted; the value is an upper bound.
    MaxIter,
}

/// Capacity value with certified optimizer.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// p-th-power energy of the witness.
    pub value: f64,
    pub witness: GridFunction,
    /// Certified optimality gap (energy units).
    pub gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual target of the conjugate-gradient path (p = 2).
    pub cg_rel_residual: f64,
    pub cg_max_iter: usize,
    /// Window length for the stagnation rule of the projected-gradient path.
    pub pgd_window: usize,
    /// Relative energy decrease over the window that stops the iteration.
    pub pgd_stagnation: f64,
    pub pgd_max_iter: usize,
    /// Constraint satisfaction tolerance for witnesses.
    pub constraint_tol: f64,
    /// Cell count above which convolutions go through the FFT plan.
    pub fft_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cg_rel_residual: 1e-9,
            cg_max_iter: 4000,
            pgd_window: 20,
            pgd_stagnation: 1e-10,
            pgd_max_iter: 4000,
            constraint_tol: 1e-9,
            fft_threshold: 4096,
        }
    }
}

/// Matrix-free solver for `cap_{s,p}(K, G)`.
///
/// The admissible class is the discrete stand-in for compactly supported
/// continuous functions: grid functions vanishing on the boundary-truncated
/// Whitney cells (without this the constant function would make every
/// capacity zero). Compact sets touching those cells are rejected.
///
/// p = 2 minimizes the quadratic form with `u = 1` on K by preconditioned
/// conjugate gradients on the free cells; the unconstrained-off-K minimizer
/// lies in [0,1] by the maximum principle of the positive-weight form, which
/// is asserted on every solve. General p > 1 runs projected gradient descent
/// on `{u ≥ χ_K} ∩ [0,1]` with backtracking line search, cold-started from
/// χ_K and restarted from the p = 2 witness; the reported gap combines both
/// runs with the stagnation bound.
pub struct CapacitySolver<'a> {
    form: &'a EnergyForm,
    pub config: SolverConfig,
    /// Cells pinned to zero (boundary-truncated Whitney cells).
    pinned: Vec<bool>,
    /// Row sums of the kernel table over occupied cells (no h factor).
    diag: Vec<f64>,
    /// k ⋆ χ_pinned, entering the reduced-operator spectral bound.
    pinned_row: Vec<f64>,
    plan: Option<ConvPlan>,
}

impl<'a> CapacitySolver<'a> {
    pub fn new(form: &'a EnergyForm, whitney: &WhitneyDecomposition) -> Self {
        Self::with_config(form, whitney, SolverConfig::default())
    }

    pub fn with_config(
        form: &'a EnergyForm,
        whitney: &WhitneyDecomposition,
        config: SolverConfig,
    ) -> Self {
        let domain = form.domain();
        let cells = domain.cells();
        let kernel = form.kernel();
        let n = cells.len();
        let use_fft = n > config.fft_threshold;
        let plan = use_fft.then(|| {
            ConvPlan::new(domain.ncols, domain.nrows, |di, dj| kernel.get(di, dj))
        });
        let mut pinned = vec![false; n];
        for wc in &whitney.cubes {
            if wc.flag == crate::geometry::CubeFlag::BoundaryTruncated {
                for cell in whitney.cube_cells(&wc.cube) {
                    pinned[cell as usize] = true;
                }
            }
        }
        // Exact row sums, reused by every solve on this form.
        let diag: Vec<f64> = {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let [ci, ri] = cells[i];
                    compensated_sum(cells.iter().enumerate().filter(|&(j, _)| j != i).map(
                        |(_, &[cj, rj])| kernel.get(ci.abs_diff(cj), ri.abs_diff(rj)),
                    ))
                })
                .collect()
        };
        let mut solver = Self { form, config, pinned, diag, pinned_row: Vec::new(), plan };
        let chi: Vec<f64> =
            solver.pinned.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
        let mut row = vec![0.0; n];
        solver.convolve(&chi, &mut row);
        solver.pinned_row = row;
        solver
    }

    pub fn form(&self) -> &EnergyForm {
        self.form
    }

    /// Cells pinned to zero in the admissible class.
    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    /// Zero a function on the pinned cells, projecting it into the
    /// admissible class of the solver.
    pub fn restrict_to_class(&self, u: &GridFunction) -> GridFunction {
        let values = u
            .values()
            .iter()
            .zip(&self.pinned)
            .map(|(&v, &p)| if p { 0.0 } else { v })
            .collect();
        GridFunction::new(self.form.domain().clone(), values)
    }

    /// Drop pinned cells from a compact set; `None` when nothing remains.
    pub fn trim(&self, set: &CompactCellSet, dist: &DistField) -> Option<CompactCellSet> {
        let cells: Vec<u32> = set
            .cells()
            .iter()
            .copied()
            .filter(|&c| !self.pinned[c as usize])
            .collect();
        if cells.is_empty() {
            return None;
        }
        Some(
            CompactCellSet::new(self.form.domain().clone(), cells, dist)
                .expect("trimmed set is nonempty"),
        )
    }

    /// Kernel convolution (k ⋆ x) over occupied cells.
    fn convolve(&self, x: &[f64], out: &mut [f64]) {
        let domain = self.form.domain();
        let cells = domain.cells();
        if let Some(plan) = &self.plan {
            plan.convolve(
                cells.iter().zip(x).map(|(&[c, r], &v)| (c, r, v)),
                cells,
                out,
            );
        } else {
            use rayon::prelude::*;
            let kernel = self.form.kernel();
            out.par_iter_mut().enumerate().for_each(|(i, o)| {
                let [ci, ri] = cells[i];
                *o = compensated_sum(cells.iter().enumerate().filter(|&(j, _)| j != i).map(
                    |(j, &[cj, rj])| kernel.get(ci.abs_diff(cj), ri.abs_diff(rj)) * x[j],
                ));
            });
        }
    }

    /// Bilinear form of the quadratic energy:
    /// e(u,v) = Σ_{i≠j} w_ij (u_i - u_j)(v_i - v_j) = 2 h^{2n} uᵀ(D - K)v.
    pub fn energy_bilinear(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        let n = self.form.domain().cell_count();
        let mut kv = vec![0.0; n];
        self.convolve(v.values(), &mut kv);
        let h2n = self.form.domain().h.value().powi(2 * self.form.params().n as i32);
        2.0 * h2n
            * compensated_sum(
                (0..n).map(|i| u.values()[i] * (self.diag[i] * v.values()[i] - kv[i])),
            )
    }

    /// Graph-operator action (A x)_i = d_i x_i - (k ⋆ x)_i restricted to free
    /// cells (x must be zero on K).
    fn apply_free(&self, x: &[f64], free: &[bool], out: &mut [f64]) {
        self.convolve(x, out);
        for i in 0..x.len() {
            out[i] = if free[i] { self.diag[i] * x[i] - out[i] } else { 0.0 };
        }
    }

    pub fn solve(&self, k: &CompactCellSet) -> Result<CapacityResult, CapacityError> {
        for &c in k.cells() {
            if self.pinned[c as usize] {
                return Err(CapacityError::TouchesFlaggedCell(c));
            }
        }
        let params = self.form.params();
        if params.p == 2.0 {
            self.solve_quadratic(k)
        } else {
            params.require_p_above_one()?;
            let cold = GridFunction::indicator(self.form.domain().clone(), k.cells());
            let (u1, e1, it1, st1, slack1) = self.pgd(k, &cold, self.config.pgd_max_iter);
            let seed = self.solve_quadratic(k)?;
            let (u2, e2, it2, st2, slack2) = self.pgd(k, &seed.witness, self.config.pgd_max_iter);
            let (best, value, slack) = if e1 <= e2 { (u1, e1, slack1) } else { (u2, e2, slack2) };
            let status = if st1 == SolveStatus::Converged && st2 == SolveStatus::Converged {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIter
            };
            Ok(CapacityResult {
                value,
                witness: best,
                gap: (e1 - e2).abs() + slack,
                iterations: it1 + it2,
                status,
            })
        }
    }

    /// Projected gradient descent seeded from an admissible function; the
    /// monotone line search guarantees the returned energy never exceeds the
    /// seed's.
    pub fn solve_seeded(
        &self,
        k: &CompactCellSet,
        seed: &GridFunction,
        max_iter: usize,
    ) -> Result<CapacityResult, CapacityError> {
        self.form.params().require_p_above_one()?;
        for &c in k.cells() {
            if self.pinned[c as usize] {
                return Err(CapacityError::TouchesFlaggedCell(c));
            }
        }
        let (witness, value, iterations, status, slack) = self.pgd(k, seed, max_iter);
        Ok(CapacityResult { value, witness, gap: slack, iterations, status })
    }

    fn solve_quadratic(&self, k: &CompactCellSet) -> Result<CapacityResult, CapacityError> {
        let domain = self.form.domain();
        let n = domain.cell_count();
        let cfg = &self.config;
        let mut free = vec![true; n];
        for &c in k.cells() {
            free[c as usize] = false;
        }
        for (i, &p) in self.pinned.iter().enumerate() {
            if p {
                free[i] = false;
            }
        }

        // b = (k ⋆ χ_K) on free cells (pinned cells contribute zero data).
        let chi: Vec<f64> = (0..n)
            .map(|i| if k.contains(i as u32) { 1.0 } else { 0.0 })
            .collect();
        let mut b = vec![0.0; n];
        self.convolve(&chi, &mut b);
        for i in 0..n {
            if !free[i] {
                b[i] = 0.0;
            }
        }

        // Gershgorin bound for the reduced operator:
        // λ_min ≥ min_F Σ_{j ∉ F} k_ij = min_F (b_i + (k ⋆ χ_pinned)_i).
        let lambda_lb = (0..n)
            .filter(|&i| free[i])
            .map(|i| b[i] + self.pinned_row[i])
            .fold(f64::INFINITY, f64::min);

        let dot = |a: &[f64], b: &[f64]| compensated_sum(a.iter().zip(b).map(|(x, y)| x * y));
        let b_norm = dot(&b, &b).sqrt();

        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut z: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(i, &v)| if free[i] { v / self.diag[i] } else { 0.0 })
            .collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut iterations = 0;
        let mut status = SolveStatus::MaxIter;
        let mut res_norm2 = dot(&r, &r);

        if b_norm == 0.0 {
            // K decoupled (cannot happen with a positive kernel); witness χ_K.
            status = SolveStatus::Converged;
        } else {
            for it in 0..cfg.cg_max_iter {
                iterations = it + 1;
                self.apply_free(&p, &free, &mut ap);
                let pap = dot(&p, &ap);
                if pap <= 0.0 {
                    break;
                }
                let alpha = rz / pap;
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                res_norm2 = dot(&r, &r);
                if res_norm2.sqrt() <= cfg.cg_rel_residual * b_norm {
                    status = SolveStatus::Converged;
                    break;
                }
                for i in 0..n {
                    z[i] = if free[i] { r[i] / self.diag[i] } else { 0.0 };
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
        }

        // Maximum principle: the interior solution must lie inside [0,1].
        let mut low = 0.0f64;
        let mut high = 1.0f64;
        for (i, &v) in x.iter().enumerate() {
            if free[i] {
                low = low.min(v);
                high = high.max(v);
            }
        }
        let mp_tol = 1e-7;
        if low < -mp_tol || high > 1.0 + mp_tol {
            return Err(CapacityError::MaximumPrinciple(if low < -mp_tol { low } else { high }));
        }

        let mut values = x;
        for &c in k.cells() {
            values[c as usize] = 1.0;
        }
        let witness = clamp01(&GridFunction::new(domain.clone(), values));
        let value = self.form.seminorm_p(&witness);

        // Energy gap bound 2·h^{2n}·‖r‖²/λ_min for the quadratic form.
        let h2n = domain.h.value().powi(2 * self.form.params().n as i32);
        let gap = if lambda_lb > 0.0 { 2.0 * h2n * res_norm2 / lambda_lb } else { f64::INFINITY };
        Ok(CapacityResult { value, witness, gap, iterations, status })
    }

    /// Energy and gradient of the general-p form at u (gradient on free cells).
    fn energy_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        use rayon::prelude::*;
        let domain = self.form.domain();
        let cells = domain.cells();
        let p = self.form.params().p;
        let kernel = self.form.kernel();
        let n = cells.len();
        let results: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let [ci, ri] = cells[i];
                let ui = u[i];
                let mut g = 0.0;
                let mut e = 0.0;
                for (j, &[cj, rj]) in cells.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let d = ui - u[j];
                    if d == 0.0 {
                        continue;
                    }
                    let k = kernel.get(ci.abs_diff(cj), ri.abs_diff(rj));
                    let a = d.abs().powf(p - 1.0) * k;
                    g += a * d.signum();
                    if j > i {
                        e += a * d.abs();
                    }
                }
                (e, 2.0 * p * g)
            })
            .collect();
        let h2n = domain.h.value().powi(2 * self.form.params().n as i32);
        for (i, g) in grad.iter_mut().enumerate() {
            *g = results[i].1 * h2n;
        }
        2.0 * h2n * compensated_sum(results.iter().map(|r| r.0))
    }

    fn project(&self, u: &mut [f64], in_k: &[bool]) {
        for (i, v) in u.iter_mut().enumerate() {
            *v = if in_k[i] {
                1.0
            } else if self.pinned[i] {
                0.0
            } else {
                v.clamp(0.0, 1.0)
            };
        }
    }

    fn pgd(
        &self,
        k: &CompactCellSet,
        seed: &GridFunction,
        max_iter: usize,
    ) -> (GridFunction, f64, usize, SolveStatus, f64) {
        let domain = self.form.domain();
        let n = domain.cell_count();
        let cfg = &self.config;
        let mut in_k = vec![false; n];
        for &c in k.cells() {
            in_k[c as usize] = true;
        }
        let mut u: Vec<f64> = seed.values().to_vec();
        self.project(&mut u, &in_k);

        let mut grad = vec![0.0; n];
        let mut energy = self.energy_gradient(&u, &mut grad);
        let mut history = vec![energy];
        let mut step = 1.0 / grad.iter().map(|g| g.abs()).fold(1e-30, f64::max);
        let mut iterations = 0;
        let mut status = SolveStatus::MaxIter;

        for it in 0..max_iter {
            iterations = it + 1;
            let mut trial = vec![0.0; n];
            let mut accepted = false;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = u[i] - step * grad[i];
                }
                self.project(&mut trial, &in_k);
                let mut new_grad = vec![0.0; n];
                let new_energy = self.energy_gradient(&trial, &mut new_grad);
                // Armijo on the projected step.
                let decrease: f64 = u
                    .iter()
                    .zip(&trial)
                    .zip(&grad)
                    .map(|((a, b), g)| g * (a - b))
                    .sum();
                if new_energy <= energy - 1e-4 * decrease.max(0.0) && new_energy <= energy {
                    u = trial;
                    grad = new_grad;
                    energy = new_energy;
                    step *= 1.8;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            history.push(energy);
            if !accepted {
                status = SolveStatus::Converged;
                break;
            }
            if history.len() > cfg.pgd_window {
                let prev = history[history.len() - 1 - cfg.pgd_window];
                if prev - energy <= cfg.pgd_stagnation * energy.abs().max(1e-300) {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
        let window_slack = if history.len() > cfg.pgd_window {
            (history[history.len() - 1 - cfg.pgd_window] - energy).max(0.0)
        } else {
            0.0
        };
        let witness = GridFunction::new(domain.clone(), u);
        (witness, energy, iterations, status, window_slack)
    }
}

/// Minimum energy over an explicit admissible family: every member must be
/// ≥ 1 on K up to the constraint tolerance.
pub fn capacity_upper_bound(
    form: &EnergyForm,
    k: &CompactCellSet,
    family: &[GridFunction],
    constraint_tol: f64,
) -> Result<f64, CapacityError> {
    assert!(!family.is_empty(), "family must be nonempty");
    for (m, u) in family.iter().enumerate() {
        for &cell in k.cells() {
            let v = u.value(cell);
            if v < 1.0 - constraint_tol {
                return Err(CapacityError::NotAdmissible { member: m, cell, value: v });
            }
        }
    }
    Ok(family
        .iter()
        .map(|u| form.seminorm_p(u))
        .fold(f64::INFINITY, f64::min))
}

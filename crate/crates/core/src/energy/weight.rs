//! Hardy and exterior weights on grid domains.

use crate::geometry::{point_segment_distance, DistField, EnergyParams, GridDomain, SegmentKind};
use crate::sum::Accumulator;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// dist(x,∂G)^{-sp}, exact from the distance field.
    Hardy,
    /// ω(x) = ∫_{Rⁿ\G} |x-y|^{-n-sp} dy, carried as a certified bracket.
    Exterior,
}

/// Per-cell weight values; exterior weights carry a bracket
/// `[lower, upper]` with `upper - lower ≤ declared_tolerance · value`.
#[derive(Debug, Clone)]
pub struct WeightField {
    pub kind: WeightKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
    pub declared_tolerance: f64,
}

impl WeightField {
    #[inline]
    pub fn lower(&self, cell: u32) -> f64 {
        self.lower[cell as usize]
    }

    #[inline]
    pub fn upper(&self, cell: u32) -> f64 {
        self.upper[cell as usize]
    }

    /// Midpoint value.
    #[inline]
    pub fn value(&self, cell: u32) -> f64 {
        0.5 * (self.lower[cell as usize] + self.upper[cell as usize])
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// The Hardy weight dist(x,∂G)^{-sp}.
    pub fn hardy(dist: &DistField, params: &EnergyParams) -> Self {
        let sp = params.sp();
        let vals: Vec<f64> = dist.values().iter().map(|d| d.powf(-sp)).collect();
        Self { kind: WeightKind::Hardy, lower: vals.clone(), upper: vals, declared_tolerance: 0.0 }
    }

    /// The exterior weight ω.
    ///
    /// In one dimension the complement is a union of rays and gaps and ω has
    /// a closed form. In two dimensions ω is evaluated as a flux integral
    /// over the outer boundary: with `V(y) = -(y-x)/(sp·|y-x|^{2+sp})` one has
    /// `div V = |y-x|^{-2-sp}`, so integrating over the complement leaves
    /// only the boundary term
    ///
    /// ```text
    /// ω(x) = (1/sp) ∮_{∂G} (y-x)·ν(y) / |y-x|^{2+sp} ds(y),
    /// ```
    ///
    /// with ν the outward normal. Slit segments bound no area and are
    /// skipped. The returned bracket is `value·(1 ± rel_tol)`; the quadrature
    /// itself is adaptive with error far below any practical `rel_tol`.
    pub fn exterior(domain: &GridDomain, params: &EnergyParams, rel_tol: f64) -> Self {
        assert!(rel_tol >= 0.0);
        let values: Vec<f64> = if domain.n == 1 {
            let gaps = complement_intervals(domain);
            (0..domain.cell_count() as u32)
                .map(|i| exterior_weight_1d(domain.cell_center(i)[0], &gaps, params.sp()))
                .collect()
        } else {
            (0..domain.cell_count() as u32)
                .into_par_iter()
                .map(|i| exterior_weight_2d(domain, domain.cell_center(i), params.sp()))
                .collect()
        };
        assert!(
            values.iter().all(|v| v.is_finite() && *v > 0.0),
            "exterior weight must be strictly positive on interior cells"
        );
        let lower = values.iter().map(|v| v * (1.0 - rel_tol)).collect();
        let upper = values.iter().map(|v| v * (1.0 + rel_tol)).collect();
        Self { kind: WeightKind::Exterior, lower, upper, declared_tolerance: rel_tol }
    }
}

/// Complement of a one-dimensional mask domain: left ray, finite gaps, right
/// ray, as (start, end) with ±∞ rays encoded by infinite endpoints.
fn complement_intervals(domain: &GridDomain) -> Vec<(f64, f64)> {
    let hv = domain.h.value();
    let x_of = |col: i64| (domain.origin[0] + col) as f64 * hv;
    let mut gaps = Vec::new();
    let mut run_start: Option<i64> = None;
    let mut prev_end: Option<i64> = None;
    for col in 0..domain.ncols as i64 {
        let occ = domain.is_occupied(col, 0);
        match (occ, run_start) {
            (true, None) => {
                run_start = Some(col);
                match prev_end {
                    None => gaps.push((f64::NEG_INFINITY, x_of(col))),
                    Some(e) => gaps.push((x_of(e), x_of(col))),
                }
            }
            (false, Some(_)) => {
                run_start = None;
                prev_end = Some(col);
            }
            _ => {}
        }
    }
    let last = match run_start {
        Some(_) => domain.ncols as i64,
        None => prev_end.expect("domain is nonempty"),
    };
    gaps.push((x_of(last), f64::INFINITY));
    gaps
}

fn exterior_weight_1d(x: f64, gaps: &[(f64, f64)], sp: f64) -> f64 {
    let mut acc = Accumulator::new();
    for &(a, b) in gaps {
        if b <= x {
            // Gap to the left: ∫_a^b (x-y)^{-1-sp} dy.
            let hi = (x - b).powf(-sp);
            let lo = if a.is_infinite() { 0.0 } else { (x - a).powf(-sp) };
            acc.add((hi - lo) / sp);
        } else {
            let lo = (a - x).powf(-sp);
            let hi = if b.is_infinite() { 0.0 } else { (b - x).powf(-sp) };
            acc.add((lo - hi) / sp);
        }
    }
    acc.value()
}

// 8-point Gauss-Legendre rule on [0,1].
const GL8_T: [f64; 8] = [
    0.019855071751231884,
    0.101_666_761_293_186_64,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_825,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_1,
];
const GL8_W: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_63,
    0.181_341_891_689_181,
    0.181_341_891_689_181,
    0.156_853_322_938_943_63,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];

fn exterior_weight_2d(domain: &GridDomain, x: [f64; 2], sp: f64) -> f64 {
    let q = 2.0 + sp;
    let mut acc = Accumulator::new();
    for seg in domain.boundary() {
        if seg.kind == SegmentKind::Slit {
            continue;
        }
        let d_perp = (seg.a[0] - x[0]) * seg.outward[0] + (seg.a[1] - x[1]) * seg.outward[1];
        if d_perp == 0.0 {
            continue;
        }
        let len = seg.length();
        // ∫₀¹ |a + t(b-a) - x|^{-q} dt by adaptive panels: split while a panel
        // is longer than half its distance to x.
        let mut integral = Accumulator::new();
        let mut stack = vec![(0.0f64, 1.0f64)];
        while let Some((t0, t1)) = stack.pop() {
            let pa = [
                seg.a[0] + t0 * (seg.b[0] - seg.a[0]),
                seg.a[1] + t0 * (seg.b[1] - seg.a[1]),
            ];
            let pb = [
                seg.a[0] + t1 * (seg.b[0] - seg.a[0]),
                seg.a[1] + t1 * (seg.b[1] - seg.a[1]),
            ];
            let panel = crate::geometry::Segment {
                a: pa,
                b: pb,
                outward: seg.outward,
                kind: seg.kind,
            };
            let dist = point_segment_distance(x, &panel);
            let plen = len * (t1 - t0);
            if plen > 0.5 * dist && t1 - t0 > 1e-12 {
                let tm = 0.5 * (t0 + t1);
                stack.push((t0, tm));
                stack.push((tm, t1));
                continue;
            }
            let mut panel_sum = 0.0;
            for (&t, &w) in GL8_T.iter().zip(&GL8_W) {
                let tt = t0 + (t1 - t0) * t;
                let py = [
                    seg.a[0] + tt * (seg.b[0] - seg.a[0]),
                    seg.a[1] + tt * (seg.b[1] - seg.a[1]),
                ];
                let dx = py[0] - x[0];
                let dy = py[1] - x[1];
                let r2 = dx * dx + dy * dy;
                panel_sum += w * r2.powf(-q / 2.0);
            }
            integral.add(panel_sum * (t1 - t0));
        }
        acc.add(d_perp * len * integral.value());
    }
    acc.value() / sp
}

//! Whitney decomposition of a grid domain into half-open dyadic cubes.

use super::domain::GridDomain;
use super::poly::point_segment_distance;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Half-open dyadic cube `corner·ℓ + [0, ℓ)^n` with `ℓ = 2^{-gen}` in
/// bounding-box units. Corners are stored in cube-lattice indices, so the
/// cells of one decomposition partition the occupied set exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub gen: u32,
    pub corner: [i64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeFlag {
    /// Genuine Whitney cube: diam(Q) ≤ dist(Q,∂G) ≤ 4·diam(Q).
    Interior,
    /// Finest-generation cell too close to the boundary to satisfy the
    /// distance inequality; excluded from per-cube statistics.
    BoundaryTruncated,
}

#[derive(Debug, Clone, Serialize)]
pub struct WhitneyCube {
    #[serde(flatten)]
    pub cube: DyadicCube,
    /// Corner-based distance to the boundary, in domain units.
    pub dist: f64,
    pub flag: CubeFlag,
}

/// Cube dilation factors used by the cutoff and overlap machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dilation {
    /// Q* = (17/16)·Q
    Star,
    /// Q** = (9/8)·Q
    StarStar,
}

impl Dilation {
    pub fn ratio(&self) -> (i64, i64) {
        match self {
            Dilation::Star => (17, 16),
            Dilation::StarStar => (9, 8),
        }
    }

    pub fn factor(&self) -> f64 {
        let (n, d) = self.ratio();
        n as f64 / d as f64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WhitneyError {
    #[error("grid is not a dyadic mesh: {0}")]
    NotDyadic(String),
}

/// Whitney decomposition with recorded distances, flags and the observed
/// overlap constant of the (9/8)-dilates.
#[derive(Debug)]
pub struct WhitneyDecomposition {
    domain: Arc<GridDomain>,
    pub cubes: Vec<WhitneyCube>,
    /// Observed max of Σ_Q χ_{Q**} over occupied cells.
    pub overlap_constant: u32,
    cell_to_cube: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WhitneyValidation {
    pub total_cubes: usize,
    pub flagged_cubes: usize,
    pub eq_violations: usize,
    pub partition_exact: bool,
    pub overlap_constant: u32,
}

impl WhitneyDecomposition {
    /// Greedy coarse-to-fine selection over the dyadic mesh.
    ///
    /// A cube is emitted when all its cells are occupied and the corner-based
    /// distance satisfies diam(Q) ≤ dist(Q,∂G) ≤ 4·diam(Q) and no emitted
    /// ancestor contains it. Occupied cells left at the finest generation are
    /// emitted as single-cell cubes flagged `BoundaryTruncated`.
    pub fn build(domain: &Arc<GridDomain>) -> Result<Self, WhitneyError> {
        let cols = domain.ncols;
        if !cols.is_power_of_two() {
            return Err(WhitneyError::NotDyadic(format!("{cols} columns")));
        }
        if domain.n == 2 && domain.nrows != cols {
            return Err(WhitneyError::NotDyadic("bounding box is not square".into()));
        }
        let depth = cols.trailing_zeros();

        // Prefix occupancy counts for O(1) full-occupancy tests.
        let nrows = domain.nrows;
        let mut prefix = vec![0u32; (cols + 1) * (nrows + 1)];
        for r in 0..nrows {
            for c in 0..cols {
                let occ = domain.is_occupied(c as i64, r as i64) as u32;
                prefix[(r + 1) * (cols + 1) + (c + 1)] = prefix[r * (cols + 1) + c + 1]
                    + prefix[(r + 1) * (cols + 1) + c]
                    + occ
                    - prefix[r * (cols + 1) + c];
            }
        }
        let count_occ = |c0: usize, r0: usize, c1: usize, r1: usize| -> u32 {
            prefix[r1 * (cols + 1) + c1] + prefix[r0 * (cols + 1) + c0]
                - prefix[r0 * (cols + 1) + c1]
                - prefix[r1 * (cols + 1) + c0]
        };

        let mut builder = Builder {
            domain: domain.clone(),
            cubes: Vec::new(),
            cell_to_cube: vec![u32::MAX; domain.cell_count()],
            depth,
        };
        if domain.n == 1 {
            builder.visit1(0, 0, &|c0, c1| count_occ(c0, 0, c1, 1));
        } else {
            builder.visit2(0, 0, 0, &|c0, r0, c1, r1| count_occ(c0, r0, c1, r1));
        }
        debug_assert!(builder.cell_to_cube.iter().all(|&c| c != u32::MAX));

        let mut dec = WhitneyDecomposition {
            domain: domain.clone(),
            cubes: builder.cubes,
            overlap_constant: 0,
            cell_to_cube: builder.cell_to_cube,
        };
        dec.overlap_constant = dec.compute_overlap();
        Ok(dec)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Side length of a cube in cells.
    pub fn cells_per_side(&self, cube: &DyadicCube) -> usize {
        self.domain.ncols >> cube.gen
    }

    /// Side length ℓ(Q) in domain units.
    pub fn side(&self, cube: &DyadicCube) -> f64 {
        self.cells_per_side(cube) as f64 * self.domain.h.value()
    }

    /// diam(Q) = √n · ℓ(Q).
    pub fn diam(&self, cube: &DyadicCube) -> f64 {
        (self.domain.n as f64).sqrt() * self.side(cube)
    }

    /// Occupied-cell indices of the cube (a cube is emitted only when all of
    /// its cells are occupied).
    pub fn cube_cells(&self, cube: &DyadicCube) -> Vec<u32> {
        let q = self.cells_per_side(cube) as i64;
        let c0 = cube.corner[0] * q;
        let r0 = if self.domain.n == 1 { 0 } else { cube.corner[1] * q };
        let rows = if self.domain.n == 1 { 1 } else { q };
        let mut cells = Vec::with_capacity((q * rows) as usize);
        for r in r0..r0 + rows {
            for c in c0..c0 + q {
                cells.push(self.domain.cell_index(c, r).expect("cube cell must be occupied"));
            }
        }
        cells
    }

    /// Index of the decomposition cube containing an occupied cell.
    pub fn cube_of_cell(&self, cell: u32) -> u32 {
        self.cell_to_cube[cell as usize]
    }

    /// Occupied cells whose centers lie in the closed dilated cube.
    pub fn dilate(&self, cube: &DyadicCube, dilation: Dilation) -> Vec<u32> {
        let q = self.cells_per_side(cube) as i64;
        let (num, den) = dilation.ratio();
        let c0 = cube.corner[0] * q;
        let r0 = if self.domain.n == 1 { 0 } else { cube.corner[1] * q };
        // Cell center offset from the cube center, doubled and scaled by den:
        // |2·den·(col - c0) + den·(1 - q)| ≤ num·q  per axis.
        let within = |col: i64, start: i64| -> bool {
            (2 * den * (col - start) + den * (1 - q)).abs() <= num * q
        };
        // Conservative scan window.
        let reach = (num * q) / (2 * den) + 2;
        let mut cells = Vec::new();
        let rows = if self.domain.n == 1 { (0, 1) } else { (r0 - reach, r0 + q + reach) };
        for r in rows.0..rows.1 {
            if self.domain.n == 2 && !within(r, r0) {
                continue;
            }
            for c in c0 - reach..c0 + q + reach {
                if !within(c, c0) {
                    continue;
                }
                if let Some(idx) = self.domain.cell_index(c, r) {
                    cells.push(idx);
                }
            }
        }
        cells
    }

    fn compute_overlap(&self) -> u32 {
        let mut counts = vec![0u32; self.domain.cell_count()];
        for wc in &self.cubes {
            for cell in self.dilate(&wc.cube, Dilation::StarStar) {
                counts[cell as usize] += 1;
            }
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Re-check the defining inequalities and the partition property.
    pub fn validate(&self) -> WhitneyValidation {
        let mut eq_violations = 0usize;
        let mut covered = vec![false; self.domain.cell_count()];
        let mut partition_exact = true;
        for wc in &self.cubes {
            for cell in self.cube_cells(&wc.cube) {
                if covered[cell as usize] {
                    partition_exact = false;
                }
                covered[cell as usize] = true;
            }
            if wc.flag == CubeFlag::Interior {
                let diam = self.diam(&wc.cube);
                let dist = cube_boundary_distance(&self.domain, &wc.cube);
                if !(diam <= dist && dist <= 4.0 * diam) {
                    eq_violations += 1;
                }
            }
        }
        if !covered.iter().all(|&c| c) {
            partition_exact = false;
        }
        WhitneyValidation {
            total_cubes: self.cubes.len(),
            flagged_cubes: self
                .cubes
                .iter()
                .filter(|c| c.flag == CubeFlag::BoundaryTruncated)
                .count(),
            eq_violations,
            partition_exact,
            overlap_constant: self.overlap_constant,
        }
    }

    /// Cubes (by index) whose cells all lie inside the given closed rectangle
    /// of domain coordinates.
    pub fn cubes_within_rect(&self, min: [f64; 2], max: [f64; 2]) -> Vec<usize> {
        let hv = self.domain.h.value();
        let o = self.domain.origin;
        (0..self.cubes.len())
            .filter(|&i| {
                let cube = &self.cubes[i].cube;
                let q = self.cells_per_side(cube) as i64;
                let x0 = (o[0] + cube.corner[0] * q) as f64 * hv;
                let x1 = (o[0] + (cube.corner[0] + 1) * q) as f64 * hv;
                let (y0, y1) = if self.domain.n == 1 {
                    (min[1], max[1])
                } else {
                    (
                        (o[1] + cube.corner[1] * q) as f64 * hv,
                        (o[1] + (cube.corner[1] + 1) * q) as f64 * hv,
                    )
                };
                x0 >= min[0] && x1 <= max[0] && y0 >= min[1] && y1 <= max[1]
            })
            .collect()
    }
}

/// Corner-based distance from a dyadic cube to the domain boundary: the
/// minimum over the cube's corner points and all boundary segments.
pub fn cube_boundary_distance(domain: &GridDomain, cube: &DyadicCube) -> f64 {
    let q = (domain.ncols >> cube.gen) as i64;
    let hv = domain.h.value();
    let x0 = (domain.origin[0] + cube.corner[0] * q) as f64 * hv;
    let x1 = (domain.origin[0] + (cube.corner[0] + 1) * q) as f64 * hv;
    let corners: Vec<[f64; 2]> = if domain.n == 1 {
        vec![[x0, 0.0], [x1, 0.0]]
    } else {
        let y0 = (domain.origin[1] + cube.corner[1] * q) as f64 * hv;
        let y1 = (domain.origin[1] + (cube.corner[1] + 1) * q) as f64 * hv;
        vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    };
    let mut best = f64::INFINITY;
    for corner in &corners {
        for seg in domain.boundary() {
            best = best.min(point_segment_distance(*corner, seg));
        }
    }
    best
}

struct Builder {
    domain: Arc<GridDomain>,
    cubes: Vec<WhitneyCube>,
    cell_to_cube: Vec<u32>,
    depth: u32,
}

impl Builder {
    fn try_emit(&mut self, gen: u32, ci: i64, cj: i64, fully_occupied: bool) -> bool {
        if !fully_occupied {
            return false;
        }
        let cube = DyadicCube { gen, corner: [ci, cj] };
        let q = (self.domain.ncols >> gen) as f64;
        let diam = (self.domain.n as f64).sqrt() * q * self.domain.h.value();
        let dist = cube_boundary_distance(&self.domain, &cube);
        let at_finest = gen == self.depth;
        let flag = if diam <= dist && dist <= 4.0 * diam {
            CubeFlag::Interior
        } else if at_finest {
            CubeFlag::BoundaryTruncated
        } else {
            return false;
        };
        let idx = self.cubes.len() as u32;
        self.cubes.push(WhitneyCube { cube, dist, flag });
        let q = (self.domain.ncols >> gen) as i64;
        let rows = if self.domain.n == 1 { (0, 1) } else { (cj * q, (cj + 1) * q) };
        for r in rows.0..rows.1 {
            for c in ci * q..(ci + 1) * q {
                let cell = self.domain.cell_index(c, r).unwrap();
                self.cell_to_cube[cell as usize] = idx;
            }
        }
        true
    }

    fn visit1(&mut self, gen: u32, ci: i64, occ: &dyn Fn(usize, usize) -> u32) {
        let q = (self.domain.ncols >> gen) as i64;
        let (c0, c1) = ((ci * q) as usize, ((ci + 1) * q) as usize);
        let count = occ(c0, c1);
        if count == 0 {
            return;
        }
        let full = count as i64 == q;
        if self.try_emit(gen, ci, 0, full) {
            return;
        }
        if gen < self.depth {
            self.visit1(gen + 1, 2 * ci, occ);
            self.visit1(gen + 1, 2 * ci + 1, occ);
        }
    }

    fn visit2(&mut self, gen: u32, ci: i64, cj: i64, occ: &dyn Fn(usize, usize, usize, usize) -> u32) {
        let q = (self.domain.ncols >> gen) as i64;
        let (c0, r0) = ((ci * q) as usize, (cj * q) as usize);
        let (c1, r1) = (((ci + 1) * q) as usize, ((cj + 1) * q) as usize);
        let count = occ(c0, r0, c1, r1);
        if count == 0 {
            return;
        }
        let full = count as i64 == q * q;
        if self.try_emit(gen, ci, cj, full) {
            return;
        }
        if gen < self.depth {
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                self.visit2(gen + 1, 2 * ci + di, 2 * cj + dj, occ);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, DyadicStep};

    fn step(s: &str) -> DyadicStep {
        s.parse().unwrap()
    }

    fn build(spec: &DomainSpec, h: &str) -> WhitneyDecomposition {
        let dom = GridDomain::build(spec, step(h)).unwrap();
        WhitneyDecomposition::build(&dom).unwrap()
    }

    #[test]
    fn square_partition_and_validator() {
        let dec = build(&DomainSpec::Square, "1/64");
        let v = dec.validate();
        assert!(v.partition_exact);
        assert_eq!(v.eq_violations, 0);
        assert!(v.total_cubes > v.flagged_cubes);
    }

    #[test]
    fn interval_matches_bruteforce_dyadic_selection() {
        let dom = GridDomain::build(&DomainSpec::Interval, step("1/128")).unwrap();
        let dec = WhitneyDecomposition::build(&dom).unwrap();

        // Independent oracle: enumerate every dyadic interval coarse-to-fine
        // and apply the same greedy rule directly on interval arithmetic.
        let mut chosen: Vec<(u32, i64)> = Vec::new();
        let mut covered: Vec<(f64, f64)> = Vec::new();
        for gen in 0..=7u32 {
            let len = 1.0 / f64::from(1u32 << gen);
            for i in 0..(1i64 << gen) {
                let a = i as f64 * len;
                let b = a + len;
                if covered.iter().any(|&(ca, cb)| a >= ca && b <= cb) {
                    continue;
                }
                let dist = a.min(1.0 - b);
                if len <= dist && dist <= 4.0 * len {
                    chosen.push((gen, i));
                    covered.push((a, b));
                }
            }
        }
        let mut counts_oracle = std::collections::BTreeMap::new();
        for (gen, _) in &chosen {
            *counts_oracle.entry(*gen).or_insert(0usize) += 1;
        }
        let mut counts_built = std::collections::BTreeMap::new();
        for wc in dec.cubes.iter().filter(|c| c.flag == CubeFlag::Interior) {
            *counts_built.entry(wc.cube.gen).or_insert(0usize) += 1;
        }
        assert_eq!(counts_oracle, counts_built);
    }

    #[test]
    fn dilate_nesting_and_ring() {
        let dec = build(&DomainSpec::Square, "1/64");
        for wc in &dec.cubes {
            let base: std::collections::BTreeSet<u32> =
                dec.cube_cells(&wc.cube).into_iter().collect();
            let star: std::collections::BTreeSet<u32> =
                dec.dilate(&wc.cube, Dilation::Star).into_iter().collect();
            let star2: std::collections::BTreeSet<u32> =
                dec.dilate(&wc.cube, Dilation::StarStar).into_iter().collect();
            assert!(base.is_subset(&star));
            assert!(star.is_subset(&star2));
        }
    }

    #[test]
    fn star_dilate_adds_one_ring_at_sixteen_cells() {
        // ℓ(Q) = 16h: the 17/16 dilate covers exactly the one-cell ring,
        // whose centers sit on the dilated boundary.
        let dec = build(&DomainSpec::Square, "1/128");
        let wc = dec
            .cubes
            .iter()
            .find(|c| c.flag == CubeFlag::Interior && dec.cells_per_side(&c.cube) == 16)
            .expect("square decomposition has a 16-cell cube");
        let base = dec.cube_cells(&wc.cube).len();
        let star = dec.dilate(&wc.cube, Dilation::Star).len();
        assert_eq!(base, 256);
        assert_eq!(star, 18 * 18); // full one-cell ring (cube interior to the domain)
    }

    #[test]
    fn overlap_constant_finite_and_stable_on_square() {
        let a = build(&DomainSpec::Square, "1/64");
        let b = build(&DomainSpec::Square, "1/128");
        assert!(a.overlap_constant >= 1);
        assert_eq!(a.overlap_constant, b.overlap_constant);
    }

    #[test]
    fn koch_minus_slit_cubes_shrink_toward_slit() {
        let spec = crate::geometry::SlitSnowflakeSpec::standard(4);
        let dom = GridDomain::build(&DomainSpec::KochMinusSlit(spec.clone()), step("1/128")).unwrap();
        let dec = WhitneyDecomposition::build(&dom).unwrap();
        let slit = spec.slit();
        for &m in &spec.ms {
            let r_m = spec.collar_radius(m);
            let bound = 4.0 * r_m / std::f64::consts::SQRT_2 * 1.05;
            let mut max_side: f64 = 0.0;
            for wc in dec.cubes.iter().filter(|c| c.flag == CubeFlag::Interior) {
                // Cube meets the closed collar when some cell center is within r_m.
                let meets = dec.cube_cells(&wc.cube).iter().any(|&cell| {
                    let c = dom.cell_center(cell);
                    point_segment_distance(c, &slit) <= r_m
                });
                if meets {
                    max_side = max_side.max(dec.side(&wc.cube));
                }
            }
            assert!(
                max_side <= bound,
                "m={m}: max side {max_side} exceeds bound {bound}"
            );
            // The collar is wide enough to catch genuine cubes while it spans
            // several cells; thinner collars meet only flagged cells.
            if r_m >= 4.0 * dom.h.value() {
                assert!(max_side > 0.0, "m={m}: no cube meets the collar");
            }
        }
    }

    #[test]
    fn disk_and_koch_validate() {
        for (spec, h) in [
            (DomainSpec::disk(), "1/64"),
            (DomainSpec::Koch { level: 4 }, "1/128"),
            (DomainSpec::koch_minus_slit(4), "1/128"),
        ] {
            let dec = build(&spec, h);
            let v = dec.validate();
            assert!(v.partition_exact, "{spec:?}");
            assert_eq!(v.eq_violations, 0, "{spec:?}");
        }
    }
}

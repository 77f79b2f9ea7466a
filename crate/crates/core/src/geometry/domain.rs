//! Grid domains: occupancy masks with exact polygonal boundaries.

use super::poly::{koch_polygon, point_segment_distance, Polygon, Segment, SegmentKind};
use super::DyadicStep;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Geometry of the reference square, interior slit and collar family used by
/// the slit-snowflake construction.
///
/// The slit is `L = x_R + [-ℓ(R)/4, ℓ(R)/4] × {0}` inside the closed square
/// `R`; the collars are `L_m = L + B(0, r_m)` with `r_m = collar_scale/(2m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitSnowflakeSpec {
    /// Prefractal generation (1 = triangle).
    pub level: u32,
    /// Center x_R of the reference square.
    pub r_center: [f64; 2],
    /// Side ℓ(R) of the reference square.
    pub r_side: f64,
    /// Scale of the collar family: r_m = collar_scale / (2m).
    pub collar_scale: f64,
    /// Collar indices the construction must resolve.
    pub ms: Vec<u32>,
}

impl SlitSnowflakeSpec {
    /// Default geometry: level-4 prefractal of side 27/32 centered in the unit
    /// square, reference square R = [11/32,21/32]×[10/32,20/32], collar scale 1/4.
    ///
    /// All corners of R and the slit endpoints are dyadic, so they sit on the
    /// grid lattice for every step `h ≤ 1/64`.
    pub fn standard(level: u32) -> Self {
        Self {
            level,
            r_center: [0.5, 15.0 / 32.0],
            r_side: 5.0 / 16.0,
            collar_scale: 0.25,
            ms: vec![2, 4, 8, 16],
        }
    }

    /// Collar radius r_m.
    pub fn collar_radius(&self, m: u32) -> f64 {
        self.collar_scale / (2.0 * m as f64)
    }

    /// Diameter threshold selecting the Whitney cubes of the compact K_m.
    pub fn cube_diam_threshold(&self, m: u32) -> f64 {
        self.collar_radius(m) / 2.0
    }

    /// The slit segment L.
    pub fn slit(&self) -> Segment {
        let q = self.r_side / 4.0;
        Segment::slit(
            [self.r_center[0] - q, self.r_center[1]],
            [self.r_center[0] + q, self.r_center[1]],
        )
    }

    /// Corners of the reference square R (CCW).
    pub fn r_corners(&self) -> [[f64; 2]; 4] {
        let half = self.r_side / 2.0;
        let [cx, cy] = self.r_center;
        [
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    }

    /// Distance from the slit to the boundary of R (tips to the near sides).
    pub fn slit_to_r_distance(&self) -> f64 {
        self.r_side / 4.0
    }
}

/// Descriptor of a buildable open set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    /// Unit square (0,1)².
    Square,
    /// Unit interval (0,1), one-dimensional.
    Interval,
    /// Regular polygon approximation of the disk of radius 1/2 about (1/2,1/2).
    Disk { sides: u32 },
    /// Unit square minus the central horizontal slit [3/8,5/8]×{1/2}.
    SquareMinusSlit,
    /// Koch prefractal snowflake (side 27/32, centered in the unit square).
    Koch { level: u32 },
    /// Koch prefractal minus an interior slit.
    KochMinusSlit(SlitSnowflakeSpec),
    /// Explicit occupancy mask; boundary is the rectilinear cell-edge contour.
    CellMask,
}

impl DomainSpec {
    pub fn disk() -> Self {
        DomainSpec::Disk { sides: 24 }
    }

    pub fn koch_minus_slit(level: u32) -> Self {
        DomainSpec::KochMinusSlit(SlitSnowflakeSpec::standard(level))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Square => "square",
            DomainSpec::Interval => "interval",
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::SquareMinusSlit => "square_minus_slit",
            DomainSpec::Koch { .. } => "koch",
            DomainSpec::KochMinusSlit(_) => "koch_minus_slit",
            DomainSpec::CellMask => "cell_mask",
        }
    }

    /// Coarsest admissible grid step for this descriptor.
    pub fn min_admissible_step(&self) -> Result<DyadicStep, DomainError> {
        let exp = match self {
            DomainSpec::Square | DomainSpec::Interval => 1,
            // Shortest polygon edge must span at least 4 cells.
            DomainSpec::Disk { sides } => {
                if *sides < 8 {
                    return Err(DomainError::BadSpec("disk needs at least 8 sides".into()));
                }
                let edge = (std::f64::consts::PI / *sides as f64).sin();
                min_exp_for(edge / 4.0)
            }
            // Slit endpoints at multiples of 1/16 and slit length 1/4 resolved by 4 cells.
            DomainSpec::SquareMinusSlit => 4,
            DomainSpec::Koch { level } => koch_min_exp(*level)?,
            DomainSpec::KochMinusSlit(spec) => {
                // Slit endpoints are multiples of 1/64 in the standard layout.
                koch_min_exp(spec.level)?.max(6)
            }
            DomainSpec::CellMask => 0,
        };
        Ok(DyadicStep::from_exp(exp))
    }
}

fn koch_min_exp(level: u32) -> Result<i32, DomainError> {
    if !(1..=7).contains(&level) {
        return Err(DomainError::BadSpec(format!("koch level must be in 1..=7, got {level}")));
    }
    let side = 27.0 / 32.0;
    let edge = side / 3f64.powi(level as i32 - 1);
    Ok(min_exp_for(edge / 4.0))
}

/// Smallest k with 2^{-k} ≤ v.
fn min_exp_for(v: f64) -> i32 {
    let mut exp = 0;
    while 2f64.powi(-exp) > v {
        exp += 1;
    }
    exp
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("grid step {given} too coarse for {spec}; minimal admissible step is {min}")]
    TooCoarse { spec: String, given: String, min: String },
    #[error("invalid domain descriptor: {0}")]
    BadSpec(String),
    #[error("domain mask is empty")]
    EmptyMask,
}

/// Exact per-cell distance to the boundary, in domain units.
#[derive(Debug, Clone)]
pub struct DistField {
    values: Vec<f64>,
}

impl DistField {
    #[inline]
    pub fn value(&self, cell: u32) -> f64 {
        self.values[cell as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Bounded open set discretized as an occupancy mask on a uniform grid.
///
/// A cell `(col,row)` covers `[origin + (col,row)·h, origin + (col+1,row+1)·h)`
/// and is occupied exactly when its center is interior to the described open
/// set. Grid functions live on the occupied cells in row-major order.
#[derive(Debug)]
pub struct GridDomain {
    pub n: u8,
    pub h: DyadicStep,
    /// Lattice anchor: bounding-box minimum corner in units of h.
    pub origin: [i64; 2],
    pub ncols: usize,
    pub nrows: usize,
    mask: Vec<bool>,
    cells: Vec<[u32; 2]>,
    index: Vec<Option<u32>>,
    boundary: Vec<Segment>,
    spec: DomainSpec,
    hash: String,
}

impl GridDomain {
    /// Build the grid realization of a descriptor at step `h`.
    pub fn build(spec: &DomainSpec, h: DyadicStep) -> Result<Arc<GridDomain>, DomainError> {
        let min = spec.min_admissible_step()?;
        if h.exp() < min.exp() {
            return Err(DomainError::TooCoarse {
                spec: spec.kind_name().into(),
                given: h.to_string(),
                min: min.to_string(),
            });
        }
        let cells_per_side = 1usize << h.exp().max(0);
        let hv = h.value();
        match spec {
            DomainSpec::Interval => {
                let mask = vec![true; cells_per_side];
                let boundary = vec![Segment::point(0.0, 0.0), Segment::point(1.0, 0.0)];
                Self::assemble(1, h, [0, 0], cells_per_side, 1, mask, boundary, spec.clone())
            }
            DomainSpec::Square => {
                let poly = unit_square_polygon();
                let mask = vec![true; cells_per_side * cells_per_side];
                Self::assemble(
                    2,
                    h,
                    [0, 0],
                    cells_per_side,
                    cells_per_side,
                    mask,
                    poly.segments(),
                    spec.clone(),
                )
            }
            DomainSpec::SquareMinusSlit => {
                let poly = unit_square_polygon();
                let mut boundary = poly.segments();
                boundary.push(Segment::slit([3.0 / 8.0, 0.5], [5.0 / 8.0, 0.5]));
                let mask = vec![true; cells_per_side * cells_per_side];
                Self::assemble(
                    2,
                    h,
                    [0, 0],
                    cells_per_side,
                    cells_per_side,
                    mask,
                    boundary,
                    spec.clone(),
                )
            }
            DomainSpec::Disk { sides } => {
                let poly = disk_polygon(*sides);
                let mask = rasterize(&poly, cells_per_side, hv);
                Self::assemble(
                    2,
                    h,
                    [0, 0],
                    cells_per_side,
                    cells_per_side,
                    mask,
                    poly.segments(),
                    spec.clone(),
                )
            }
            DomainSpec::Koch { level } => {
                let poly = koch_polygon([0.5, 0.5], 27.0 / 32.0, *level);
                let mask = rasterize(&poly, cells_per_side, hv);
                Self::assemble(
                    2,
                    h,
                    [0, 0],
                    cells_per_side,
                    cells_per_side,
                    mask,
                    poly.segments(),
                    spec.clone(),
                )
            }
            DomainSpec::KochMinusSlit(sspec) => {
                let poly = koch_polygon([0.5, 0.5], 27.0 / 32.0, sspec.level);
                validate_slit_spec(sspec, &poly)?;
                let mask = rasterize(&poly, cells_per_side, hv);
                let mut boundary = poly.segments();
                boundary.push(sspec.slit());
                Self::assemble(
                    2,
                    h,
                    [0, 0],
                    cells_per_side,
                    cells_per_side,
                    mask,
                    boundary,
                    spec.clone(),
                )
            }
            DomainSpec::CellMask => Err(DomainError::BadSpec(
                "cell_mask domains are constructed with GridDomain::from_mask".into(),
            )),
        }
    }

    /// Build a domain from an explicit mask; the boundary is the rectilinear
    /// contour of the occupied cells, so the open set is the interior of their
    /// union.
    pub fn from_mask(
        h: DyadicStep,
        n: u8,
        origin: [i64; 2],
        ncols: usize,
        nrows: usize,
        mask: Vec<bool>,
    ) -> Result<Arc<GridDomain>, DomainError> {
        assert_eq!(mask.len(), ncols * nrows);
        let boundary = mask_contour(&mask, ncols, nrows, origin, h.value(), n);
        Self::assemble(n, h, origin, ncols, nrows, mask, boundary, DomainSpec::CellMask)
    }

    /// Assemble a domain from explicit parts (used by the file loader).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n: u8,
        h: DyadicStep,
        origin: [i64; 2],
        ncols: usize,
        nrows: usize,
        mask: Vec<bool>,
        boundary: Vec<Segment>,
        spec: DomainSpec,
    ) -> Result<Arc<GridDomain>, DomainError> {
        Self::assemble(n, h, origin, ncols, nrows, mask, boundary, spec)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        n: u8,
        h: DyadicStep,
        origin: [i64; 2],
        ncols: usize,
        nrows: usize,
        mask: Vec<bool>,
        boundary: Vec<Segment>,
        spec: DomainSpec,
    ) -> Result<Arc<GridDomain>, DomainError> {
        let mut cells = Vec::new();
        let mut index = vec![None; ncols * nrows];
        for row in 0..nrows {
            for col in 0..ncols {
                if mask[row * ncols + col] {
                    index[row * ncols + col] = Some(cells.len() as u32);
                    cells.push([col as u32, row as u32]);
                }
            }
        }
        if cells.is_empty() {
            return Err(DomainError::EmptyMask);
        }
        let mut dom = GridDomain {
            n,
            h,
            origin,
            ncols,
            nrows,
            mask,
            cells,
            index,
            boundary,
            spec,
            hash: String::new(),
        };
        dom.hash = dom.compute_hash();
        Ok(Arc::new(dom))
    }

    /// Coordinate-scaled copy: all lengths multiplied by 2^k, same mask.
    pub fn scaled(&self, k: i32) -> Arc<GridDomain> {
        let f = 2f64.powi(k);
        let boundary = self
            .boundary
            .iter()
            .map(|s| Segment {
                a: [s.a[0] * f, s.a[1] * f],
                b: [s.b[0] * f, s.b[1] * f],
                outward: s.outward,
                kind: s.kind,
            })
            .collect();
        let mut dom = GridDomain {
            n: self.n,
            h: self.h.scaled(k),
            origin: self.origin,
            ncols: self.ncols,
            nrows: self.nrows,
            mask: self.mask.clone(),
            cells: self.cells.clone(),
            index: self.index.clone(),
            boundary,
            spec: self.spec.clone(),
            hash: String::new(),
        };
        dom.hash = dom.compute_hash();
        Arc::new(dom)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn boundary(&self) -> &[Segment] {
        &self.boundary
    }

    /// Occupied cells as (col,row) pairs in row-major order.
    pub fn cells(&self) -> &[[u32; 2]] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_occupied(&self, col: i64, row: i64) -> bool {
        if col < 0 || row < 0 || col as usize >= self.ncols || row as usize >= self.nrows {
            return false;
        }
        self.mask[row as usize * self.ncols + col as usize]
    }

    /// Occupied-cell index of a grid position, if occupied.
    #[inline]
    pub fn cell_index(&self, col: i64, row: i64) -> Option<u32> {
        if col < 0 || row < 0 || col as usize >= self.ncols || row as usize >= self.nrows {
            return None;
        }
        self.index[row as usize * self.ncols + col as usize]
    }

    /// Center of an occupied cell in domain coordinates.
    #[inline]
    pub fn cell_center(&self, cell: u32) -> [f64; 2] {
        let [col, row] = self.cells[cell as usize];
        let hv = self.h.value();
        let x = (self.origin[0] as f64 + col as f64 + 0.5) * hv;
        let y = if self.n == 1 {
            0.0
        } else {
            (self.origin[1] as f64 + row as f64 + 0.5) * hv
        };
        [x, y]
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.h.value().powi(self.n as i32)
    }

    /// Domain diameter estimate from the bounding box.
    pub fn bbox_diameter(&self) -> f64 {
        let hv = self.h.value();
        let w = self.ncols as f64 * hv;
        let t = self.nrows as f64 * hv;
        if self.n == 1 {
            w
        } else {
            (w * w + t * t).sqrt()
        }
    }

    /// Exact distance from every occupied cell center to the boundary.
    pub fn distance_field(&self) -> DistField {
        let values: Vec<f64> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(i, _)| {
                let c = self.cell_center(i as u32);
                self.boundary
                    .iter()
                    .map(|s| point_segment_distance(c, s))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        DistField { values }
    }

    /// Content hash of the discrete geometry.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update([self.n]);
        hasher.update(self.h.to_string().as_bytes());
        hasher.update(self.origin[0].to_le_bytes());
        hasher.update(self.origin[1].to_le_bytes());
        hasher.update((self.ncols as u64).to_le_bytes());
        hasher.update((self.nrows as u64).to_le_bytes());
        for run in self.mask_rle() {
            hasher.update(run.0.to_le_bytes());
            hasher.update(run.1.to_le_bytes());
        }
        for seg in &self.boundary {
            for v in [seg.a[0], seg.a[1], seg.b[0], seg.b[1]] {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Run-length encoding of the mask as (flat start, length) pairs of
    /// occupied runs, row-major.
    pub fn mask_rle(&self) -> Vec<(u64, u64)> {
        let mut runs = Vec::new();
        let mut i = 0usize;
        let len = self.mask.len();
        while i < len {
            if self.mask[i] {
                let start = i;
                while i < len && self.mask[i] && (i == start || !i.is_multiple_of(self.ncols)) {
                    i += 1;
                }
                runs.push((start as u64, (i - start) as u64));
            } else {
                i += 1;
            }
        }
        runs
    }
}

fn unit_square_polygon() -> Polygon {
    Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }
}

fn disk_polygon(sides: u32) -> Polygon {
    let vertices = (0..sides)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / sides as f64;
            [0.5 + 0.5 * t.cos(), 0.5 + 0.5 * t.sin()]
        })
        .collect();
    Polygon { vertices }
}

fn rasterize(poly: &Polygon, cells_per_side: usize, hv: f64) -> Vec<bool> {
    let mut mask = vec![false; cells_per_side * cells_per_side];
    mask.par_chunks_mut(cells_per_side).enumerate().for_each(|(row, chunk)| {
        let cy = (row as f64 + 0.5) * hv;
        for (col, m) in chunk.iter_mut().enumerate() {
            let cx = (col as f64 + 0.5) * hv;
            *m = poly.contains([cx, cy]);
        }
    });
    mask
}

fn validate_slit_spec(spec: &SlitSnowflakeSpec, poly: &Polygon) -> Result<(), DomainError> {
    // R strictly inside the prefractal polygon.
    let segs = poly.segments();
    for corner in spec.r_corners() {
        if !poly.contains(corner) {
            return Err(DomainError::BadSpec("reference square leaves the prefractal".into()));
        }
        let d = segs.iter().map(|s| point_segment_distance(corner, s)).fold(f64::INFINITY, f64::min);
        if d <= 0.0 {
            return Err(DomainError::BadSpec("reference square touches the prefractal".into()));
        }
    }
    // Collars compactly contained in R for every represented index.
    let gap = spec.slit_to_r_distance();
    for &m in &spec.ms {
        if spec.collar_radius(m) >= gap {
            return Err(DomainError::BadSpec(format!(
                "collar m={m} (radius {}) is not compactly contained in R (gap {gap})",
                spec.collar_radius(m)
            )));
        }
    }
    Ok(())
}

/// Rectilinear contour of an occupancy mask: one unit segment per cell edge
/// adjacent to the exterior, with outward normals. In one dimension the
/// contour degenerates to the endpoints of each occupied run.
fn mask_contour(
    mask: &[bool],
    ncols: usize,
    nrows: usize,
    origin: [i64; 2],
    hv: f64,
    n: u8,
) -> Vec<Segment> {
    let occupied = |c: i64, r: i64| -> bool {
        c >= 0 && r >= 0 && (c as usize) < ncols && (r as usize) < nrows
            && mask[r as usize * ncols + c as usize]
    };
    let mut segs = Vec::new();
    if n == 1 {
        for col in 0..=ncols {
            let left = occupied(col as i64 - 1, 0);
            let right = occupied(col as i64, 0);
            if left != right {
                segs.push(Segment::point((origin[0] + col as i64) as f64 * hv, 0.0));
            }
        }
        return segs;
    }
    let x = |c: i64| (origin[0] + c) as f64 * hv;
    let y = |r: i64| (origin[1] + r) as f64 * hv;
    for row in 0..nrows as i64 {
        for col in 0..ncols as i64 {
            if !occupied(col, row) {
                continue;
            }
            if !occupied(col, row - 1) {
                segs.push(Segment {
                    a: [x(col), y(row)],
                    b: [x(col + 1), y(row)],
                    outward: [0.0, -1.0],
                    kind: SegmentKind::Outer,
                });
            }
            if !occupied(col, row + 1) {
                segs.push(Segment {
                    a: [x(col + 1), y(row + 1)],
                    b: [x(col), y(row + 1)],
                    outward: [0.0, 1.0],
                    kind: SegmentKind::Outer,
                });
            }
            if !occupied(col - 1, row) {
                segs.push(Segment {
                    a: [x(col), y(row + 1)],
                    b: [x(col), y(row)],
                    outward: [-1.0, 0.0],
                    kind: SegmentKind::Outer,
                });
            }
            if !occupied(col + 1, row) {
                segs.push(Segment {
                    a: [x(col + 1), y(row)],
                    b: [x(col + 1), y(row + 1)],
                    outward: [1.0, 0.0],
                    kind: SegmentKind::Outer,
                });
            }
        }
    }
    segs
}

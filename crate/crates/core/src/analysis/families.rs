//! Compact-set families for the capacitary diagnostics.

use crate::capacity::{CapacityError, CompactCellSet};
use crate::energy::GridFunction;
use crate::geometry::{CubeFlag, DistField, GridDomain, SlitSnowflakeSpec, WhitneyDecomposition};
use std::sync::Arc;

/// A labeled compact set, optionally with an admissible candidate function
/// (≥ 1 on the set) whose energy caps the capacity value used in ratios.
pub struct CompactProbe {
    pub label: String,
    pub set: CompactCellSet,
    pub candidate: Option<GridFunction>,
}

/// Unions of non-flagged Whitney cubes up to each listed generation.
pub fn whitney_union_family(
    whitney: &WhitneyDecomposition,
    dist: &DistField,
    generations: &[u32],
) -> Result<Vec<CompactProbe>, CapacityError> {
    let domain = whitney.domain().clone();
    let mut out = Vec::new();
    for &g in generations {
        let mut cells = Vec::new();
        for wc in &whitney.cubes {
            if wc.flag == CubeFlag::Interior && wc.cube.gen <= g {
                cells.extend(whitney.cube_cells(&wc.cube));
            }
        }
        if cells.is_empty() {
            continue;
        }
        let set = CompactCellSet::new(domain.clone(), cells, dist)?;
        out.push(CompactProbe { label: format!("whitney_gen_le_{g}"), set, candidate: None });
    }
    Ok(out)
}

/// Superlevel sets of the distance field: `{dist ≥ f·max dist}` for each
/// fraction; concentric squares on the square, concentric disks on the disk.
pub fn concentric_family(
    domain: &Arc<GridDomain>,
    dist: &DistField,
    fractions: &[f64],
) -> Result<Vec<CompactProbe>, CapacityError> {
    let dmax = dist.values().iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for &f in fractions {
        let cells: Vec<u32> = (0..domain.cell_count() as u32)
            .filter(|&i| dist.value(i) >= f * dmax)
            .collect();
        if cells.is_empty() {
            continue;
        }
        let set = CompactCellSet::new(domain.clone(), cells, dist)?;
        out.push(CompactProbe { label: format!("dist_ge_{f:.3}max"), set, candidate: None });
    }
    Ok(out)
}

/// Level compacta of a probe function: for every nonempty annulus A_{k+1},
/// the set Ā_{k+1} paired with the admissible truncation u_k.
pub fn level_family(
    label: &str,
    u: &GridFunction,
    dist: &DistField,
) -> Result<Vec<CompactProbe>, CapacityError> {
    let dec = super::level_truncation(u);
    let mut out = Vec::new();
    for &(kk, ref cells) in &dec.annuli {
        let set = CompactCellSet::new(u.domain().clone(), cells.clone(), dist)?;
        out.push(CompactProbe {
            label: format!("{label}_level_{kk}"),
            set,
            candidate: Some(dec.truncation(kk - 1)),
        });
    }
    Ok(out)
}

/// Indices of the non-flagged Whitney cubes contained in the reference square
/// R with diam(Q) ≥ the m-th threshold of the slit construction.
pub fn slit_whitney_cubes(
    whitney: &WhitneyDecomposition,
    spec: &SlitSnowflakeSpec,
    m: u32,
) -> Vec<usize> {
    let corners = spec.r_corners();
    let tau = spec.cube_diam_threshold(m);
    whitney
        .cubes_within_rect(corners[0], corners[2])
        .into_iter()
        .filter(|&i| {
            let wc = &whitney.cubes[i];
            wc.flag == CubeFlag::Interior && whitney.diam(&wc.cube) >= tau
        })
        .collect()
}

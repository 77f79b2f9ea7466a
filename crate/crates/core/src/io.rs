//! File formats: domains, Whitney decompositions, grid functions, energies.

use crate::energy::{Bracket, GridFunction};
use crate::geometry::{
    CubeFlag, DomainError, DomainSpec, GridDomain, Segment, SegmentKind, WhitneyDecomposition,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Domain files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct DomainFile {
    /// Grid step as a dyadic rational string, e.g. "1/64".
    pub h: String,
    pub origin: [i64; 2],
    pub shape: [usize; 2],
    /// Row-major occupied runs as (flat start, length); runs never cross rows.
    pub mask_rle: Vec<(u64, u64)>,
    /// Segments as [x0, y0, x1, y1].
    pub boundary: Vec<[f64; 4]>,
    pub flags: DomainFlags,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DomainFlags {
    pub kind: String,
    pub n: u8,
    /// Indices into `boundary` that are interior slits.
    pub slit_indices: Vec<usize>,
    pub hash: String,
}

pub fn domain_to_file(domain: &GridDomain) -> DomainFile {
    let boundary: Vec<[f64; 4]> =
        domain.boundary().iter().map(|s| [s.a[0], s.a[1], s.b[0], s.b[1]]).collect();
    let slit_indices = domain
        .boundary()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SegmentKind::Slit)
        .map(|(i, _)| i)
        .collect();
    DomainFile {
        h: domain.h.to_string(),
        origin: domain.origin,
        shape: [domain.ncols, domain.nrows],
        mask_rle: domain.mask_rle(),
        boundary,
        flags: DomainFlags {
            kind: domain.spec().kind_name().to_string(),
            n: domain.n,
            slit_indices,
            hash: domain.hash().to_string(),
        },
    }
}

pub fn domain_from_file(file: &DomainFile) -> Result<Arc<GridDomain>, DomainError> {
    let h = file
        .h
        .parse()
        .map_err(|e| DomainError::BadSpec(format!("{e}")))?;
    let [ncols, nrows] = file.shape;
    let mut mask = vec![false; ncols * nrows];
    for &(start, len) in &file.mask_rle {
        for i in start..start + len {
            mask[i as usize] = true;
        }
    }
    let boundary = file
        .boundary
        .iter()
        .enumerate()
        .map(|(i, &[x0, y0, x1, y1])| {
            if file.flags.slit_indices.contains(&i) {
                Segment::slit([x0, y0], [x1, y1])
            } else if x0 == x1 && y0 == y1 {
                Segment::point(x0, y0)
            } else {
                let dx = x1 - x0;
                let dy = y1 - y0;
                let len = (dx * dx + dy * dy).sqrt();
                Segment {
                    a: [x0, y0],
                    b: [x1, y1],
                    outward: [dy / len, -dx / len],
                    kind: SegmentKind::Outer,
                }
            }
        })
        .collect();
    GridDomain::from_parts(
        file.flags.n,
        h,
        file.origin,
        ncols,
        nrows,
        mask,
        boundary,
        DomainSpec::CellMask,
    )
}

// ---------------------------------------------------------------------------
// Whitney files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct WhitneyRecord {
    pub k: u32,
    pub corner: [i64; 2],
    pub dist: f64,
    pub flag: String,
}

pub fn whitney_to_records(dec: &WhitneyDecomposition) -> Vec<WhitneyRecord> {
    dec.cubes
        .iter()
        .map(|wc| WhitneyRecord {
            k: wc.cube.gen,
            corner: wc.cube.corner,
            dist: wc.dist,
            flag: match wc.flag {
                CubeFlag::Interior => "interior".to_string(),
                CubeFlag::BoundaryTruncated => "boundary-truncated".to_string(),
            },
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Grid functions and energies
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct FunctionFile {
    pub domain_hash: String,
    /// Values in row-major occupied-cell order.
    pub values: Vec<f64>,
}

pub fn function_to_file(u: &GridFunction) -> FunctionFile {
    FunctionFile { domain_hash: u.domain().hash().to_string(), values: u.values().to_vec() }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("function was saved for domain {saved}, not {actual}")]
    DomainMismatch { saved: String, actual: String },
}

pub fn function_from_file(
    file: &FunctionFile,
    domain: &Arc<GridDomain>,
) -> Result<GridFunction, IoError> {
    if file.domain_hash != domain.hash() {
        return Err(IoError::DomainMismatch {
            saved: file.domain_hash.clone(),
            actual: domain.hash().to_string(),
        });
    }
    Ok(GridFunction::new(domain.clone(), file.values.clone()))
}

/// Energy value record: `bracket` is null for exactly-summed quantities.
#[derive(Debug, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub value: f64,
    pub bracket: Option<[f64; 2]>,
    pub p: f64,
    pub s: f64,
}

impl EnergyRecord {
    pub fn exact(value: f64, p: f64, s: f64) -> Self {
        Self { value, bracket: None, p, s }
    }

    pub fn bracketed(b: Bracket, p: f64, s: f64) -> Self {
        Self { value: b.midpoint(), bracket: Some([b.lo, b.hi]), p, s }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub value: f64,
    pub gap: f64,
    pub status: String,
    pub iterations: usize,
    pub witness_ref: Option<String>,
}

impl CapacityRecord {
    pub fn from_result(r: &crate::capacity::CapacityResult, witness_ref: Option<String>) -> Self {
        Self {
            value: r.value,
            gap: r.gap,
            status: match r.status {
                crate::capacity::SolveStatus::Converged => "converged".into(),
                crate::capacity::SolveStatus::MaxIter => "max-iter".into(),
            },
            iterations: r.iterations,
            witness_ref,
        }
    }
}

/// Minimal CSV writer for plot-ready exports (numeric fields and plain ids,
/// no quoting).
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DyadicStep;

    #[test]
    fn domain_round_trip_preserves_geometry() {
        let h: DyadicStep = "1/32".parse().unwrap();
        for spec in [DomainSpec::disk(), DomainSpec::SquareMinusSlit] {
            let dom = GridDomain::build(&spec, h).unwrap();
            let file = domain_to_file(&dom);
            let text = serde_json::to_string(&file).unwrap();
            let parsed: DomainFile = serde_json::from_str(&text).unwrap();
            let back = domain_from_file(&parsed).unwrap();
            assert_eq!(back.cell_count(), dom.cell_count());
            assert_eq!(back.boundary().len(), dom.boundary().len());
            let d0 = dom.distance_field();
            let d1 = back.distance_field();
            for i in 0..dom.cell_count() as u32 {
                assert_eq!(d0.value(i), d1.value(i));
            }
        }
    }

    #[test]
    fn function_file_checks_domain_hash() {
        let h: DyadicStep = "1/8".parse().unwrap();
        let dom = GridDomain::build(&DomainSpec::Square, h).unwrap();
        let other = GridDomain::build(&DomainSpec::Square, "1/16".parse().unwrap()).unwrap();
        let u = GridFunction::constant(dom.clone(), 1.0);
        let file = function_to_file(&u);
        assert!(function_from_file(&file, &dom).is_ok());
        assert!(function_from_file(&file, &other).is_err());
    }
}

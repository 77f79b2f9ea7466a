//! Test functions for the slit-snowflake construction: u_m = v - w_m.

use super::CapacityError;
use crate::energy::GridFunction;
use crate::geometry::{
    point_segment_distance, segment_segment_distance, GridDomain, Segment, SegmentKind,
    SlitSnowflakeSpec,
};
use std::sync::Arc;

/// The function u_m together with its building blocks.
pub struct SlitTestFunction {
    pub m: u32,
    pub func: GridFunction,
    pub v: GridFunction,
    pub w: GridFunction,
    /// Lipschitz constant of the w_m ramp: 1/(r_m - r_{2m}) = 4m/collar_scale.
    pub w_slope: f64,
}

/// Build u_m = v - w_m on a slit-snowflake domain.
///
/// `v` ramps from 1 on the closed reference square R to 0 at distance
/// dist(R,∂G')/2; `w_m` ramps from 1 on the collar L_{2m} to 0 outside L_m.
/// By construction u_m = 1 exactly on R \ L_m and 0 on L_{2m}, which is
/// asserted cell by cell.
pub fn slit_test_family(
    domain: &Arc<GridDomain>,
    spec: &SlitSnowflakeSpec,
    m: u32,
) -> Result<SlitTestFunction, CapacityError> {
    let hv = domain.h.value();
    let r_outer = spec.collar_radius(m);
    let r_inner = spec.collar_radius(2 * m);
    // The inner plateau must reach the cell centers straddling the slit.
    if r_inner < hv / 2.0 {
        return Err(CapacityError::SlitTooCoarse { m, radius: r_inner, min: hv / 2.0 });
    }

    let slit = spec.slit();
    let corners = spec.r_corners();
    let (rx0, ry0) = (corners[0][0], corners[0][1]);
    let (rx1, ry1) = (corners[2][0], corners[2][1]);

    // Ramp width of v: half the gap between R and the outer boundary.
    let r_edges: Vec<Segment> = (0..4)
        .map(|i| Segment {
            a: corners[i],
            b: corners[(i + 1) % 4],
            outward: [0.0, 0.0],
            kind: SegmentKind::Outer,
        })
        .collect();
    let gap = domain
        .boundary()
        .iter()
        .filter(|s| s.kind == SegmentKind::Outer)
        .flat_map(|s| r_edges.iter().map(move |e| segment_segment_distance(e, s)))
        .fold(f64::INFINITY, f64::min);
    let v_width = gap / 2.0;

    let dist_to_r = |p: [f64; 2]| -> f64 {
        let dx = (rx0 - p[0]).max(p[0] - rx1).max(0.0);
        let dy = (ry0 - p[1]).max(p[1] - ry1).max(0.0);
        (dx * dx + dy * dy).sqrt()
    };

    let n = domain.cell_count();
    let mut v_vals = vec![0.0; n];
    let mut w_vals = vec![0.0; n];
    let mut u_vals = vec![0.0; n];
    for i in 0..n as u32 {
        let c = domain.cell_center(i);
        let v = (1.0 - dist_to_r(c) / v_width).clamp(0.0, 1.0);
        let d = point_segment_distance(c, &slit);
        let w = ((r_outer - d) / (r_outer - r_inner)).clamp(0.0, 1.0);
        v_vals[i as usize] = v;
        w_vals[i as usize] = w;
        u_vals[i as usize] = v - w;
        // In R and clear of the collar: exactly 1. On the inner collar: 0.
        let in_r = c[0] >= rx0 && c[0] <= rx1 && c[1] >= ry0 && c[1] <= ry1;
        if in_r && d >= r_outer {
            assert!(v - w >= 1.0 - 1e-12, "u_m must be ≥ 1 on R \\ L_m");
        }
        if d <= r_inner {
            assert!((v - w).abs() <= 1e-12, "u_m must vanish on L_2m");
        }
    }
    Ok(SlitTestFunction {
        m,
        func: GridFunction::new(domain.clone(), u_vals),
        v: GridFunction::new(domain.clone(), v_vals),
        w: GridFunction::new(domain.clone(), w_vals),
        w_slope: 1.0 / (r_outer - r_inner),
    })
}

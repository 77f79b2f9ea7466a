//! Segments, polygons and the Koch prefractal construction.

use serde::{Deserialize, Serialize};

/// Role of a boundary segment.
///
/// `Slit` segments are interior cuts of measure zero: they count for
/// distances but bound no area, so flux-type boundary integrals skip them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Outer,
    Slit,
}

/// Oriented boundary segment with outward unit normal.
///
/// Degenerate segments (`a == b`) are point obstacles, used for the
/// endpoints of one-dimensional domains.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub outward: [f64; 2],
    pub kind: SegmentKind,
}

impl Segment {
    pub fn point(x: f64, y: f64) -> Self {
        Self { a: [x, y], b: [x, y], outward: [0.0, 0.0], kind: SegmentKind::Outer }
    }

    pub fn slit(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b, outward: [0.0, 0.0], kind: SegmentKind::Slit }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        let dx = self.b[0] - self.a[0];
        let dy = self.b[1] - self.a[1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Euclidean distance from a point to a (possibly degenerate) segment.
#[inline]
pub fn point_segment_distance(p: [f64; 2], seg: &Segment) -> f64 {
    let dx = seg.b[0] - seg.a[0];
    let dy = seg.b[1] - seg.a[1];
    let px = p[0] - seg.a[0];
    let py = p[1] - seg.a[1];
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { ((px * dx + py * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let ex = px - t * dx;
    let ey = py - t * dy;
    (ex * ex + ey * ey).sqrt()
}

/// Euclidean distance between two segments (0 when they intersect).
pub fn segment_segment_distance(s: &Segment, t: &Segment) -> f64 {
    let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0], p[1] - q[1]);
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let r = d(s.b, s.a);
    let q = d(t.b, t.a);
    let sq = cross(r, q);
    if sq != 0.0 {
        let w = d(t.a, s.a);
        let u = cross(w, q) / sq;
        let v = cross(w, r) / sq;
        if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
            return 0.0;
        }
    }
    point_segment_distance(s.a, t)
        .min(point_segment_distance(s.b, t))
        .min(point_segment_distance(t.a, s))
        .min(point_segment_distance(t.b, s))
}

/// Closed CCW polygon; `vertices[i] -> vertices[i+1]` are the edges.
#[derive(Debug, Clone)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    /// Edges as oriented segments with outward normals (interior on the left).
    pub fn segments(&self) -> Vec<Segment> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let dx = b[0] - a[0];
                let dy = b[1] - a[1];
                let len = (dx * dx + dy * dy).sqrt();
                Segment { a, b, outward: [dy / len, -dx / len], kind: SegmentKind::Outer }
            })
            .collect()
    }

    /// Even-odd crossing test; intended for query points off the boundary.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi[1] > p[1]) != (vj[1] > p[1]) {
                let x_cross = vj[0] + (p[1] - vj[1]) / (vi[1] - vj[1]) * (vi[0] - vj[0]);
                if p[0] < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

/// Signed area by the shoelace formula (positive for CCW).
pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut acc = crate::sum::Accumulator::new();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc.add(a[0] * b[1] - b[0] * a[1]);
    }
    acc.value() / 2.0
}

/// Koch prefractal polygon of the given generation.
///
/// Generation 1 is the equilateral triangle of side `side` with centroid
/// `center`, oriented CCW; each further generation replaces every edge by
/// the four-segment outward bump. Generation `g` has `3·4^{g-1}` edges of
/// length `side/3^{g-1}`.
pub fn koch_polygon(center: [f64; 2], side: f64, generation: u32) -> Polygon {
    assert!(generation >= 1, "generation is 1-based");
    let circum = side / 3f64.sqrt();
    let apothem = circum / 2.0;
    let mut vertices = vec![
        [center[0] - side / 2.0, center[1] - apothem],
        [center[0] + side / 2.0, center[1] - apothem],
        [center[0], center[1] + circum],
    ];
    let bump = 3f64.sqrt() / 6.0;
    for _ in 1..generation {
        let mut next = Vec::with_capacity(vertices.len() * 4);
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            // Outward bump: rotate the edge direction by -90° (interior is left).
            let apex = [a[0] + dx / 2.0 + dy * bump, a[1] + dy / 2.0 - dx * bump];
            next.push(a);
            next.push([a[0] + dx / 3.0, a[1] + dy / 3.0]);
            next.push(apex);
            next.push([a[0] + 2.0 * dx / 3.0, a[1] + 2.0 * dy / 3.0]);
        }
        vertices = next;
    }
    Polygon { vertices }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_segment_distance_cases() {
        let seg = Segment {
            a: [0.0, 0.0],
            b: [1.0, 0.0],
            outward: [0.0, -1.0],
            kind: SegmentKind::Outer,
        };
        assert_eq!(point_segment_distance([0.5, 0.5], &seg), 0.5);
        assert_eq!(point_segment_distance([2.0, 0.0], &seg), 1.0);
        assert_eq!(point_segment_distance([-3.0, 4.0], &seg), 5.0);
        let pt = Segment::point(1.0, 0.0);
        assert_eq!(point_segment_distance([0.0, 0.0], &pt), 1.0);
    }

    #[test]
    fn koch_polygon_counts_and_area() {
        let side = 27.0 / 32.0;
        for (generation, edges) in [(1u32, 3usize), (2, 12), (3, 48), (4, 192)] {
            let poly = koch_polygon([0.5, 0.5], side, generation);
            assert_eq!(poly.vertices.len(), edges);
        }
        // Snowflake area: A_g = (√3/4)s²·(1 + (1/3)·Σ_{k=0}^{g-2} (4/9)^k).
        let tri = 3f64.sqrt() / 4.0 * side * side;
        let mut extra = 0.0;
        for k in 0..3 {
            extra += (4f64 / 9.0).powi(k);
        }
        let expected = tri * (1.0 + extra / 3.0);
        let got = polygon_area(&koch_polygon([0.5, 0.5], side, 4).vertices);
        assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn koch_contains_centroid_not_outside() {
        let poly = koch_polygon([0.5, 0.5], 27.0 / 32.0, 3);
        assert!(poly.contains([0.5, 0.5]));
        assert!(!poly.contains([0.001, 0.001]));
        assert!(!poly.contains([0.5, 0.999]));
    }
}

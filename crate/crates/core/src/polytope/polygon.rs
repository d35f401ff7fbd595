//! Convex polygons on the PQ-plane.

use serde::{Deserialize, Serialize};

use super::{LinearSystem, COEF_TOL};
use crate::error::{Error, Result};

/// Vertices closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-7;
/// Slack when clipping lines against rows of a 2D system.
const CLIP_TOL: f64 = 1e-9;
/// Below this area a reference region counts as degenerate.
const AREA_EPS: f64 = 1e-14;

/// Convex polygon, vertices counter-clockwise starting from the lowest
/// (then leftmost) vertex. One or two vertices encode a point or a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2D {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon2D {
    /// Convex hull of `points`; see [`convex_hull`].
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        convex_hull(points)
    }

    pub fn point(p: [f64; 2]) -> Self {
        Polygon2D { vertices: vec![p] }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Point or segment.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    pub fn translate(&self, d: [f64; 2]) -> Self {
        Polygon2D { vertices: self.vertices.iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect() }
    }

    /// Applies `x ↦ M·x` and re-hulls (handles orientation flips and
    /// collapsing maps).
    pub fn map_linear(&self, m: [[f64; 2]; 2]) -> Self {
        let pts: Vec<[f64; 2]> = self
            .vertices
            .iter()
            .map(|v| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]])
            .collect();
        convex_hull(&pts).expect("image of a nonempty polygon is nonempty")
    }

    /// Distance from `p` to the polygon (0 inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let n = self.vertices.len();
        match n {
            0 => f64::INFINITY,
            1 => dist(p, self.vertices[0]),
            2 => segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => {
                if self.contains(p, 0.0) {
                    return 0.0;
                }
                (0..n)
                    .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Whether `p` lies inside or within `tol` of the polygon.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return self.distance(p) <= tol;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = dist(a, b);
            // signed distance to the left of edge a→b
            cross(sub(b, a), sub(p, a)) / len >= -tol
        })
    }

    /// Half-plane rows `n·x ≤ c` whose intersection is the polygon (only for
    /// polygons with at least three vertices).
    pub fn halfplanes(&self) -> Vec<([f64; 2], f64)> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let e = sub(b, a);
                let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                let normal = [e[1] / len, -e[0] / len];
                (normal, normal[0] * a[0] + normal[1] * a[1])
            })
            .collect()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Shoelace area (zero for degenerate polygons).
pub fn area(p: &Polygon2D) -> f64 {
    let n = p.vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = p.vertices[i];
        let b = p.vertices[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    (0.5 * s).abs()
}

/// Andrew's monotone chain. Collinear and near-duplicate points are dropped;
/// the result starts at the lowest-then-leftmost vertex.
pub fn convex_hull(points: &[[f64; 2]]) -> Result<Polygon2D> {
    let mut pts: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    if pts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut uniq: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        if uniq.last().is_none_or(|q| dist(*q, p) > DEDUP_TOL) {
            uniq.push(p);
        }
    }
    let scale = uniq.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let turn_eps = 1e-12 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * uniq.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(uniq.iter()) } else { Box::new(uniq.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(sub(b, a), sub(p, a)) <= turn_eps {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.is_empty() {
        hull.push(uniq[0]);
    }
    // Drop near-duplicates created at the seam (tiny hulls).
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(hull.len());
    for p in hull {
        if out.iter().all(|q| dist(*q, p) > DEDUP_TOL) {
            out.push(p);
        }
    }
    if out.len() == 2 && dist(out[0], out[1]) <= DEDUP_TOL {
        out.truncate(1);
    }
    Ok(canonical(out))
}

/// Rotates a CCW vertex list to start at the lowest-then-leftmost vertex.
fn canonical(mut v: Vec<[f64; 2]>) -> Polygon2D {
    if let Some(start) =
        (0..v.len()).min_by(|&i, &j| v[i][1].total_cmp(&v[j][1]).then(v[i][0].total_cmp(&v[j][0])))
    {
        v.rotate_left(start);
    }
    Polygon2D { vertices: v }
}

/// Vertex enumeration for a two-variable system: each row's boundary line is
/// clipped by all other rows; surviving segment endpoints are hulled.
pub fn polygon_from_system(sys: &LinearSystem) -> Result<Polygon2D> {
    if sys.nvars() != 2 {
        return Err(Error::DimensionMismatch(format!("polygon extraction needs 2 variables, got {}", sys.nvars())));
    }
    let rows: Vec<([f64; 2], f64)> = sys
        .a
        .iter()
        .zip(&sys.b)
        .filter_map(|(r, &b)| {
            let n = r[0].hypot(r[1]);
            if n <= COEF_TOL {
                None
            } else {
                Some(([r[0] / n, r[1] / n], b / n))
            }
        })
        .collect();
    for (r, &b) in sys.a.iter().zip(&sys.b) {
        if r[0].hypot(r[1]) <= COEF_TOL && b < -CLIP_TOL {
            return Err(Error::EmptyRegion);
        }
    }
    if sys.feasible_point().is_none() {
        return Err(Error::EmptyRegion);
    }
    if rows.len() < 2 {
        return Err(Error::UnboundedRegion);
    }
    let mut pts = Vec::new();
    for (i, &(a, b)) in rows.iter().enumerate() {
        let p0 = [a[0] * b, a[1] * b];
        let d = [-a[1], a[0]];
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut empty = false;
        for (j, &(c, e)) in rows.iter().enumerate() {
            if j == i {
                continue;
            }
            let rate = c[0] * d[0] + c[1] * d[1];
            let slack = e - (c[0] * p0[0] + c[1] * p0[1]);
            if rate.abs() <= 1e-13 {
                if slack < -CLIP_TOL {
                    empty = true;
                    break;
                }
            } else if rate > 0.0 {
                hi = hi.min(slack / rate);
            } else {
                lo = lo.max(slack / rate);
            }
        }
        if empty || lo > hi + CLIP_TOL {
            continue;
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::UnboundedRegion);
        }
        let (lo, hi) = if lo > hi { ((lo + hi) / 2.0, (lo + hi) / 2.0) } else { (lo, hi) };
        pts.push([p0[0] + lo * d[0], p0[1] + lo * d[1]]);
        pts.push([p0[0] + hi * d[0], p0[1] + hi * d[1]]);
    }
    if pts.is_empty() {
        // Feasible, yet no boundary line touches the region: it has no
        // bounding rows in some direction.
        return Err(Error::UnboundedRegion);
    }
    convex_hull(&pts)
}

/// Sutherland-Hodgman clip of `pa` by `pb`. Degenerate inputs are handled
/// by membership tests.
pub fn intersect(pa: &Polygon2D, pb: &Polygon2D) -> Result<Polygon2D> {
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if pa.is_degenerate() || pb.is_degenerate() {
        let (small, big) = if pa.len() <= pb.len() { (pa, pb) } else { (pb, pa) };
        return intersect_degenerate(small, big);
    }
    let mut out = pa.vertices.clone();
    let n = pb.vertices.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = pb.vertices[i];
        let b = pb.vertices[(i + 1) % n];
        let e = sub(b, a);
        let side = |p: [f64; 2]| cross(e, sub(p, a));
        let input = std::mem::take(&mut out);
        let m = input.len();
        for k in 0..m {
            let cur = input[k];
            let prev = input[(k + m - 1) % m];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(line_cross(prev, cur, sp, sc));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(line_cross(prev, cur, sp, sc));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion);
    }
    convex_hull(&out)
}

fn line_cross(p: [f64; 2], q: [f64; 2], sp: f64, sq: f64) -> [f64; 2] {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn intersect_degenerate(small: &Polygon2D, big: &Polygon2D) -> Result<Polygon2D> {
    let tol = DEDUP_TOL;
    if small.len() == 1 {
        return if big.contains(small.vertices[0], tol) { Ok(small.clone()) } else { Err(Error::EmptyRegion) };
    }
    // segment ∩ convex: clip the parameter interval
    let (a, b) = (small.vertices[0], small.vertices[1]);
    let d = sub(b, a);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if big.len() >= 3 {
        for (n, c) in big.halfplanes() {
            let rate = n[0] * d[0] + n[1] * d[1];
            let slack = c - (n[0] * a[0] + n[1] * a[1]);
            if rate.abs() <= 1e-15 {
                if slack < -tol {
                    return Err(Error::EmptyRegion);
                }
            } else if rate > 0.0 {
                hi = hi.min(slack / rate);
            } else {
                lo = lo.max(slack / rate);
            }
        }
        if lo > hi + 1e-12 {
            return Err(Error::EmptyRegion);
        }
        let pts = [[a[0] + lo * d[0], a[1] + lo * d[1]], [a[0] + hi * d[0], a[1] + hi * d[1]]];
        return convex_hull(&pts);
    }
    // two degenerate polygons: keep whichever vertices lie in the other
    let pts: Vec<[f64; 2]> = small
        .vertices
        .iter()
        .filter(|p| big.contains(**p, tol))
        .chain(big.vertices.iter().filter(|p| small.contains(**p, tol)))
        .copied()
        .collect();
    convex_hull(&pts)
}

/// Minkowski sum by merging edge vectors in angular order.
pub fn minkowski_sum(polys: &[Polygon2D]) -> Result<Polygon2D> {
    if polys.is_empty() || polys.iter().any(|p| p.is_empty()) {
        return Err(Error::EmptyRegion);
    }
    let mut start = [0.0, 0.0];
    let mut edges: Vec<[f64; 2]> = Vec::new();
    for p in polys {
        let c = canonical(p.vertices.clone());
        start[0] += c.vertices[0][0];
        start[1] += c.vertices[0][1];
        let n = c.vertices.len();
        if n < 2 {
            continue;
        }
        for i in 0..n {
            let e = sub(c.vertices[(i + 1) % n], c.vertices[i]);
            if e != [0.0, 0.0] {
                edges.push(e);
            }
        }
    }
    // Angular order on [0, 2π). A cross-product comparator is not transitive
    // for nearly parallel edges, so sort by a scalar key instead.
    let angle = |e: &[f64; 2]| {
        let a = e[1].atan2(e[0]);
        if a < 0.0 { a + std::f64::consts::TAU } else { a }
    };
    edges.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
    let mut pts = Vec::with_capacity(edges.len() + 1);
    let mut cur = start;
    pts.push(cur);
    for e in &edges {
        cur = [cur[0] + e[0], cur[1] + e[1]];
        pts.push(cur);
    }
    convex_hull(&pts)
}

/// One-sided Hausdorff distance `sup_{x∈a} d(x, b)`; attained at a vertex of
/// `a` since `d(·, b)` is convex.
pub fn directed_hausdorff(a: &Polygon2D, b: &Polygon2D) -> f64 {
    a.vertices.iter().map(|&v| b.distance(v)).fold(0.0, f64::max)
}

pub fn hausdorff(a: &Polygon2D, b: &Polygon2D) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn overlap_area(a: &Polygon2D, b: &Polygon2D) -> f64 {
    match intersect(a, b) {
        Ok(p) => area(&p),
        Err(_) => 0.0,
    }
}

/// `area(a ∩ a*) / area(a*)`, clamped to [0, 1].
pub fn fill_factor(a: &Polygon2D, a_star: &Polygon2D) -> Result<f64> {
    let ref_area = area(a_star);
    if ref_area <= AREA_EPS {
        return Err(Error::DegenerateReference);
    }
    Ok((overlap_area(a, a_star) / ref_area).clamp(0.0, 1.0))
}

/// `1 − area(a ∩ a*) / area(a)`, clamped to [0, 1]; zero when `a` has no
/// area (it claims nothing outside the reference).
pub fn approx_error(a: &Polygon2D, a_star: &Polygon2D) -> Result<f64> {
    if area(a_star) <= AREA_EPS {
        return Err(Error::DegenerateReference);
    }
    let own = area(a);
    if own <= AREA_EPS {
        return Ok(0.0);
    }
    Ok((1.0 - overlap_area(a, a_star) / own).clamp(0.0, 1.0))
}

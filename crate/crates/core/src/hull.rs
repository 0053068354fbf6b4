//! Fixed-size convex polygons bounding the feasible `(θ_f, θ_a)` region of a
//! finger bone, and the containment-gated distance to them.
//!
//! Construction:
//! 1. exact convex hull of the samples (counter-clockwise, collinear points
//!    dropped);
//! 2. if it has more than [`HULL_SIZE`] vertices, Ramer-Douglas-Peucker
//!    simplification of the closed hull with a tolerance of
//!    [`RDP_TOLERANCE`] radians;
//! 3. every simplified edge is moved outward until it supports the exact
//!    hull, so no sample is lost;
//! 4. while more than [`HULL_SIZE`] edges remain, the edge whose removal
//!    (extending its two neighbours to meet) adds the least area is dropped,
//!    ties going to the lowest edge index;
//! 5. polygons with fewer vertices are padded with midpoints of their
//!    longest edges.
//!
//! The result always encloses every input sample.

use serde::{Deserialize, Serialize};

use crate::angles::AnglePair;
use crate::error::{Error, Result};
use crate::geometry::EPS;
use crate::scalar::Real;

pub const HULL_SIZE: usize = 10;
pub const RDP_TOLERANCE: f64 = 0.01;
/// Half-width given to hulls fitted to collinear or coincident samples.
pub const DEGENERATE_HULL_MARGIN: f64 = 1e-6;

type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    dot(d, d).sqrt()
}

fn segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let v = sub(b, a);
    let vv = dot(v, v);
    let t = if vv > 0.0 {
        (dot(sub(p, a), v) / vv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * v[0], a[1] + t * v[1]])
}

/// Counter-clockwise convex decagon on the `(θ_f, θ_a)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; HULL_SIZE]", into = "[[f64; 2]; HULL_SIZE]")]
pub struct AngleHull {
    vertices: [P2; HULL_SIZE],
}

impl TryFrom<[P2; HULL_SIZE]> for AngleHull {
    type Error = Error;
    fn try_from(v: [P2; HULL_SIZE]) -> Result<Self> {
        AngleHull::new(v)
    }
}

impl From<AngleHull> for [P2; HULL_SIZE] {
    fn from(h: AngleHull) -> Self {
        h.vertices
    }
}

impl AngleHull {
    /// Validates finiteness, distinct consecutive vertices, counter-clockwise
    /// orientation and convexity (collinear vertices allowed).
    pub fn new(vertices: [P2; HULL_SIZE]) -> Result<Self> {
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidHull("non-finite vertex".into()));
        }
        let scale = vertices
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(1.0, f64::max);
        for k in 0..HULL_SIZE {
            let a = vertices[k];
            let b = vertices[(k + 1) % HULL_SIZE];
            let c = vertices[(k + 2) % HULL_SIZE];
            if a == b {
                return Err(Error::InvalidHull(format!("vertices {k} and {} coincide", (k + 1) % HULL_SIZE)));
            }
            let turn = cross(sub(b, a), sub(c, b));
            if turn < -1e-12 * scale * scale {
                return Err(Error::InvalidHull(format!(
                    "not convex counter-clockwise at vertex {}",
                    (k + 1) % HULL_SIZE
                )));
            }
        }
        let hull = AngleHull { vertices };
        if hull.area() <= 0.0 {
            return Err(Error::InvalidHull("zero or negative area".into()));
        }
        Ok(hull)
    }

    pub fn vertices(&self) -> &[P2; HULL_SIZE] {
        &self.vertices
    }

    fn edge(&self, k: usize) -> (P2, P2) {
        (self.vertices[k], self.vertices[(k + 1) % HULL_SIZE])
    }

    /// Signed (shoelace) area; positive for counter-clockwise order.
    pub fn area(&self) -> f64 {
        (0..HULL_SIZE)
            .map(|k| {
                let (a, b) = self.edge(k);
                cross(a, b)
            })
            .sum::<f64>()
            / 2.0
    }

    /// Axis-aligned box padded to ten vertices.
    pub fn from_box(flexion: [f64; 2], abduction: [f64; 2]) -> Result<Self> {
        let [f0, f1] = flexion;
        let [a0, a1] = abduction;
        from_polygon(vec![[f0, a0], [f1, a0], [f1, a1], [f0, a1]])
    }

    /// Oriented bounding rectangle of `points`, grown by `margin` on every
    /// side. Works for coincident and collinear samples.
    pub fn enclosing(points: &[P2], margin: f64) -> Result<Self> {
        if points.is_empty() || !(margin > 0.0) {
            return Err(Error::InsufficientPoints { needed: 1, got: points.len() });
        }
        let (mut a, mut b) = (points[0], points[0]);
        let mut far = 0.0;
        for &p in points {
            let d = dist(points[0], p);
            if d > far {
                far = d;
                b = p;
            }
        }
        for &p in points {
            if dist(b, p) > dist(a, b) {
                a = p;
            }
        }
        let len = dist(a, b);
        let u = if len > 0.0 {
            [(b[0] - a[0]) / len, (b[1] - a[1]) / len]
        } else {
            [1.0, 0.0]
        };
        let w = [-u[1], u[0]];
        let (mut s0, mut s1, mut t0, mut t1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &p in points {
            let (s, t) = (dot(p, u), dot(p, w));
            s0 = s0.min(s);
            s1 = s1.max(s);
            t0 = t0.min(t);
            t1 = t1.max(t);
        }
        let corner = |s: f64, t: f64| [s * u[0] + t * w[0], s * u[1] + t * w[1]];
        let (s0, s1, t0, t1) = (s0 - margin, s1 + margin, t0 - margin, t1 + margin);
        let hull = from_polygon(vec![corner(s0, t0), corner(s1, t0), corner(s1, t1), corner(s0, t1)])?;
        if points.iter().all(|&p| hull.contains_point(p)) {
            Ok(hull)
        } else {
            AngleHull::enclosing(points, margin * 2.0)
        }
    }

    /// Containment with the boundary counted as inside:
    /// `(w_k × v_k) ≤ 0` for every edge.
    pub fn contains(&self, point: &AnglePair) -> bool {
        self.contains_point(point.as_array())
    }

    pub fn contains_point(&self, p: P2) -> bool {
        (0..HULL_SIZE).all(|k| {
            let (a, b) = self.edge(k);
            cross(sub(p, a), sub(b, a)) <= 0.0
        })
    }

    /// Euclidean distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: P2) -> f64 {
        (0..HULL_SIZE)
            .map(|k| {
                let (a, b) = self.edge(k);
                segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `true` when every vertex of `other` lies inside `self`, allowing
    /// vertices within rounding (1e-12 relative) of an edge line. Padded
    /// hulls carry midpoint vertices that do not lie exactly on their edge.
    pub fn encloses(&self, other: &AngleHull) -> bool {
        let scale = self
            .vertices
            .iter()
            .chain(&other.vertices)
            .flatten()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        other.vertices.iter().all(|&v| {
            (0..HULL_SIZE).all(|k| {
                let (a, b) = self.edge(k);
                let e = sub(b, a);
                cross(sub(v, a), e) <= 1e-12 * scale * dot(e, e).sqrt()
            })
        })
    }
}

/// Per-edge data of the closest-edge search.
struct EdgeHit {
    d: f64,
    q: P2,
}

fn edge_hit(a: P2, v: P2, p: P2) -> (EdgeHit, f64) {
    let vv = dot(v, v);
    let t_raw = if vv > 0.0 { dot(sub(p, a), v) / vv } else { 0.0 };
    let t = t_raw.clamp(0.0, 1.0);
    let q = [a[0] + t * v[0], a[1] + t * v[1]];
    let d = (p[0].cos() - q[0].cos()).abs()
        + (p[0].sin() - q[0].sin()).abs()
        + (p[1].cos() - q[1].cos()).abs()
        + (p[1].sin() - q[1].sin()).abs();
    (EdgeHit { d, q }, t_raw)
}

/// Distance from `point` to the hull: for each edge the point is projected
/// onto the segment in raw angle coordinates and compared in the `(cos, sin)`
/// embedding, summing the four absolute differences; the minimum over edges
/// is returned.
pub fn hull_distance<T: Real>(hull: &AngleHull, point: &AnglePair<T>) -> T {
    let p = [point.flexion.val(), point.abduction.val()];
    let mut best: Option<(usize, EdgeHit, f64)> = None;
    let mut hits = Vec::with_capacity(HULL_SIZE);
    for k in 0..HULL_SIZE {
        let (a, b) = hull.edge(k);
        let (hit, t_raw) = edge_hit(a, sub(b, a), p);
        hits.push(hit.q);
        if best.as_ref().is_none_or(|(_, h, _)| hit.d < h.d) {
            best = Some((k, hit, t_raw));
        }
    }
    let (k, hit, t_raw) = best.expect("hull has edges");

    // Switching to another edge with a different nearest point is a kink.
    let gap = (0..HULL_SIZE)
        .filter(|&j| j != k && dist(hits[j], hit.q) > 1e-12)
        .map(|j| {
            let (a, b) = hull.edge(j);
            edge_hit(a, sub(b, a), p).0.d - hit.d
        })
        .fold(f64::INFINITY, f64::min);

    let (a, b) = hull.edge(k);
    let v = sub(b, a);
    let vv = dot(v, v);
    let vlen = vv.sqrt();
    let t = if t_raw <= 0.0 || vv == 0.0 {
        point.flexion.kink(t_raw.abs() * vlen);
        T::zero()
    } else if t_raw >= 1.0 {
        point.flexion.kink((t_raw - 1.0).abs() * vlen);
        T::cst(1.0)
    } else {
        point.flexion.kink(t_raw.min(1.0 - t_raw) * vlen);
        ((point.flexion - a[0]) * v[0] + (point.abduction - a[1]) * v[1]) / vv
    };
    if gap.is_finite() {
        point.flexion.kink(gap);
        point.abduction.kink(gap);
    }
    let qf = t * v[0] + a[0];
    let qa = t * v[1] + a[1];
    // First-order distance |g| / |∇g| to the zero sets of the four abs
    // arguments, with ∇q = v vᵀ / |v|² when t is free and 0 when clamped.
    let jq = |c: usize| -> P2 {
        if t_raw > 0.0 && t_raw < 1.0 && vv > 0.0 {
            [v[c] * v[0] / vv, v[c] * v[1] / vv]
        } else {
            [0.0, 0.0]
        }
    };
    for (c, pc, qc) in [(0, point.flexion, qf), (1, point.abduction, qa)] {
        let (p, q) = (pc.val(), qc.val());
        let e = if c == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        let j = jq(c);
        let grad_cos = [-p.sin() * e[0] + q.sin() * j[0], -p.sin() * e[1] + q.sin() * j[1]];
        let grad_sin = [p.cos() * e[0] - q.cos() * j[0], p.cos() * e[1] - q.cos() * j[1]];
        let gap = |g: f64, dg: P2| g.abs() / dot(dg, dg).sqrt().max(1e-300);
        pc.kink(gap(p.cos() - q.cos(), grad_cos).min(gap(p.sin() - q.sin(), grad_sin)));
    }
    (point.flexion.cos() - qf.cos()).abs()
        + (point.flexion.sin() - qf.sin()).abs()
        + (point.abduction.cos() - qa.cos()).abs()
        + (point.abduction.sin() - qa.sin()).abs()
}

/// Zero inside the hull (boundary included), [`hull_distance`] outside.
pub fn angle_loss_term<T: Real>(hull: &AngleHull, point: &AnglePair<T>) -> T {
    let p = [point.flexion.val(), point.abduction.val()];
    let margin = hull.boundary_distance(p);
    point.flexion.kink(margin);
    point.abduction.kink(margin);
    if hull.contains_point(p) {
        T::zero()
    } else {
        hull_distance(hull, point)
    }
}

/// Convex hull by monotone chain, counter-clockwise from the lowest
/// `(θ_f, θ_a)` point, collinear points removed.
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(sub(lower[lower.len() - 1], lower[lower.len() - 2]), sub(p, lower[lower.len() - 2])) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(sub(upper[upper.len() - 1], upper[upper.len() - 2]), sub(p, upper[upper.len() - 2])) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Smallest width of a convex polygon over its edge directions.
fn polygon_width(poly: &[P2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    (0..poly.len())
        .map(|k| {
            let a = poly[k];
            let v = sub(poly[(k + 1) % poly.len()], a);
            let len = dot(v, v).sqrt();
            poly.iter()
                .map(|&p| cross(v, sub(p, a)).abs() / len)
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Indices of `chain` kept by Ramer-Douglas-Peucker, endpoints included.
fn rdp(chain: &[P2], tol: f64) -> Vec<usize> {
    fn recurse(chain: &[P2], lo: usize, hi: usize, tol: f64, keep: &mut Vec<usize>) {
        if hi <= lo + 1 {
            return;
        }
        let (mut worst, mut at) = (-1.0, lo);
        for i in lo + 1..hi {
            let d = segment_distance(chain[i], chain[lo], chain[hi]);
            if d > worst {
                worst = d;
                at = i;
            }
        }
        if worst > tol {
            recurse(chain, lo, at, tol, keep);
            keep.push(at);
            recurse(chain, at, hi, tol, keep);
        }
    }
    let mut keep = vec![0];
    recurse(chain, 0, chain.len() - 1, tol, &mut keep);
    keep.push(chain.len() - 1);
    keep
}

/// RDP on a closed polygon, split at vertex 0 and the vertex farthest from it.
fn rdp_closed(poly: &[P2], tol: f64) -> Vec<usize> {
    let n = poly.len();
    let far = (1..n)
        .max_by(|&i, &j| dist(poly[0], poly[i]).total_cmp(&dist(poly[0], poly[j])).then(j.cmp(&i)))
        .unwrap_or(0);
    let first: Vec<P2> = poly[..=far].to_vec();
    let mut second: Vec<P2> = poly[far..].to_vec();
    second.push(poly[0]);
    let mut keep: Vec<usize> = rdp(&first, tol);
    keep.pop();
    let tail = rdp(&second, tol);
    keep.extend(tail[..tail.len() - 1].iter().map(|&i| i + far));
    keep
}

/// Support line `n · p = h` with outward unit normal `n`. `through` holds the
/// simplified-polygon vertices it passes through when it was not shifted.
#[derive(Clone, Copy, Debug)]
struct Line {
    n: P2,
    h: f64,
    through: Option<(usize, usize)>,
}

fn intersect(a: &Line, b: &Line) -> P2 {
    let det = cross(a.n, b.n);
    [(a.h * b.n[1] - b.h * a.n[1]) / det, (b.h * a.n[0] - a.h * b.n[0]) / det]
}

fn line_vertices(lines: &[Line], simplified: &[P2], inflate: f64) -> Vec<P2> {
    let m = lines.len();
    (0..m)
        .map(|k| {
            let prev = &lines[(k + m - 1) % m];
            let cur = &lines[k];
            match (prev.through, cur.through) {
                (Some((_, e)), Some((s, _))) if e == s && inflate == 0.0 => simplified[s],
                _ => {
                    let grow = |l: &Line| Line { h: l.h + inflate, ..*l };
                    intersect(&grow(prev), &grow(cur))
                }
            }
        })
        .collect()
}

fn triangle_area(a: P2, b: P2, c: P2) -> f64 {
    cross(sub(b, a), sub(c, a)).abs() / 2.0
}

/// Insert midpoints of the longest edges until there are ten vertices.
fn from_polygon(mut poly: Vec<P2>) -> Result<AngleHull> {
    if poly.len() > HULL_SIZE || poly.len() < 3 {
        return Err(Error::InvalidHull(format!("polygon has {} vertices", poly.len())));
    }
    while poly.len() < HULL_SIZE {
        let n = poly.len();
        let mut longest = 0;
        for k in 1..n {
            if dist(poly[k], poly[(k + 1) % n]) > dist(poly[longest], poly[(longest + 1) % n]) {
                longest = k;
            }
        }
        let (a, b) = (poly[longest], poly[(longest + 1) % n]);
        poly.insert(longest + 1, [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
    }
    AngleHull::new(poly.try_into().expect("ten vertices"))
}

/// Build the ten-vertex hull enclosing `points`.
pub fn build_hull(points: &[AnglePair]) -> Result<AngleHull> {
    let pts: Vec<P2> = points.iter().map(AnglePair::as_array).collect();
    if pts.len() < HULL_SIZE {
        return Err(Error::InsufficientPoints { needed: HULL_SIZE, got: pts.len() });
    }
    if pts.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidHull("non-finite angle sample".into()));
    }
    let exact = convex_hull(&pts);
    let width = polygon_width(&exact);
    if exact.len() < 3 || width < EPS {
        return Err(Error::DegenerateDistribution { width });
    }

    // A hull that already fits is kept as is.
    let mut keep = if exact.len() <= HULL_SIZE {
        (0..exact.len()).collect()
    } else {
        rdp_closed(&exact, RDP_TOLERANCE)
    };
    if keep.len() < 3 {
        keep = (0..exact.len()).collect();
    }
    let simplified: Vec<P2> = keep.iter().map(|&i| exact[i]).collect();
    let s = simplified.len();

    let mut lines: Vec<Line> = (0..s)
        .map(|k| {
            let (a, b) = (simplified[k], simplified[(k + 1) % s]);
            let d = sub(b, a);
            let len = dot(d, d).sqrt();
            let n = [d[1] / len, -d[0] / len];
            let h0 = dot(n, a).max(dot(n, b));
            let h = exact.iter().map(|&p| dot(n, p)).fold(h0, f64::max);
            // Unshifted edges keep their original vertices bit-exactly.
            let on_edge = exact.iter().all(|&p| cross(sub(p, a), d) <= 0.0);
            Line {
                n,
                h,
                through: on_edge.then_some((k, (k + 1) % s)),
            }
        })
        .collect();

    while lines.len() > HULL_SIZE {
        let m = lines.len();
        let verts = line_vertices(&lines, &simplified, 0.0);
        let mut choice: Option<(usize, f64)> = None;
        for j in 0..m {
            let (a, b) = (&lines[(j + m - 1) % m], &lines[(j + 1) % m]);
            if cross(a.n, b.n) <= 0.0 {
                continue;
            }
            let x = intersect(a, b);
            let added = triangle_area(verts[j], x, verts[(j + 1) % m]);
            if choice.is_none_or(|(_, best)| added < best) {
                choice = Some((j, added));
            }
        }
        let (j, _) = choice.expect("a polygon with more than ten edges has a removable edge");
        lines.remove(j);
        // Neighbours of a removed edge no longer end on simplified vertices.
        let m = lines.len();
        let prev = (j + m - 1) % m;
        let next = j % m;
        lines[prev].through = None;
        lines[next].through = None;
    }

    let extent = exact
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(1.0, f64::max);
    let mut inflate = 0.0;
    loop {
        let mut verts = line_vertices(&lines, &simplified, inflate);
        verts.dedup_by(|b, a| dist(*a, *b) <= 1e-12 * extent);
        while verts.len() > 1 && dist(verts[0], verts[verts.len() - 1]) <= 1e-12 * extent {
            verts.pop();
        }
        let hull = from_polygon(verts)?;
        if pts.iter().all(|&p| hull.contains_point(p)) {
            return Ok(hull);
        }
        inflate = if inflate == 0.0 { 1e-13 * extent } else { inflate * 4.0 };
    }
}

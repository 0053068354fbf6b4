//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use handbmc::hull::AngleHull;
use handbmc::limits::{fit_limits, LimitSet};
use handbmc::synthetic;
use handbmc::HandPose;
use rand::Rng;

pub type P2 = [f64; 2];

/// Winding number of a closed polygon around `p` (Sunday's crossing rule).
pub fn winding_number(poly: &[P2], p: P2) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let v = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let t = ((w[0] * v[0] + w[1] * v[1]) / (v[0] * v[0] + v[1] * v[1])).clamp(0.0, 1.0);
    let d = [w[0] - t * v[0], w[1] - t * v[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

pub fn boundary_distance(poly: &[P2], p: P2) -> f64 {
    (0..poly.len())
        .map(|k| segment_distance(p, poly[k], poly[(k + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// The embedded distance between two angle pairs: four absolute
/// differences of cosines and sines.
pub fn cos_sin_distance(p: P2, q: P2) -> f64 {
    (p[0].cos() - q[0].cos()).abs()
        + (p[0].sin() - q[0].sin()).abs()
        + (p[1].cos() - q[1].cos()).abs()
        + (p[1].sin() - q[1].sin()).abs()
}

/// Dense boundary sampling: `samples` points spread over the perimeter in
/// proportion to edge length. For every edge the sample nearest to `p` in
/// angle coordinates is scored with [`cos_sin_distance`]; the best score
/// over edges is returned, together with the plain minimum of the score over
/// all samples.
pub fn dense_hull_distance(poly: &[P2], p: P2, samples: usize) -> (f64, f64) {
    let n = poly.len();
    let lengths: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
        })
        .collect();
    let perimeter: f64 = lengths.iter().sum();
    let mut per_edge = f64::INFINITY;
    let mut overall = f64::INFINITY;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let m = ((samples as f64 * lengths[k] / perimeter).round() as usize).max(2);
        let mut nearest = (f64::INFINITY, a);
        for i in 0..=m {
            let t = i as f64 / m as f64;
            let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let e = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if e < nearest.0 {
                nearest = (e, q);
            }
            overall = overall.min(cos_sin_distance(p, q));
        }
        per_edge = per_edge.min(cos_sin_distance(p, nearest.1));
    }
    (per_edge, overall)
}

/// Random strictly convex counter-clockwise decagon: sorted angles on a
/// rotated ellipse around a random centre.
pub fn random_decagon(rng: &mut impl Rng) -> [P2; 10] {
    loop {
        let mut t: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        t.sort_by(f64::total_cmp);
        let gaps_ok = (0..10).all(|k| {
            let next = if k == 9 { t[0] + std::f64::consts::TAU } else { t[k + 1] };
            next - t[k] > 0.05
        });
        if !gaps_ok {
            continue;
        }
        let (rx, ry) = (rng.random_range(0.2..1.5), rng.random_range(0.05..0.8));
        let rot: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)];
        let (s, co) = rot.sin_cos();
        return std::array::from_fn(|k| {
            let (x, y) = (rx * t[k].cos(), ry * t[k].sin());
            [c[0] + co * x - s * y, c[1] + s * x + co * y]
        });
    }
}

pub fn hull_from(poly: [P2; 10]) -> AngleHull {
    AngleHull::new(poly).expect("valid decagon")
}

/// Synthetic corpus and limits fitted to it with quantile 0.
pub fn fitted(seed: u64, n: usize) -> (Vec<HandPose>, LimitSet) {
    let corpus = synthetic::corpus(seed, n).expect("corpus");
    let limits = fit_limits(&corpus, 0.0).expect("fit");
    (corpus, limits)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

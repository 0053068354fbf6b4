//! Shared geometric primitives.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Degeneracy threshold for every normalization, in pose length units.
pub const EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn constant(v: [f64; 3]) -> Self {
        Vec3::new(T::cst(v[0]), T::cst(v[1]), T::cst(v[2]))
    }

    pub fn zero() -> Self {
        Vec3::constant([0.0; 3])
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// `norm(v)`; fails when `‖v‖ < EPS`.
    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if n.val() < EPS {
            return Err(Error::DegenerateVector { norm: n.val() });
        }
        Ok(Vec3::new(self.x / n, self.y / n, self.z / n))
    }

    pub fn values(self) -> [f64; 3] {
        [self.x.val(), self.y.val(), self.z.val()]
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<f64> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl From<[f64; 3]> for Vec3<f64> {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3<f64>> for [f64; 3] {
    fn from(v: Vec3<f64>) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Closed interval `[lower, upper]` used by the interval loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidInterval { lower, upper });
        }
        Ok(Interval { lower, upper })
    }

    pub fn point(x: f64) -> Self {
        Interval { lower: x, upper: x }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn is_superset_of(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lower, i.upper]
    }
}

/// Interval loss `max(a - x, 0) + max(x - b, 0)`.
///
/// Exactly at an endpoint the derivative is zero (feasible side).
pub fn interval_penalty<T: Real>(x: T, interval: &Interval) -> T {
    let v = x.val();
    x.kink((v - interval.lower).abs().min((v - interval.upper).abs()));
    if v < interval.lower {
        T::cst(interval.lower) - x
    } else if v > interval.upper {
        x - interval.upper
    } else {
        T::zero()
    }
}

/// Angle between two vectors via clamped arccos, in `[0, π]`.
pub fn angle_between<T: Real>(v1: Vec3<T>, v2: Vec3<T>) -> Result<T> {
    let (s1, s2) = (v1.norm_sq(), v2.norm_sq());
    for s in [s1, s2] {
        if s.val().sqrt() < EPS {
            return Err(Error::DegenerateVector { norm: s.val().sqrt() });
        }
    }
    // One square root of the product rounds less than a product of norms,
    // which matters near 0 and π where arccos is ill-conditioned.
    Ok((v1.dot(v2) / (s1 * s2).sqrt()).acos())
}

/// Orthogonal projection of `v` onto `span{x, y}`.
///
/// `x` and `y` need not be orthogonal; the 2×2 Gram system is solved.
pub fn project_onto_plane<T: Real>(v: Vec3<T>, x: Vec3<T>, y: Vec3<T>) -> Result<Vec3<T>> {
    let cross = x.cross(y).norm().val();
    if cross < EPS {
        return Err(Error::DegenerateBasis { cross });
    }
    let (xx, xy, yy) = (x.dot(x), x.dot(y), y.dot(y));
    let (vx, vy) = (v.dot(x), v.dot(y));
    let det = xx * yy - xy * xy;
    let a = (vx * yy - vy * xy) / det;
    let b = (vy * xx - vx * xy) / det;
    Ok(x.scale(a) + y.scale(b))
}

//! Palm structure: the root bones read as a triangle fan.
//!
//! For neighbouring root bones `b_i`, `b_{i+1}` the plane normal is
//! `n_i = norm(b_{i+1} × b_i)`. Edge normals average adjacent plane normals
//! (`e_1 = n_1`, `e_5 = n_4`, `e_i = norm(n_i + n_{i-1})` otherwise), and the
//! discrete curvature between two root bones is
//!
//! ```text
//! c_i = (e_{i+1} - e_i)ᵀ (b_{i+1} - b_i) / ‖b_{i+1} - b_i‖²
//! ```
//!
//! A flat fan has `c_i = 0`; bending the outer root bones towards `-n`
//! (the palm side) gives `c_i > 0`. Curvature has units of 1/length, so
//! `c_i(s·J) = c_i(J) / s` and limits must be fitted in the same length unit
//! used at inference.

use crate::error::{Error, Result};
use crate::geometry::{angle_between, interval_penalty, Interval, Vec3, EPS};
use crate::hand::{BoneSet, NUM_FINGERS};
use crate::scalar::Real;

pub const NUM_PALM_GAPS: usize = NUM_FINGERS - 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PalmDescriptor<T = f64> {
    pub plane_normals: [Vec3<T>; NUM_PALM_GAPS],
    pub edge_normals: [Vec3<T>; NUM_FINGERS],
    pub curvatures: [T; NUM_PALM_GAPS],
    pub angular_distances: [T; NUM_PALM_GAPS],
}

/// Curvature and angular-distance limits for the four root-bone gaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootBoneLimits {
    pub curvature: [Interval; NUM_PALM_GAPS],
    pub angular_distance: [Interval; NUM_PALM_GAPS],
}

pub fn palm_descriptor<T: Real>(bones: &BoneSet<T>) -> Result<PalmDescriptor<T>> {
    let roots: [Vec3<T>; NUM_FINGERS] = std::array::from_fn(|f| bones.root(f));
    for (f, b) in roots.iter().enumerate() {
        let n = b.norm().val();
        if n < EPS {
            return Err(Error::palm(format!("root bone {f} has length {n:e}")));
        }
    }

    let mut plane_normals = [Vec3::zero(); NUM_PALM_GAPS];
    for i in 0..NUM_PALM_GAPS {
        plane_normals[i] = roots[i + 1].cross(roots[i]).normalized().map_err(|_| {
            Error::palm(format!("root bones {i} and {} are parallel", i + 1))
        })?;
    }

    let mut edge_normals = [Vec3::zero(); NUM_FINGERS];
    edge_normals[0] = plane_normals[0];
    edge_normals[NUM_FINGERS - 1] = plane_normals[NUM_PALM_GAPS - 1];
    for i in 1..NUM_PALM_GAPS {
        edge_normals[i] = (plane_normals[i] + plane_normals[i - 1])
            .normalized()
            .map_err(|_| Error::palm(format!("plane normals {} and {i} cancel", i - 1)))?;
    }

    let mut curvatures = [T::zero(); NUM_PALM_GAPS];
    let mut angular_distances = [T::zero(); NUM_PALM_GAPS];
    for i in 0..NUM_PALM_GAPS {
        let db = roots[i + 1] - roots[i];
        let d2 = db.norm_sq();
        if d2.val().sqrt() < EPS {
            return Err(Error::palm(format!("root bones {i} and {} coincide", i + 1)));
        }
        curvatures[i] = (edge_normals[i + 1] - edge_normals[i]).dot(db) / d2;
        angular_distances[i] = angle_between(roots[i], roots[i + 1])?;
    }

    Ok(PalmDescriptor {
        plane_normals,
        edge_normals,
        curvatures,
        angular_distances,
    })
}

/// Per-gap penalties `(curvature, angular distance)`.
pub fn root_bone_penalties<T: Real>(
    palm: &PalmDescriptor<T>,
    limits: &RootBoneLimits,
) -> [(T, T); NUM_PALM_GAPS] {
    std::array::from_fn(|i| {
        (
            interval_penalty(palm.curvatures[i], &limits.curvature[i]),
            interval_penalty(palm.angular_distances[i], &limits.angular_distance[i]),
        )
    })
}

/// `L_RB`: the four curvature and four angular penalties, summed and divided by 4.
pub fn root_bone_loss<T: Real>(palm: &PalmDescriptor<T>, limits: &RootBoneLimits) -> T {
    let sum = root_bone_penalties(palm, limits)
        .into_iter()
        .fold(T::zero(), |acc, (c, p)| acc + c + p);
    sum / NUM_PALM_GAPS as f64
}

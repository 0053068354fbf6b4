//! Pinhole projection and absolute root-depth recovery from 2.5D data.
//!
//! The 2.5D form of a pose keeps the image coordinates of each joint and
//! its depth relative to the root, divided by the length `s` of a reference
//! bone. With back-projected rays `x̂_i = K⁻¹ [u_i, v_i, 1]ᵀ` and normalized
//! root depth `Z = Z_root / s`, joint `i` sits at `(Z + z^r_i) x̂_i`. Asking
//! the reference bone `(a, b)` to have unit length gives
//!
//! ```text
//! ‖Z d + m‖² = 1,   d = x̂_a − x̂_b,   m = z^r_a x̂_a − z^r_b x̂_b
//! (d·d) Z² + 2 (d·m) Z + (m·m − 1) = 0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Vec3, EPS};
use crate::hand::{HandPose, NUM_JOINTS, ROOT_JOINT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    k: [[f64; 3]; 3],
    k_inv: [[f64; 3]; 3],
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

impl CameraIntrinsics {
    /// `k` is row-major. The last row must be `[0, 0, 1]` and both focal
    /// entries positive.
    pub fn new(k: [[f64; 3]; 3]) -> Result<Self> {
        if k.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCamera("non-finite entry".into()));
        }
        if k[2] != [0.0, 0.0, 1.0] {
            return Err(Error::InvalidCamera(format!("last row must be [0, 0, 1], got {:?}", k[2])));
        }
        if !(k[0][0] > 0.0 && k[1][1] > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal entries must be positive, got fx = {}, fy = {}",
                k[0][0], k[1][1]
            )));
        }
        if k[1][0] != 0.0 {
            return Err(Error::InvalidCamera("K[1][0] must be 0".into()));
        }
        // Upper triangular with unit K[2][2].
        let (fx, s, cx) = (k[0][0], k[0][1], k[0][2]);
        let (fy, cy) = (k[1][1], k[1][2]);
        let k_inv = [
            [1.0 / fx, -s / (fx * fy), (s * cy - cx * fy) / (fx * fy)],
            [0.0, 1.0 / fy, -cy / fy],
            [0.0, 0.0, 1.0],
        ];
        Ok(CameraIntrinsics { k, k_inv })
    }

    pub fn from_row_major(values: &[f64]) -> Result<Self> {
        let v: [f64; 9] = values
            .try_into()
            .map_err(|_| Error::InvalidCamera(format!("expected 9 numbers, got {}", values.len())))?;
        CameraIntrinsics::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        CameraIntrinsics::new([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
    }

    pub fn identity() -> Self {
        CameraIntrinsics::pinhole(1.0, 1.0, 0.0, 0.0).expect("identity is valid")
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.k
    }

    pub fn row_major(&self) -> [f64; 9] {
        let k = &self.k;
        [k[0][0], k[0][1], k[0][2], k[1][0], k[1][1], k[1][2], k[2][0], k[2][1], k[2][2]]
    }

    /// `K⁻¹ [u, v, 1]ᵀ`; the third component is 1.
    pub fn back_project(&self, uv: [f64; 2]) -> [f64; 3] {
        mat_vec(&self.k_inv, [uv[0], uv[1], 1.0])
    }

    pub fn project_point(&self, p: [f64; 3], joint: usize) -> Result<[f64; 2]> {
        if !(p[2] > EPS) {
            return Err(Error::BehindCamera { joint, depth: p[2] });
        }
        let x = [p[0] / p[2], p[1] / p[2], 1.0];
        let u = mat_vec(&self.k, x);
        Ok([u[0], u[1]])
    }
}

/// Joints whose bone fixes the scale of the 2.5D representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferencePair {
    pub a: usize,
    pub b: usize,
}

impl Default for ReferencePair {
    /// Root and middle-finger MCP.
    fn default() -> Self {
        ReferencePair { a: ROOT_JOINT, b: 9 }
    }
}

impl ReferencePair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b || a >= NUM_JOINTS || b >= NUM_JOINTS {
            return Err(Error::DegenerateReference(format!(
                "joints ({a}, {b}) must be distinct indices below {NUM_JOINTS}"
            )));
        }
        Ok(ReferencePair { a, b })
    }
}

/// Image points plus root-relative, scale-normalized depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTwoPointFiveD")]
pub struct TwoPointFiveD {
    pub uv: [[f64; 2]; NUM_JOINTS],
    pub zr: [f64; NUM_JOINTS],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTwoPointFiveD {
    uv: [[f64; 2]; NUM_JOINTS],
    zr: [f64; NUM_JOINTS],
}

impl TryFrom<RawTwoPointFiveD> for TwoPointFiveD {
    type Error = Error;
    fn try_from(r: RawTwoPointFiveD) -> Result<Self> {
        TwoPointFiveD::new(r.uv, r.zr)
    }
}

impl TwoPointFiveD {
    pub fn new(uv: [[f64; 2]; NUM_JOINTS], zr: [f64; NUM_JOINTS]) -> Result<Self> {
        if uv.iter().flatten().chain(zr.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPose("2.5D sample has a non-finite value".into()));
        }
        if zr[ROOT_JOINT] != 0.0 {
            return Err(Error::InvalidPose(format!(
                "root relative depth must be 0, got {}",
                zr[ROOT_JOINT]
            )));
        }
        Ok(TwoPointFiveD { uv, zr })
    }
}

pub fn project(pose: &HandPose, camera: &CameraIntrinsics) -> Result<[[f64; 2]; NUM_JOINTS]> {
    let mut out = [[0.0; 2]; NUM_JOINTS];
    for (j, p) in pose.joints().iter().enumerate() {
        out[j] = camera.project_point(*p, j)?;
    }
    Ok(out)
}

/// 2.5D representation of a camera-space pose, and the scale `s` (length
/// of the reference bone).
pub fn decompose_25d(
    pose: &HandPose,
    camera: &CameraIntrinsics,
    reference: ReferencePair,
) -> Result<(TwoPointFiveD, f64)> {
    let reference = ReferencePair::new(reference.a, reference.b)?;
    let s = (Vec3::from(pose.joint(reference.a)) - Vec3::from(pose.joint(reference.b))).norm();
    if !(s >= EPS) {
        return Err(Error::DegenerateReference(format!("reference bone has length {s:e}")));
    }
    let uv = project(pose, camera)?;
    let z_root = pose.joint(ROOT_JOINT)[2];
    let zr = std::array::from_fn(|j| (pose.joint(j)[2] - z_root) / s);
    Ok((TwoPointFiveD::new(uv, zr)?, s))
}

/// Both roots of the root-depth quadratic.
pub fn zroot_candidates(
    data: &TwoPointFiveD,
    camera: &CameraIntrinsics,
    reference: ReferencePair,
) -> Result<[f64; 2]> {
    let reference = ReferencePair::new(reference.a, reference.b)?;
    let xa = Vec3::from(camera.back_project(data.uv[reference.a]));
    let xb = Vec3::from(camera.back_project(data.uv[reference.b]));
    let d = xa - xb;
    let m = xa * data.zr[reference.a] - xb * data.zr[reference.b];
    let a = d.dot(d);
    if !(a.sqrt() >= EPS) {
        return Err(Error::DegenerateReference(
            "reference joints back-project to the same ray".into(),
        ));
    }
    let b = d.dot(m);
    let c = m.dot(m) - 1.0;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return Err(Error::ComplexRoots { discriminant: disc });
    }
    // Cancellation-free pair of roots.
    let q = -(b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let (r1, r2) = (q / a, c / q);
    Ok(if r1 <= r2 { [r1, r2] } else { [r2, r1] })
}

/// Scale-normalized root depth `Z_root / s`.
///
/// Among positive roots the ones that place every joint in front of the
/// camera are admissible; the larger admissible root wins.
pub fn solve_zroot(data: &TwoPointFiveD, camera: &CameraIntrinsics, reference: ReferencePair) -> Result<f64> {
    let roots = zroot_candidates(data, camera, reference)?;
    roots
        .iter()
        .rev()
        .copied()
        .find(|&z| z > 0.0 && data.zr.iter().all(|&r| z + r > 0.0))
        .ok_or(Error::NoPositiveRoot { roots })
}

/// Scale-normalized camera-space joints `(Z + z^r_i) K⁻¹ [u_i, v_i, 1]ᵀ`.
pub fn reconstruct(data: &TwoPointFiveD, camera: &CameraIntrinsics, zroot: f64) -> Result<HandPose> {
    HandPose::new(std::array::from_fn(|j| {
        let x = camera.back_project(data.uv[j]);
        let depth = zroot + data.zr[j];
        [depth * x[0], depth * x[1], depth * x[2]]
    }))
}

/// Hook for an external corrector of the analytic root depth, such as a
/// learned residual model.
pub trait DepthRefiner {
    fn refine(&self, data: &TwoPointFiveD, zroot: f64) -> f64;
}

/// The identity refiner.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoRefinement;

impl DepthRefiner for NoRefinement {
    fn refine(&self, _data: &TwoPointFiveD, zroot: f64) -> f64 {
        zroot
    }
}

pub fn solve_zroot_refined(
    data: &TwoPointFiveD,
    camera: &CameraIntrinsics,
    reference: ReferencePair,
    refiner: &dyn DepthRefiner,
) -> Result<f64> {
    Ok(refiner.refine(data, solve_zroot(data, camera, reference)?))
}

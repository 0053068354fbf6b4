//! Flexion/abduction angles of the 15 finger bones.
//!
//! Every finger bone is expressed in a local frame `F = (x, y, z)`. For PIP
//! bones `z` is the normalized root bone and `x` is a negated palm plane
//! normal (`-n_p` for the thumb and index, `-norm(n_p + n_{p-1})` for the
//! middle and ring finger, `-n_4` for the pinky), with `y = norm(z × x)`.
//! Deeper bones inherit the parent's frame rotated by the parent's angles,
//! so the frames move rigidly with the finger.
//!
//! Given the bone in frame coordinates `b = (b_x, b_y, b_z)`, flexion is the
//! angle between `z` and the x-z projection of `b`, abduction the angle
//! between that projection and `b`; their signs come from `b_x` and `b_y`
//! (octant lookup). The signed result equals
//! `θ_f = atan2(b_x, b_z)`, `θ_a = atan2(b_y, ‖(b_x, b_z)‖)`, which is what
//! the differentiable path evaluates. [`unsigned_angles`] and
//! [`octant_lookup`] keep the two-step arccos form available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, project_onto_plane, Vec3, EPS};
use crate::hand::{finger_joint, BoneSet, HandPose, NUM_FINGERS, NUM_FINGER_BONES, NUM_JOINTS};
use crate::palm::{palm_descriptor, PalmDescriptor};
use crate::scalar::Real;

/// Flexion in `[-π, π]`, abduction in `[-π/2, π/2]`, radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePair<T = f64> {
    pub flexion: T,
    pub abduction: T,
}

impl AnglePair<f64> {
    pub fn new(flexion: f64, abduction: f64) -> Self {
        AnglePair { flexion, abduction }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.flexion, self.abduction]
    }
}

impl<T: Real> AnglePair<T> {
    pub fn values(&self) -> AnglePair<f64> {
        AnglePair {
            flexion: self.flexion.val(),
            abduction: self.abduction.val(),
        }
    }
}

/// Right-handed orthonormal frame; columns `x`, `y`, `z` in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoneFrame<T = f64> {
    pub x: Vec3<T>,
    pub y: Vec3<T>,
    pub z: Vec3<T>,
}

impl<T: Real> BoneFrame<T> {
    pub fn identity() -> Self {
        BoneFrame {
            x: Vec3::constant([1.0, 0.0, 0.0]),
            y: Vec3::constant([0.0, 1.0, 0.0]),
            z: Vec3::constant([0.0, 0.0, 1.0]),
        }
    }

    pub fn to_local(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.x.dot(v), self.y.dot(v), self.z.dot(v))
    }

    pub fn to_world(&self, local: Vec3<T>) -> Vec3<T> {
        self.x.scale(local.x) + self.y.scale(local.y) + self.z.scale(local.z)
    }

    /// Largest deviation of the Gram matrix from identity, and of the
    /// determinant from +1.
    pub fn orthonormality_error(&self) -> f64 {
        let axes = [self.x, self.y, self.z];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((axes[i].dot(axes[j]).val() - want).abs());
            }
        }
        let det = self.x.dot(self.y.cross(self.z)).val();
        worst.max((det - 1.0).abs())
    }
}

/// Frames of the five PIP bones, one per finger.
pub fn pip_frames<T: Real>(
    bones: &BoneSet<T>,
    palm: &PalmDescriptor<T>,
) -> Result<[BoneFrame<T>; NUM_FINGERS]> {
    let n = &palm.plane_normals;
    let mut frames = [BoneFrame::identity(); NUM_FINGERS];
    for (f, frame) in frames.iter_mut().enumerate() {
        let z = bones
            .root(f)
            .normalized()
            .map_err(|_| Error::palm(format!("root bone {f} is degenerate")))?;
        let x = match f {
            0 | 1 => -n[f],
            2 | 3 => -(n[f] + n[f - 1])
                .normalized()
                .map_err(|_| Error::palm(format!("plane normals {} and {f} cancel", f - 1)))?,
            _ => -n[3],
        };
        let y = z.cross(x).normalized()?;
        *frame = BoneFrame { x, y, z };
    }
    Ok(frames)
}

/// Outcome of angle extraction for one bone.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Extraction<T> {
    pub angles: AnglePair<T>,
    /// The bone is parallel to the frame's y axis; flexion set to 0.
    pub gimbal: bool,
}

/// Signed angles from frame-local bone coordinates. `None` if the bone is
/// shorter than `EPS`.
pub(crate) fn local_angles<T: Real>(b: Vec3<T>) -> Option<Extraction<T>> {
    let pxz = (b.x * b.x + b.z * b.z).sqrt();
    let len = (pxz * pxz + b.y * b.y).sqrt();
    if len.val() < EPS {
        return None;
    }
    b.y.kink(pxz.val() / len.val());
    if pxz.val() < EPS {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let abduction = T::cst(if b.y.val() < 0.0 { -half_pi } else { half_pi });
        return Some(Extraction {
            angles: AnglePair {
                flexion: T::zero(),
                abduction,
            },
            gimbal: true,
        });
    }
    // `+ 0.0` turns a negative zero into +0 so that b_x = -0 is not read as
    // the negative octant.
    let flexion = (b.x + 0.0).atan2(b.z);
    flexion.kink(std::f64::consts::PI - flexion.val().abs());
    Some(Extraction {
        angles: AnglePair {
            flexion,
            abduction: b.y.atan2(pxz),
        },
        gimbal: false,
    })
}

/// Signed flexion/abduction of `bone` in `frame`.
pub fn extract_angles<T: Real>(bone: Vec3<T>, frame: &BoneFrame<T>) -> Result<AnglePair<T>> {
    let local = frame.to_local(bone);
    match local_angles(local) {
        None => Err(Error::DegenerateBone { bone: 0 }),
        Some(e) if e.gimbal => Err(Error::GimbalDegenerate),
        Some(e) => Ok(e.angles),
    }
}

/// Unsigned angles from frame-local coordinates, before the octant lookup:
/// `θ_f = α(P_xz(b), z)`, `θ_a = α(P_xz(b), b)`.
pub fn unsigned_angles(local: Vec3) -> Result<AnglePair> {
    let ex = Vec3::new(1.0, 0.0, 0.0);
    let ez = Vec3::new(0.0, 0.0, 1.0);
    let pxz = project_onto_plane(local, ex, ez)?;
    if pxz.norm() < EPS {
        return Err(Error::GimbalDegenerate);
    }
    Ok(AnglePair {
        flexion: angle_between(pxz, ez)?,
        abduction: angle_between(pxz, local)?,
    })
}

/// Negate flexion when `b_x < 0` and abduction when `b_y < 0`.
pub fn octant_lookup(raw: AnglePair, local: Vec3) -> AnglePair {
    AnglePair {
        flexion: if local.x < 0.0 { -raw.flexion } else { raw.flexion },
        abduction: if local.y < 0.0 { -raw.abduction } else { raw.abduction },
    }
}

/// Frame-local unit direction with the given angles:
/// `(cos θ_a sin θ_f, sin θ_a, cos θ_a cos θ_f)`.
pub fn reconstruct_direction<T: Real>(a: &AnglePair<T>) -> Vec3<T> {
    let (sf, cf) = (a.flexion.sin(), a.flexion.cos());
    let (sa, ca) = (a.abduction.sin(), a.abduction.cos());
    Vec3::new(ca * sf, sa, ca * cf)
}

/// Child frame `R^θ F`: flex about `y` by `θ_f`, then abduct about the
/// flexed `-x` axis by `θ_a`. The child's `z` is the reconstructed direction.
pub fn propagate_frame<T: Real>(parent: &BoneFrame<T>, a: &AnglePair<T>) -> BoneFrame<T> {
    let (sf, cf) = (a.flexion.sin(), a.flexion.cos());
    let (sa, ca) = (a.abduction.sin(), a.abduction.cos());
    let x = Vec3::new(cf, T::zero(), -sf);
    let y = Vec3::new(-(sa * sf), ca, -(sa * cf));
    let z = Vec3::new(ca * sf, sa, ca * cf);
    BoneFrame {
        x: parent.to_world(x),
        y: parent.to_world(y),
        z: parent.to_world(z),
    }
}

/// Angles of all 15 finger bones, finger-major (PIP, DIP, TIP per finger).
#[derive(Clone, Copy, Debug)]
pub struct FingerAngles<T = f64> {
    pub angles: [AnglePair<T>; NUM_FINGER_BONES],
    pub gimbal: [bool; NUM_FINGER_BONES],
    /// Zero-length bones; only ever set in lenient mode, where their angles
    /// are reported as `(0, 0)`.
    pub degenerate: [bool; NUM_FINGER_BONES],
}

pub fn finger_angles<T: Real>(
    bones: &BoneSet<T>,
    palm: &PalmDescriptor<T>,
    lenient: bool,
) -> Result<FingerAngles<T>> {
    let frames = pip_frames(bones, palm)?;
    let zero = AnglePair {
        flexion: T::zero(),
        abduction: T::zero(),
    };
    let mut out = FingerAngles {
        angles: [zero; NUM_FINGER_BONES],
        gimbal: [false; NUM_FINGER_BONES],
        degenerate: [false; NUM_FINGER_BONES],
    };
    for (f, pip) in frames.iter().enumerate() {
        let mut frame = *pip;
        for level in 0..3 {
            let k = 3 * f + level;
            let local = frame.to_local(bones.finger(f, level));
            match local_angles(local) {
                Some(e) => {
                    out.angles[k] = e.angles;
                    out.gimbal[k] = e.gimbal;
                }
                None if lenient => out.degenerate[k] = true,
                None => return Err(Error::DegenerateBone { bone: NUM_FINGERS + k }),
            }
            frame = propagate_frame(&frame, &out.angles[k]);
        }
    }
    Ok(out)
}

/// The 15 angle pairs of a pose, failing on any degeneracy.
pub fn all_finger_angles(pose: &HandPose) -> Result<[AnglePair; NUM_FINGER_BONES]> {
    let bones = BoneSet::from_joints(&pose.to_vec3::<f64>());
    let palm = palm_descriptor(&bones)?;
    Ok(finger_angles(&bones, &palm, false)?.angles)
}

/// Forward kinematics: place the finger joints from root bones, finger-bone
/// lengths and angles. Inverse of [`all_finger_angles`] on finger joints.
pub fn synthesize_pose(
    root: [f64; 3],
    root_bones: [[f64; 3]; NUM_FINGERS],
    lengths: [f64; NUM_FINGER_BONES],
    angles: [AnglePair; NUM_FINGER_BONES],
) -> Result<HandPose> {
    if let Some(k) = lengths.iter().position(|&l| !(l > EPS) || !l.is_finite()) {
        return Err(Error::InvalidPose(format!(
            "finger bone length {k} must be positive, got {}",
            lengths[k]
        )));
    }
    let mut bones = BoneSet {
        bones: [Vec3::zero(); crate::hand::NUM_BONES],
    };
    for (f, rb) in root_bones.iter().enumerate() {
        bones.bones[f] = Vec3::from(*rb);
    }
    let palm = palm_descriptor(&bones)?;
    let frames = pip_frames(&bones, &palm)?;

    let root = Vec3::from(root);
    let mut joints = [root; NUM_JOINTS];
    for (f, pip) in frames.iter().enumerate() {
        let mut joint = root + bones.root(f);
        joints[finger_joint(f, 0)] = joint;
        let mut frame = *pip;
        for level in 0..3 {
            let k = 3 * f + level;
            let dir = frame.to_world(reconstruct_direction(&angles[k]));
            joint = joint + dir * lengths[k];
            joints[finger_joint(f, level + 1)] = joint;
            frame = propagate_frame(&frame, &angles[k]);
        }
    }
    HandPose::from_vec3(&joints)
}

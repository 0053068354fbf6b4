//! Canonical 21-joint right-hand skeleton.
//!
//! Joint 0 is the root. Finger `f` (0 = thumb, 1 = index, 2 = middle,
//! 3 = ring, 4 = pinky) owns joints `4f + 1 ..= 4f + 4` in chain order
//! MCP, PIP, DIP, TIP.
//!
//! Bones `0..5` are the root bones (root → MCP) of fingers 0..5. Bones
//! `5..20` are the finger bones, finger-major, each finger contributing its
//! PIP, DIP and TIP bone in that order. A bone is named after its child
//! joint and equals child minus parent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

pub const NUM_JOINTS: usize = 21;
pub const NUM_BONES: usize = 20;
pub const NUM_FINGERS: usize = 5;
pub const NUM_FINGER_BONES: usize = 15;
pub const ROOT_JOINT: usize = 0;

pub const FINGER_NAMES: [&str; NUM_FINGERS] = ["thumb", "index", "middle", "ring", "pinky"];

pub type Joints<T> = [Vec3<T>; NUM_JOINTS];

/// Joint index of `finger`'s `level`-th joint (0 = MCP … 3 = TIP).
pub const fn finger_joint(finger: usize, level: usize) -> usize {
    1 + 4 * finger + level
}

/// Bone index of `finger`'s `level`-th finger bone (0 = PIP, 1 = DIP, 2 = TIP).
pub const fn finger_bone(finger: usize, level: usize) -> usize {
    NUM_FINGERS + 3 * finger + level
}

/// `(parent joint, child joint)` of every bone.
pub const fn bone_joints(bone: usize) -> (usize, usize) {
    if bone < NUM_FINGERS {
        (ROOT_JOINT, finger_joint(bone, 0))
    } else {
        let finger = (bone - NUM_FINGERS) / 3;
        let level = (bone - NUM_FINGERS) % 3;
        (finger_joint(finger, level), finger_joint(finger, level + 1))
    }
}

/// Parent bone of `bone`, or `None` for a root bone.
pub const fn parent_bone(bone: usize) -> Option<usize> {
    if bone < NUM_FINGERS {
        None
    } else if (bone - NUM_FINGERS) % 3 == 0 {
        Some((bone - NUM_FINGERS) / 3)
    } else {
        Some(bone - 1)
    }
}

/// A right-hand pose: 21 joints in any consistent length unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; NUM_JOINTS]", into = "[[f64; 3]; NUM_JOINTS]")]
pub struct HandPose {
    joints: [[f64; 3]; NUM_JOINTS],
}

impl HandPose {
    pub fn new(joints: [[f64; 3]; NUM_JOINTS]) -> Result<Self> {
        for (j, p) in joints.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPose(format!("joint {j} has a non-finite coordinate")));
            }
        }
        Ok(HandPose { joints })
    }

    pub fn from_vec3(joints: &Joints<f64>) -> Result<Self> {
        HandPose::new(std::array::from_fn(|j| joints[j].into()))
    }

    pub fn joints(&self) -> &[[f64; 3]; NUM_JOINTS] {
        &self.joints
    }

    pub fn joint(&self, j: usize) -> [f64; 3] {
        self.joints[j]
    }

    pub fn to_vec3<T: Real>(&self) -> Joints<T> {
        std::array::from_fn(|j| Vec3::constant(self.joints[j]))
    }

    /// Left hands enter the right-hand model by negating x.
    pub fn mirrored(&self) -> Self {
        let mut joints = self.joints;
        for p in &mut joints {
            p[0] = -p[0];
        }
        HandPose { joints }
    }

    /// Apply `p ↦ R p + t` to every joint; `r` is row-major.
    pub fn transformed(&self, r: &[[f64; 3]; 3], t: [f64; 3]) -> Self {
        let joints = self.joints.map(|p| {
            std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i])
        });
        HandPose { joints }
    }

    pub fn scaled(&self, s: f64) -> Self {
        HandPose {
            joints: self.joints.map(|p| p.map(|c| c * s)),
        }
    }

    pub fn translated(&self, t: [f64; 3]) -> Self {
        HandPose {
            joints: self.joints.map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]]),
        }
    }

    pub fn flat(&self) -> [f64; 3 * NUM_JOINTS] {
        let mut out = [0.0; 3 * NUM_JOINTS];
        for (j, p) in self.joints.iter().enumerate() {
            out[3 * j..3 * j + 3].copy_from_slice(p);
        }
        out
    }

    pub fn from_flat(flat: &[f64; 3 * NUM_JOINTS]) -> Result<Self> {
        HandPose::new(std::array::from_fn(|j| [flat[3 * j], flat[3 * j + 1], flat[3 * j + 2]]))
    }
}

impl TryFrom<[[f64; 3]; NUM_JOINTS]> for HandPose {
    type Error = Error;
    fn try_from(joints: [[f64; 3]; NUM_JOINTS]) -> Result<Self> {
        HandPose::new(joints)
    }
}

impl From<HandPose> for [[f64; 3]; NUM_JOINTS] {
    fn from(p: HandPose) -> Self {
        p.joints
    }
}

/// The 20 bone vectors of a pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoneSet<T = f64> {
    pub bones: [Vec3<T>; NUM_BONES],
}

impl<T: Real> BoneSet<T> {
    pub fn from_joints(joints: &Joints<T>) -> Self {
        BoneSet {
            bones: std::array::from_fn(|b| {
                let (p, c) = bone_joints(b);
                joints[c] - joints[p]
            }),
        }
    }

    pub fn root(&self, finger: usize) -> Vec3<T> {
        self.bones[finger]
    }

    pub fn finger(&self, finger: usize, level: usize) -> Vec3<T> {
        self.bones[finger_bone(finger, level)]
    }

    pub fn lengths(&self) -> [T; NUM_BONES] {
        self.bones.map(|b| b.norm())
    }
}

pub fn bones_from_pose(pose: &HandPose) -> BoneSet {
    BoneSet::from_joints(&pose.to_vec3())
}

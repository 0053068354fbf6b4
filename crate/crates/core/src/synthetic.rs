//! Seeded generators for plausible hands, rigid motions and noise.
//!
//! Poses are in "unit scale": the middle-finger root bone has length close
//! to 1. Joint angles are drawn from per-bone boxes and turned into joints by
//! forward kinematics, so generated poses are never degenerate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angles::{synthesize_pose, AnglePair};
use crate::error::Result;
use crate::hand::{HandPose, NUM_FINGERS, NUM_FINGER_BONES, NUM_JOINTS};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flexion and abduction ranges for one bone, radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleBox {
    pub flexion: [f64; 2],
    pub abduction: [f64; 2],
}

/// Ranges used by [`random_hand`], finger-major.
pub fn default_angle_boxes() -> [AngleBox; NUM_FINGER_BONES] {
    std::array::from_fn(|k| {
        let (finger, level) = (k / 3, k % 3);
        match (finger, level) {
            (0, 0) => AngleBox { flexion: [-0.3, 0.8], abduction: [-0.4, 0.4] },
            (0, _) => AngleBox { flexion: [-0.1, 1.0], abduction: [-0.15, 0.15] },
            (_, 0) => AngleBox { flexion: [-0.2, 1.3], abduction: [-0.25, 0.25] },
            (_, 1) => AngleBox { flexion: [0.0, 1.4], abduction: [-0.08, 0.08] },
            _ => AngleBox { flexion: [0.0, 1.0], abduction: [-0.08, 0.08] },
        }
    })
}

/// In-plane spread angle and length of each root bone, and the lift of its
/// tip towards the palm side.
const ROOT_SPREAD: [f64; NUM_FINGERS] = [-0.75, -0.22, 0.0, 0.2, 0.38];
const ROOT_LENGTH: [f64; NUM_FINGERS] = [0.45, 0.95, 1.0, 0.92, 0.85];
const ROOT_LIFT: [f64; NUM_FINGERS] = [0.12, 0.03, 0.0, 0.03, 0.08];
const FINGER_LENGTH: [[f64; 3]; NUM_FINGERS] = [
    [0.6, 0.45, 0.35],
    [0.55, 0.33, 0.25],
    [0.6, 0.37, 0.27],
    [0.55, 0.35, 0.26],
    [0.45, 0.27, 0.23],
];

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    rng.random_range(range[0]..=range[1])
}

fn jitter(rng: &mut impl Rng, x: f64, rel: f64) -> f64 {
    x * (1.0 + rng.random_range(-rel..=rel))
}

/// Root bones of a random palm in the canonical orientation (fingers along
/// +z, spread along x, palm side +y).
pub fn random_root_bones(rng: &mut impl Rng) -> [[f64; 3]; NUM_FINGERS] {
    std::array::from_fn(|f| {
        let spread = ROOT_SPREAD[f] + rng.random_range(-0.04..=0.04);
        let len = jitter(rng, ROOT_LENGTH[f], 0.05);
        let lift = ROOT_LIFT[f] + rng.random_range(-0.02..=0.02);
        let (s, c) = spread.sin_cos();
        let dir = [s, lift, c];
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        dir.map(|x| x * len / n)
    })
}

pub fn random_angles(rng: &mut impl Rng, boxes: &[AngleBox; NUM_FINGER_BONES]) -> [AnglePair; NUM_FINGER_BONES] {
    std::array::from_fn(|k| AnglePair::new(uniform(rng, boxes[k].flexion), uniform(rng, boxes[k].abduction)))
}

/// A random right hand in canonical orientation with its root at the origin.
pub fn random_hand(rng: &mut impl Rng) -> Result<HandPose> {
    random_hand_with(rng, &default_angle_boxes())
}

pub fn random_hand_with(rng: &mut impl Rng, boxes: &[AngleBox; NUM_FINGER_BONES]) -> Result<HandPose> {
    let roots = random_root_bones(rng);
    let lengths: [f64; NUM_FINGER_BONES] = std::array::from_fn(|k| jitter(rng, FINGER_LENGTH[k / 3][k % 3], 0.05));
    let angles = random_angles(rng, boxes);
    synthesize_pose([0.0; 3], roots, lengths, angles)
}

/// Uniformly distributed rotation (unit quaternion by Shoemake's method),
/// row-major.
pub fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let tau = std::f64::consts::TAU;
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn random_translation(rng: &mut impl Rng, scale: f64) -> [f64; 3] {
    std::array::from_fn(|_| rng.random_range(-scale..=scale))
}

/// Random hand under a random rigid motion.
pub fn random_posed_hand(rng: &mut impl Rng) -> Result<HandPose> {
    let hand = random_hand(rng)?;
    let r = random_rotation(rng);
    let t = random_translation(rng, 2.0);
    Ok(hand.transformed(&r, t))
}

/// Add independent uniform noise in `[-amplitude, amplitude]` to every
/// coordinate.
pub fn perturb(pose: &HandPose, rng: &mut impl Rng, amplitude: f64) -> Result<HandPose> {
    let joints: [[f64; 3]; NUM_JOINTS] =
        std::array::from_fn(|j| pose.joint(j).map(|c| c + rng.random_range(-amplitude..=amplitude)));
    HandPose::new(joints)
}

/// `n` posed hands from `seed`.
pub fn corpus(seed: u64, n: usize) -> Result<Vec<HandPose>> {
    let mut rng = rng(seed);
    (0..n).map(|_| random_posed_hand(&mut rng)).collect()
}

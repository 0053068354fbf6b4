mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use handbmc::angles::{
    all_finger_angles, extract_angles, finger_angles, pip_frames, propagate_frame, reconstruct_direction,
    synthesize_pose, AnglePair, BoneFrame,
};
use handbmc::hand::{bones_from_pose, finger_joint, HandPose, NUM_FINGERS, NUM_FINGER_BONES, NUM_JOINTS};
use handbmc::palm::palm_descriptor;
use handbmc::synthetic::{self, random_hand, random_posed_hand, random_rotation, random_translation};
use handbmc::Vec3;
use proptest::prelude::*;
use rand::Rng;

fn angle_error(a: &[AnglePair], b: &[AnglePair]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.flexion - y.flexion).abs().max((x.abduction - y.abduction).abs()))
        .fold(0.0, f64::max)
}

fn frame_from(r: &[[f64; 3]; 3]) -> BoneFrame {
    BoneFrame {
        x: Vec3::new(r[0][0], r[1][0], r[2][0]),
        y: Vec3::new(r[0][1], r[1][1], r[2][1]),
        z: Vec3::new(r[0][2], r[1][2], r[2][2]),
    }
}

#[test]
fn extraction_examples() {
    let id = BoneFrame::identity();
    let a = extract_angles(Vec3::new(1.0, 0.0, 1.0), &id).unwrap();
    assert!((a.flexion - PI / 4.0).abs() < 1e-15 && a.abduction == 0.0);
    let b = extract_angles(Vec3::new(-1.0, 0.0, 1.0), &id).unwrap();
    assert!((b.flexion + PI / 4.0).abs() < 1e-15 && b.abduction == 0.0);
    let c = extract_angles(Vec3::new(0.0, 0.0, 1.0), &id).unwrap();
    assert_eq!((c.flexion, c.abduction), (0.0, 0.0));
}

#[test]
fn reconstruction_examples() {
    assert_eq!(reconstruct_direction(&AnglePair::new(0.0, 0.0)).values(), [0.0, 0.0, 1.0]);
    let d = reconstruct_direction(&AnglePair::new(PI / 4.0, 0.0)).values();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(common::max_abs_diff(&d, &[h, 0.0, h]) < 1e-15);
}

#[test]
fn propagation_examples() {
    let mut rng = synthetic::rng(1);
    let parent = frame_from(&random_rotation(&mut rng));
    let same = propagate_frame(&parent, &AnglePair::new(0.0, 0.0));
    for (a, b) in [(same.x, parent.x), (same.y, parent.y), (same.z, parent.z)] {
        assert!((a - b).norm() < 1e-15);
    }
    let quarter = propagate_frame(&parent, &AnglePair::new(FRAC_PI_2, 0.0));
    assert!((quarter.z - parent.x).norm() < 1e-15);
}

#[test]
fn three_step_chains_round_trip() {
    let mut rng = synthetic::rng(2);
    for _ in 0..1000 {
        let mut frame = frame_from(&random_rotation(&mut rng));
        for _ in 0..3 {
            let a = AnglePair::new(rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5));
            let bone = frame.to_world(reconstruct_direction(&a)) * rng.random_range(0.1..3.0);
            let back = extract_angles(bone, &frame).unwrap();
            assert!(angle_error(&[a], &[back]) < 1e-9, "{a:?} vs {back:?}");
            frame = propagate_frame(&frame, &back);
            assert!(frame.orthonormality_error() < 1e-9);
        }
    }
}

#[test]
fn flat_fan_frames() {
    let spreads = [-0.7, -0.25, 0.0, 0.2, 0.45];
    let mut joints = [[0.0; 3]; NUM_JOINTS];
    for f in 0..NUM_FINGERS {
        let (s, c) = f64::sin_cos(spreads[f]);
        for level in 0..4 {
            joints[finger_joint(f, level)] = [s * (1.0 + level as f64), 0.0, c * (1.0 + level as f64)];
        }
    }
    let bones = bones_from_pose(&HandPose::new(joints).unwrap());
    let palm = palm_descriptor(&bones).unwrap();
    for frame in pip_frames(&bones, &palm).unwrap() {
        assert_eq!(frame.z.y, 0.0);
        assert_eq!(frame.x.x, 0.0);
        assert_eq!(frame.x.z, 0.0);
        assert_eq!(frame.x.y.abs(), 1.0);
        assert!(frame.orthonormality_error() < 1e-15);
    }
}

#[test]
fn frames_rotate_with_the_pose() {
    let mut rng = synthetic::rng(3);
    for _ in 0..100 {
        let pose = random_posed_hand(&mut rng).unwrap();
        let r = random_rotation(&mut rng);
        let rot = |v: Vec3| {
            let a = v.values();
            Vec3::new(
                r[0][0] * a[0] + r[0][1] * a[1] + r[0][2] * a[2],
                r[1][0] * a[0] + r[1][1] * a[1] + r[1][2] * a[2],
                r[2][0] * a[0] + r[2][1] * a[1] + r[2][2] * a[2],
            )
        };
        let frames = |p: &HandPose| {
            let bones = bones_from_pose(p);
            pip_frames(&bones, &palm_descriptor(&bones).unwrap()).unwrap()
        };
        let (a, b) = (frames(&pose), frames(&pose.transformed(&r, [0.0; 3])));
        for (fa, fb) in a.iter().zip(&b) {
            assert!(fb.orthonormality_error() < 1e-9);
            for (u, v) in [(fa.x, fb.x), (fa.y, fb.y), (fa.z, fb.z)] {
                assert!((rot(u) - v).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn straight_fingers_continue_their_roots() {
    let mut rng = synthetic::rng(4);
    let roots = synthetic::random_root_bones(&mut rng);
    let pose = synthesize_pose([0.0; 3], roots, [0.5; NUM_FINGER_BONES], [AnglePair::new(0.0, 0.0); NUM_FINGER_BONES]).unwrap();
    let bones = bones_from_pose(&pose);
    for f in 0..NUM_FINGERS {
        let dir = bones.root(f).normalized().unwrap();
        for level in 0..3 {
            assert!((bones.finger(f, level) - dir * 0.5).norm() < 1e-14);
        }
    }
}

#[test]
fn corpus_samples_reproduce_through_forward_kinematics() {
    let mut rng = synthetic::rng(5);
    for _ in 0..200 {
        let pose = random_posed_hand(&mut rng).unwrap();
        let bones = bones_from_pose(&pose);
        let angles = all_finger_angles(&pose).unwrap();
        let roots = std::array::from_fn(|f| bones.root(f).values());
        let lengths = std::array::from_fn(|k| bones.finger(k / 3, k % 3).norm());
        let rebuilt = synthesize_pose(pose.joint(0), roots, lengths, angles).unwrap();
        let err = common::max_abs_diff(&pose.flat(), &rebuilt.flat());
        assert!(err < 1e-9, "joint error {err:e}");
    }
}

#[test]
fn scaled_and_rotated_poses_keep_their_angles() {
    let mut rng = synthetic::rng(6);
    for _ in 0..500 {
        let pose = random_hand(&mut rng).unwrap();
        let base = all_finger_angles(&pose).unwrap();
        let r = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 3.0);
        let moved = all_finger_angles(&pose.transformed(&r, t)).unwrap();
        let scaled = all_finger_angles(&pose.scaled(rng.random_range(0.01..100.0))).unwrap();
        assert!(angle_error(&base, &moved) < 1e-9);
        assert!(angle_error(&base, &scaled) < 1e-9);
    }
}

#[test]
fn degenerate_finger_bone_is_reported_or_skipped() {
    let mut rng = synthetic::rng(7);
    let pose = random_hand(&mut rng).unwrap();
    let mut joints = *pose.joints();
    joints[finger_joint(2, 2)] = joints[finger_joint(2, 1)];
    let broken = HandPose::new(joints).unwrap();
    assert!(all_finger_angles(&broken).is_err());
    let bones = bones_from_pose(&broken);
    let palm = palm_descriptor(&bones).unwrap();
    let lenient = finger_angles(&bones, &palm, true).unwrap();
    assert!(lenient.degenerate[3 * 2 + 1]);
    assert_eq!(lenient.degenerate.iter().filter(|d| **d).count(), 1);
}

proptest! {
    #[test]
    fn reconstruct_then_extract(f in -PI + 1e-9..PI - 1e-9, a in -FRAC_PI_2 + 1e-6..FRAC_PI_2 - 1e-6, seed in any::<u64>()) {
        let frame = frame_from(&random_rotation(&mut synthetic::rng(seed)));
        let pair = AnglePair::new(f, a);
        let back = extract_angles(frame.to_world(reconstruct_direction(&pair)), &frame).unwrap();
        prop_assert!((back.abduction - a).abs() < 1e-9);
        // Flexion is only determined when the bone is not along ±y.
        prop_assert!((back.flexion - f).abs() * a.cos() < 1e-9);
    }

    #[test]
    fn propagated_frames_stay_right_handed(seed in any::<u64>(), steps in prop::collection::vec((-PI..PI, -1.5..1.5f64), 1..20)) {
        let mut frame = frame_from(&random_rotation(&mut synthetic::rng(seed)));
        for (f, a) in steps {
            frame = propagate_frame(&frame, &AnglePair::new(f, a));
            prop_assert!(frame.orthonormality_error() < 1e-9);
        }
    }

    #[test]
    fn forward_kinematics_round_trip(seed in any::<u64>()) {
        let mut rng = synthetic::rng(seed);
        let roots = synthetic::random_root_bones(&mut rng);
        let lengths: [f64; NUM_FINGER_BONES] = std::array::from_fn(|_| rng.random_range(0.1..1.0));
        let angles: [AnglePair; NUM_FINGER_BONES] =
            std::array::from_fn(|_| AnglePair::new(rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5)));
        let pose = synthesize_pose(synthetic::random_translation(&mut rng, 1.0), roots, lengths, angles).unwrap();
        let back = all_finger_angles(&pose).unwrap();
        prop_assert!(angle_error(&angles, &back) < 1e-9);
    }
}

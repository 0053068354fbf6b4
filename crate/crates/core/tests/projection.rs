mod common;

use common::*;
use handbmc::hand::{finger_bone, finger_joint, HandPose};
use handbmc::losses::{bmc_value, DegeneracyPolicy, LossWeights};
use handbmc::projection::{project_to_feasible, ProjectionConfig};
use handbmc::synthetic::{self, perturb, random_rotation, random_translation};
use handbmc::Error;
use proptest::prelude::*;
use rand::Rng;

fn stretched(pose: &HandPose, finger: usize, level: usize, factor: f64) -> HandPose {
    // Move the bone's child joint and everything distal to it.
    let mut joints = *pose.joints();
    let (p, c) = (finger_joint(finger, level), finger_joint(finger, level + 1));
    let shift: [f64; 3] = std::array::from_fn(|i| (joints[c][i] - joints[p][i]) * (factor - 1.0));
    for l in level + 1..4 {
        let j = finger_joint(finger, l);
        joints[j] = std::array::from_fn(|i| joints[j][i] + shift[i]);
    }
    HandPose::new(joints).unwrap()
}

#[test]
fn feasible_input_is_returned_unchanged() {
    let (corpus, limits) = fitted(1, 50);
    for pose in corpus.iter().take(10) {
        let r = project_to_feasible(pose, &limits, &LossWeights::default(), &ProjectionConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(&r.pose, pose);
        assert_eq!(r.trace, vec![0.0]);
        assert!(r.converged && !r.stalled);
    }
}

#[test]
fn stretched_bone_is_pulled_back() {
    let (corpus, limits) = fitted(2, 80);
    let weights = LossWeights::default();
    let b = finger_bone(2, 0);
    let pose = &corpus[11];
    let len = |p: &HandPose| {
        let (a, c) = (p.joint(finger_joint(2, 0)), p.joint(finger_joint(2, 1)));
        (0..3).map(|i| (a[i] - c[i]).powi(2)).sum::<f64>().sqrt()
    };
    let bad = stretched(pose, 2, 0, 1.2 * limits.bone_length[b].upper() / len(pose));
    assert!(bmc_value(&bad, &limits, &weights, DegeneracyPolicy::Strict).unwrap() > 1e-4);
    let r = project_to_feasible(&bad, &limits, &weights, &ProjectionConfig::default()).unwrap();
    assert!(r.converged, "stopped at {} after {} iterations", r.report.total, r.iterations);
    assert!(r.report.total < 1e-6);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn configuration_is_validated() {
    let (corpus, limits) = fitted(3, 20);
    for config in [
        ProjectionConfig { backtrack: 1.0, ..Default::default() },
        ProjectionConfig { armijo: 0.0, ..Default::default() },
        ProjectionConfig { threshold: -1.0, ..Default::default() },
        ProjectionConfig { anchor: f64::NAN, ..Default::default() },
        ProjectionConfig { initial_step: 0.0, ..Default::default() },
    ] {
        assert!(matches!(
            project_to_feasible(&corpus[0], &limits, &LossWeights::default(), &config),
            Err(Error::InvalidConfig(_))
        ));
    }
}

#[test]
fn anchored_projection_stays_monotone() {
    let (corpus, limits) = fitted(4, 60);
    let mut rng = synthetic::rng(5);
    let config = ProjectionConfig {
        anchor: 0.01,
        ..Default::default()
    };
    for i in 0..10 {
        let pose = perturb(&corpus[i], &mut rng, 0.05).unwrap();
        let r = project_to_feasible(&pose, &limits, &LossWeights::default(), &config).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.report.total <= bmc_value(&pose, &limits, &LossWeights::default(), DegeneracyPolicy::lenient()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heavy_perturbations_descend_monotonically(seed in any::<u64>(), amp in 0.05..0.3f64) {
        let (corpus, limits) = fitted(seed % 3, 60);
        let mut rng = synthetic::rng(seed);
        let pose = perturb(&corpus[rng.random_range(0..corpus.len())], &mut rng, amp).unwrap();
        let config = ProjectionConfig { max_iterations: 300, ..Default::default() };
        let r = project_to_feasible(&pose, &limits, &LossWeights::default(), &config).unwrap();
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(r.trace.len(), r.iterations + 1);
        prop_assert_eq!(*r.trace.last().unwrap(), r.report.total);
    }

    #[test]
    fn projection_is_rigidly_equivariant(seed in any::<u64>()) {
        let (corpus, limits) = fitted(seed % 3, 60);
        let mut rng = synthetic::rng(seed);
        let pose = perturb(&corpus[rng.random_range(0..corpus.len())], &mut rng, 0.02).unwrap();
        let rot = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 1.0);
        let config = ProjectionConfig { max_iterations: 200, ..Default::default() };
        let weights = LossWeights::default();
        let a = project_to_feasible(&pose, &limits, &weights, &config).unwrap();
        let b = project_to_feasible(&pose.transformed(&rot, t), &limits, &weights, &config).unwrap();
        prop_assume!(a.iterations == b.iterations);
        let diff = max_abs_diff(&a.pose.transformed(&rot, t).flat(), &b.pose.flat());
        prop_assert!(diff < 1e-6, "max joint difference {:e}", diff);
    }
}

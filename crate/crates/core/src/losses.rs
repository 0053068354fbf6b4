//! Constraint losses and their weighted composition.
//!
//! ```text
//! L_BL  = mean over 20 bones of I(‖b_i‖; b_min, b_max)
//! L_RB  = (Σ I(c_i) + Σ I(φ_i)) / 4
//! L_A   = mean over 15 finger bones of the hull loss of (θ_f, θ_a)
//! L_BMC = λ_BL·L_BL + λ_RB·L_RB + λ_A·L_A
//! ```

use serde::{Deserialize, Serialize};

use crate::angles::{finger_angles, AnglePair};
use crate::autodiff::{record, GradientReport, PoseLoss};
use crate::error::{Error, Result};
use crate::geometry::{interval_penalty, Interval};
use crate::hand::{BoneSet, HandPose, Joints, NUM_BONES, NUM_FINGER_BONES, NUM_JOINTS};
use crate::hull::{angle_loss_term, AngleHull};
use crate::limits::LimitSet;
use crate::palm::{palm_descriptor, root_bone_penalties, NUM_PALM_GAPS};
use crate::scalar::Real;

/// A pose counts as feasible when its total loss is below this.
pub const FEASIBLE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub bone_length: f64,
    pub root_bone: f64,
    pub angle: f64,
    pub joints_2d: f64,
    pub relative_depth: f64,
    pub root_depth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            bone_length: 0.1,
            root_bone: 0.1,
            angle: 0.01,
            joints_2d: 1.0,
            relative_depth: 5.0,
            root_depth: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("bone_length", self.bone_length),
            ("root_bone", self.root_bone),
            ("angle", self.angle),
            ("joints_2d", self.joints_2d),
            ("relative_depth", self.relative_depth),
            ("root_depth", self.root_depth),
        ];
        for (name, w) in all {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidConfig(format!("weight {name} must be finite and nonnegative, got {w}")));
            }
        }
        Ok(())
    }
}

/// How palm and bone degeneracies are handled during evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DegeneracyPolicy {
    /// Propagate the degeneracy error.
    #[default]
    Strict,
    /// Replace every term that cannot be evaluated by a constant `penalty`
    /// with zero gradient.
    Lenient { penalty: f64 },
}

impl DegeneracyPolicy {
    pub const DEFAULT_PENALTY: f64 = 10.0;

    pub fn lenient() -> Self {
        DegeneracyPolicy::Lenient {
            penalty: Self::DEFAULT_PENALTY,
        }
    }
}

pub fn bone_length_loss<T: Real>(bones: &BoneSet<T>, limits: &[Interval; NUM_BONES]) -> T {
    let lengths = bones.lengths();
    let sum = (0..NUM_BONES).fold(T::zero(), |acc, b| acc + interval_penalty(lengths[b], &limits[b]));
    sum / NUM_BONES as f64
}

pub fn angle_constraint_loss<T: Real>(
    angles: &[AnglePair<T>; NUM_FINGER_BONES],
    hulls: &[AngleHull; NUM_FINGER_BONES],
) -> T {
    let sum = (0..NUM_FINGER_BONES).fold(T::zero(), |acc, k| acc + angle_loss_term(&hulls[k], &angles[k]));
    sum / NUM_FINGER_BONES as f64
}

/// Per-quantity penalties, useful for locating a violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub bone_length: [f64; NUM_BONES],
    pub curvature: [f64; NUM_PALM_GAPS],
    pub angular_distance: [f64; NUM_PALM_GAPS],
    pub angle: [f64; NUM_FINGER_BONES],
}

impl Violations {
    fn empty() -> Self {
        Violations {
            bone_length: [0.0; NUM_BONES],
            curvature: [0.0; NUM_PALM_GAPS],
            angular_distance: [0.0; NUM_PALM_GAPS],
            angle: [0.0; NUM_FINGER_BONES],
        }
    }
}

#[derive(Clone, Debug)]
pub struct BmcTerms<T> {
    pub bone_length: T,
    pub root_bone: T,
    pub angle: T,
    pub total: T,
    pub violations: Violations,
    /// Some term was replaced by the lenient penalty.
    pub degenerate: bool,
    /// Bones whose frame-local direction was parallel to the y axis.
    pub gimbal: [bool; NUM_FINGER_BONES],
}

/// Evaluate all three terms and the weighted total.
pub fn bmc_terms<T: Real>(
    joints: &Joints<T>,
    limits: &LimitSet,
    weights: &LossWeights,
    policy: DegeneracyPolicy,
) -> Result<BmcTerms<T>> {
    let bones = BoneSet::from_joints(joints);
    let mut violations = Violations::empty();
    let lengths = bones.lengths();
    for b in 0..NUM_BONES {
        violations.bone_length[b] = interval_penalty(lengths[b], &limits.bone_length[b]).val();
    }
    let bone_length = bone_length_loss(&bones, &limits.bone_length);

    let mut degenerate = false;
    let mut gimbal = [false; NUM_FINGER_BONES];
    let (root_bone, angle) = match (palm_descriptor(&bones), policy) {
        (Ok(palm), _) => {
            let rb = root_bone_penalties(&palm, &limits.root_bone_limits());
            for (i, (c, p)) in rb.iter().enumerate() {
                violations.curvature[i] = c.val();
                violations.angular_distance[i] = p.val();
            }
            let sum = rb.into_iter().fold(T::zero(), |acc, (c, p)| acc + c + p);
            let root_bone = sum / NUM_PALM_GAPS as f64;

            let lenient = matches!(policy, DegeneracyPolicy::Lenient { .. });
            let fa = finger_angles(&bones, &palm, lenient)?;
            gimbal = fa.gimbal;
            let mut sum = T::zero();
            for k in 0..NUM_FINGER_BONES {
                let term = match policy {
                    DegeneracyPolicy::Lenient { penalty } if fa.degenerate[k] => {
                        degenerate = true;
                        T::cst(penalty)
                    }
                    _ => angle_loss_term(&limits.angle_hulls[k], &fa.angles[k]),
                };
                violations.angle[k] = term.val();
                sum = sum + term;
            }
            (root_bone, sum / NUM_FINGER_BONES as f64)
        }
        (Err(e), DegeneracyPolicy::Strict) => return Err(e),
        (Err(_), DegeneracyPolicy::Lenient { penalty }) => {
            degenerate = true;
            violations.curvature = [penalty; NUM_PALM_GAPS];
            violations.angular_distance = [penalty; NUM_PALM_GAPS];
            violations.angle = [penalty; NUM_FINGER_BONES];
            (T::cst(penalty), T::cst(penalty))
        }
    };

    let total = bone_length * weights.bone_length + root_bone * weights.root_bone + angle * weights.angle;
    Ok(BmcTerms {
        bone_length,
        root_bone,
        angle,
        total,
        violations,
        degenerate,
        gimbal,
    })
}

/// `L_BMC` as a [`PoseLoss`], usable with [`crate::autodiff::grad`].
#[derive(Clone, Copy, Debug)]
pub struct BmcObjective<'a> {
    pub limits: &'a LimitSet,
    pub weights: &'a LossWeights,
    pub policy: DegeneracyPolicy,
}

impl PoseLoss for BmcObjective<'_> {
    fn eval<T: Real>(&self, joints: &Joints<T>) -> Result<T> {
        Ok(bmc_terms(joints, self.limits, self.weights, self.policy)?.total)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LossReport {
    pub bone_length: f64,
    pub root_bone: f64,
    pub angle: f64,
    pub total: f64,
    pub feasible: bool,
    pub degenerate: bool,
    pub violations: Violations,
    pub gradient: GradientReport,
}

impl LossReport {
    /// Names of the terms with a nonzero value.
    pub fn violated_terms(&self) -> Vec<&'static str> {
        [
            ("bone_length", self.bone_length),
            ("root_bone", self.root_bone),
            ("angle", self.angle),
        ]
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(n, _)| n)
        .collect()
    }
}

/// Values, per-quantity breakdown and gradient of `L_BMC` at `pose`.
pub fn bmc_loss(
    pose: &HandPose,
    limits: &LimitSet,
    weights: &LossWeights,
    policy: DegeneracyPolicy,
) -> Result<LossReport> {
    let (gradient, (bl, rb, a, violations, degenerate)) = record(pose, |joints| {
        let t = bmc_terms(joints, limits, weights, policy)?;
        Ok((
            t.total,
            (t.bone_length.value(), t.root_bone.value(), t.angle.value(), t.violations, t.degenerate),
        ))
    })?;
    Ok(LossReport {
        bone_length: bl,
        root_bone: rb,
        angle: a,
        total: gradient.value,
        feasible: gradient.value < FEASIBLE_THRESHOLD,
        degenerate,
        violations,
        gradient,
    })
}

/// `L_BMC` without the gradient.
pub fn bmc_value(pose: &HandPose, limits: &LimitSet, weights: &LossWeights, policy: DegeneracyPolicy) -> Result<f64> {
    Ok(bmc_terms(&pose.to_vec3::<f64>(), limits, weights, policy)?.total)
}

/// Labels for the full training objective.
#[derive(Clone, Debug)]
pub struct TrainingTargets<'a> {
    pub joints_2d: &'a [[f64; 2]; NUM_JOINTS],
    pub relative_depth: &'a [f64; NUM_JOINTS],
    pub root_depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLoss {
    pub joints_2d: f64,
    pub relative_depth: f64,
    pub root_depth: f64,
    pub bmc: f64,
    pub total: f64,
}

fn mean_abs(a: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = a.fold((0.0, 0usize), |(s, n), x| (s + x.abs(), n + 1));
    sum / n as f64
}

/// Full training objective as mean absolute errors on the 2D keypoints,
/// relative depths and root depth, plus `L_BMC` of the predicted 3D pose.
/// Value only.
pub fn training_loss(
    predicted: &TrainingTargets<'_>,
    labels: &TrainingTargets<'_>,
    pose: &HandPose,
    limits: &LimitSet,
    weights: &LossWeights,
    policy: DegeneracyPolicy,
) -> Result<TrainingLoss> {
    let joints_2d = mean_abs(
        predicted
            .joints_2d
            .iter()
            .zip(labels.joints_2d)
            .flat_map(|(p, l)| [p[0] - l[0], p[1] - l[1]]),
    );
    let relative_depth = mean_abs(predicted.relative_depth.iter().zip(labels.relative_depth).map(|(p, l)| p - l));
    let root_depth = (predicted.root_depth - labels.root_depth).abs();
    let bmc = bmc_value(pose, limits, weights, policy)?;
    let total = weights.joints_2d * joints_2d + weights.relative_depth * relative_depth + weights.root_depth * root_depth + bmc;
    Ok(TrainingLoss {
        joints_2d,
        relative_depth,
        root_depth,
        bmc,
        total,
    })
}

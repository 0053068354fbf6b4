//! Gradient descent onto the feasible set.
//!
//! Minimizes `L_BMC(J) + μ ‖J − J_input‖²` with Armijo backtracking. Every
//! accepted step satisfies `f(J − αg) ≤ f(J) − c α ‖g‖²`, so the objective
//! trace never increases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::{HandPose, NUM_JOINTS};
use crate::limits::LimitSet;
use crate::losses::{bmc_loss, bmc_value, DegeneracyPolicy, LossReport, LossWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub max_iterations: usize,
    /// Stop once `L_BMC` drops below this.
    pub threshold: f64,
    /// Weight `μ` of the anchor term.
    pub anchor: f64,
    /// First trial step length along the normalized gradient.
    pub initial_step: f64,
    pub backtrack: f64,
    /// Sufficient-decrease constant `c`.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            max_iterations: 2000,
            threshold: 1e-6,
            anchor: 0.0,
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("projection {what}")));
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.anchor >= 0.0 && self.anchor.is_finite()) {
            return bad("anchor weight must be finite and nonnegative");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial step must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtracking factor must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub pose: HandPose,
    /// Objective value at the input and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The line search failed to decrease the objective; `pose` is the best
    /// iterate found.
    pub stalled: bool,
    pub report: LossReport,
}

fn anchor_term(pose: &HandPose, input: &HandPose, mu: f64) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let (a, b) = (pose.flat(), input.flat());
    mu * a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

pub fn project_to_feasible(
    pose: &HandPose,
    limits: &LimitSet,
    weights: &LossWeights,
    config: &ProjectionConfig,
) -> Result<ProjectionResult> {
    config.validate()?;
    let policy = DegeneracyPolicy::lenient();
    let mu = config.anchor;
    let mut current = pose.clone();
    let mut report = bmc_loss(&current, limits, weights, policy)?;
    let mut f = report.total + anchor_term(&current, pose, mu);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut stalled = false;

    while report.total >= config.threshold && iterations < config.max_iterations {
        let x = current.flat();
        let x0 = pose.flat();
        let mut g = report.gradient.flat();
        for i in 0..3 * NUM_JOINTS {
            g[i] += 2.0 * mu * (x[i] - x0[i]);
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if !(gg > 0.0) || !gg.is_finite() {
            stalled = true;
            break;
        }
        let mut alpha = config.initial_step / gg.sqrt();
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial: [f64; 3 * NUM_JOINTS] = std::array::from_fn(|i| x[i] - alpha * g[i]);
            if let Ok(candidate) = HandPose::from_flat(&trial) {
                if let Ok(value) = bmc_value(&candidate, limits, weights, policy) {
                    let ft = value + anchor_term(&candidate, pose, mu);
                    if ft <= f - config.armijo * alpha * gg {
                        accepted = Some((candidate, ft));
                        break;
                    }
                }
            }
            alpha *= config.backtrack;
        }
        let Some((next, ft)) = accepted else {
            stalled = true;
            break;
        };
        current = next;
        f = ft;
        trace.push(f);
        iterations += 1;
        report = bmc_loss(&current, limits, weights, policy)?;
    }

    Ok(ProjectionResult {
        converged: report.total < config.threshold,
        pose: current,
        trace,
        iterations,
        stalled,
        report,
    })
}

//! Central-difference checks of tape gradients.

use crate::autodiff::{grad, GradientReport, PoseLoss};
use crate::error::Result;
use crate::hand::{HandPose, NUM_JOINTS};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central differences of `loss` in all 63 coordinates.
pub fn finite_difference<L: PoseLoss + ?Sized>(loss: &L, pose: &HandPose, step: f64) -> Result<[[f64; 3]; NUM_JOINTS]> {
    let mut out = [[0.0; 3]; NUM_JOINTS];
    let base = pose.flat();
    for i in 0..3 * NUM_JOINTS {
        let mut plus = base;
        let mut minus = base;
        plus[i] += step;
        minus[i] -= step;
        let fp = loss.value(&HandPose::from_flat(&plus)?)?;
        let fm = loss.value(&HandPose::from_flat(&minus)?)?;
        out[i / 3][i % 3] = (fp - fm) / (2.0 * step);
    }
    Ok(out)
}

/// `max_i |a_i − f_i| / max(‖f‖∞, ‖a‖∞, 1e-12)`.
pub fn relative_error(analytic: &[[f64; 3]; NUM_JOINTS], numeric: &[[f64; 3]; NUM_JOINTS]) -> f64 {
    let a = analytic.iter().flatten();
    let f = numeric.iter().flatten();
    let scale = a
        .clone()
        .chain(f.clone())
        .fold(1e-12_f64, |m, x| m.max(x.abs()));
    a.zip(f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[derive(Clone, Debug)]
pub struct GradCheck {
    pub report: GradientReport,
    pub numeric: [[f64; 3]; NUM_JOINTS],
    pub relative_error: f64,
}

pub fn check<L: PoseLoss + ?Sized>(loss: &L, pose: &HandPose, step: f64) -> Result<GradCheck> {
    let report = grad(loss, pose)?;
    let numeric = finite_difference(loss, pose, step)?;
    let relative_error = relative_error(&report.gradient, &numeric);
    Ok(GradCheck {
        report,
        numeric,
        relative_error,
    })
}

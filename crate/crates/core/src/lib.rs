//! Biomechanical constraints for 21-joint 3D hand skeletons.
//!
//! The crate measures how far a right-hand pose is from anatomically feasible
//! configurations: bone lengths, palm curvature and spread, and per-bone
//! flexion/abduction regions. All losses are differentiable with respect to
//! the 63 joint coordinates through a small reverse-mode tape.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod autodiff;
pub mod camera;
pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod hand;
pub mod hull;
pub mod io;
pub mod limits;
pub mod losses;
pub mod palm;
pub mod projection;
pub mod scalar;
pub mod synthetic;

pub use angles::{AnglePair, BoneFrame};
pub use error::{Error, Result};
pub use geometry::{Interval, Vec3, EPS};
pub use hand::{BoneSet, HandPose};
pub use camera::{CameraIntrinsics, ReferencePair, TwoPointFiveD};
pub use hull::AngleHull;
pub use limits::LimitSet;
pub use losses::{bmc_loss, DegeneracyPolicy, LossReport, LossWeights};
pub use projection::{project_to_feasible, ProjectionConfig};
pub use scalar::Real;

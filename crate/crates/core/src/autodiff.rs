//! Reverse-mode differentiation over the 63 joint coordinates of a pose.
//!
//! A [`Tape`] records every arithmetic operation performed on [`Var`]s
//! during one loss evaluation. Each node keeps at most two parents with their
//! local partial derivatives, plus a 21-bit mask of the joints it depends on.
//! The mask costs one `u32` per node and lets kink events be attributed to
//! the joints whose coordinates feed them.
//!
//! ```
//! use handbmc::autodiff::Tape;
//! use handbmc::Real;
//!
//! let tape = Tape::new();
//! let x = tape.input(3.0, 0);
//! let y = x * x + x.sin();
//! let grads = tape.backward(y);
//! assert!((grads[x.index()] - (6.0 + 3f64.cos())).abs() < 1e-12);
//! ```

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Vec3;
use crate::hand::{HandPose, Joints, NUM_JOINTS};
use crate::scalar::{Real, ACOS_GUARD};

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [(u32, f64); 2],
    mask: u32,
}

#[derive(Clone, Copy, Debug)]
struct KinkEvent {
    mask: u32,
    margin: f64,
}

/// Operation record for a single evaluation. Not shared between threads;
/// create one per evaluation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    kinks: RefCell<Vec<KinkEvent>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// An independent variable. `joint_mask` marks the joints it belongs to.
    pub fn input(&self, value: f64, joint_mask: u32) -> Var<'_> {
        let idx = self.push(Node {
            parents: [(NO_PARENT, 0.0); 2],
            mask: joint_mask,
        });
        Var {
            value,
            idx,
            tape: Some(self),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    fn mask(&self, idx: u32) -> u32 {
        self.nodes.borrow()[idx as usize].mask
    }

    /// Adjoints of every node with respect to `output`, indexed by
    /// [`Var::index`]. A constant output yields all zeros.
    pub fn backward(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        let Some(tape) = output.tape else {
            return adj;
        };
        assert!(std::ptr::eq(tape, self), "output recorded on another tape");
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            for &(p, d) in &nodes[i].parents {
                if p != NO_PARENT {
                    adj[p as usize] += a * d;
                }
            }
        }
        adj
    }

    fn kink_summary(&self) -> (u32, Option<f64>) {
        let kinks = self.kinks.borrow();
        let hit = kinks
            .iter()
            .filter(|k| k.margin <= 0.0)
            .fold(0u32, |m, k| m | k.mask);
        let margin = kinks.iter().map(|k| k.margin.max(0.0)).reduce(f64::min);
        (hit, margin)
    }
}

/// A scalar recorded on a [`Tape`], or a tape-free constant.
#[derive(Clone, Copy, Debug)]
pub struct Var<'t> {
    value: f64,
    idx: u32,
    tape: Option<&'t Tape>,
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.value
    }

    /// Position of this variable in [`Tape::backward`]'s output.
    ///
    /// # Panics
    /// If the variable is a constant.
    pub fn index(self) -> usize {
        assert!(self.tape.is_some(), "constants have no tape index");
        self.idx as usize
    }

    pub fn constant(value: f64) -> Self {
        Var {
            value,
            idx: NO_PARENT,
            tape: None,
        }
    }

    fn unary(self, value: f64, d: f64) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(tape) => {
                let mask = tape.mask(self.idx);
                let idx = tape.push(Node {
                    parents: [(self.idx, d), (NO_PARENT, 0.0)],
                    mask,
                });
                Var {
                    value,
                    idx,
                    tape: Some(tape),
                }
            }
        }
    }

    fn binary(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        let tape = match (self.tape, other.tape) {
            (None, None) => return Var::constant(value),
            (Some(a), Some(b)) => {
                debug_assert!(std::ptr::eq(a, b), "mixing variables from two tapes");
                a
            }
            (Some(t), None) | (None, Some(t)) => t,
        };
        let side = |v: Self, d: f64| {
            if v.tape.is_some() {
                (v.idx, d)
            } else {
                (NO_PARENT, 0.0)
            }
        };
        let pa = side(self, da);
        let pb = side(other, db);
        let mask = [pa.0, pb.0]
            .iter()
            .filter(|&&p| p != NO_PARENT)
            .fold(0, |m, &p| m | tape.mask(p));
        let idx = tape.push(Node {
            parents: [pa, pb],
            mask,
        });
        Var {
            value,
            idx,
            tape: Some(tape),
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Real for Var<'t> {
    fn cst(c: f64) -> Self {
        Var::constant(c)
    }

    fn val(self) -> f64 {
        self.value
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.unary(s, d)
    }

    fn sin(self) -> Self {
        self.unary(self.value.sin(), self.value.cos())
    }

    fn cos(self) -> Self {
        self.unary(self.value.cos(), -self.value.sin())
    }

    fn atan2(self, x: Self) -> Self {
        let (y, xv) = (self.value, x.value);
        let r2 = y * y + xv * xv;
        let (dy, dx) = if r2 > 0.0 {
            (xv / r2, -y / r2)
        } else {
            (0.0, 0.0)
        };
        self.binary(x, y.atan2(xv), dy, dx)
    }

    fn acos(self) -> Self {
        let u = self.value;
        self.kink(1.0 - u.abs());
        if u.abs() >= 1.0 {
            return self.unary(u.clamp(-1.0, 1.0).acos(), 0.0);
        }
        let g = u.clamp(-1.0 + ACOS_GUARD, 1.0 - ACOS_GUARD);
        self.unary(u.acos(), -1.0 / (1.0 - g * g).sqrt())
    }

    fn abs(self) -> Self {
        let v = self.value;
        // Only exact hits are flagged here; the argument's value says little
        // about the distance to zero in input space, so callers that know a
        // better bound record it themselves.
        if v == 0.0 {
            self.kink(0.0);
        }
        let d = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(v.abs(), d)
    }

    fn kink(self, margin: f64) {
        if let Some(tape) = self.tape {
            let mask = tape.mask(self.idx);
            tape.kinks.borrow_mut().push(KinkEvent { mask, margin });
        }
    }
}

/// Loss value with its gradient over all 21 × 3 joint coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub value: f64,
    pub gradient: [[f64; 3]; NUM_JOINTS],
    /// Joints feeding an operation evaluated exactly at a kink, clamp, or
    /// hull boundary. The reported derivative there is the one-sided
    /// derivative from the feasible side.
    pub nondifferentiable: [bool; NUM_JOINTS],
    /// Smallest distance to any kink met during evaluation, in the native
    /// units of the kinked quantity. `None` when no kink-bearing operation ran.
    pub kink_margin: Option<f64>,
}

impl GradientReport {
    pub fn zero(value: f64) -> Self {
        GradientReport {
            value,
            gradient: [[0.0; 3]; NUM_JOINTS],
            nondifferentiable: [false; NUM_JOINTS],
            kink_margin: None,
        }
    }

    pub fn flat(&self) -> [f64; 3 * NUM_JOINTS] {
        let mut out = [0.0; 3 * NUM_JOINTS];
        for (j, g) in self.gradient.iter().enumerate() {
            out[3 * j..3 * j + 3].copy_from_slice(g);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A scalar loss on a pose, evaluable with any [`Real`].
pub trait PoseLoss {
    fn eval<T: Real>(&self, joints: &Joints<T>) -> Result<T>;

    fn value(&self, pose: &HandPose) -> Result<f64> {
        self.eval(&pose.to_vec3())
    }
}

/// Evaluate `f` on a fresh tape seeded with the pose and return its value,
/// gradient, and whatever auxiliary data `f` extracts.
pub fn record<R, F>(pose: &HandPose, f: F) -> Result<(GradientReport, R)>
where
    F: for<'t> FnOnce(&Joints<Var<'t>>) -> Result<(Var<'t>, R)>,
{
    let tape = Tape::new();
    let joints: Joints<Var<'_>> = std::array::from_fn(|j| {
        let p = pose.joints()[j];
        let m = 1u32 << j;
        Vec3::new(tape.input(p[0], m), tape.input(p[1], m), tape.input(p[2], m))
    });
    let (out, aux) = f(&joints)?;
    let adj = tape.backward(out);
    let mut gradient = [[0.0; 3]; NUM_JOINTS];
    for (g, v) in gradient.iter_mut().zip(&joints) {
        *g = [adj[v.x.index()], adj[v.y.index()], adj[v.z.index()]];
    }
    let (hit, kink_margin) = tape.kink_summary();
    let nondifferentiable = std::array::from_fn(|j| hit & (1 << j) != 0);
    Ok((
        GradientReport {
            value: out.value(),
            gradient,
            nondifferentiable,
            kink_margin,
        },
        aux,
    ))
}

/// Value and exact gradient of `loss` at `pose`.
pub fn grad<L: PoseLoss + ?Sized>(loss: &L, pose: &HandPose) -> Result<GradientReport> {
    record(pose, |joints| Ok((loss.eval(joints)?, ()))).map(|(g, ())| g)
}

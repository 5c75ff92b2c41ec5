//! Planar constant-curvature chain. A segment with bending angle `theta`
//! turns its tip tangent by `2 theta`; its chord has length `L sin(theta)/theta`
//! and points `theta` away from the incoming tangent.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::pose::PoseState;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasePose<T> {
    pub x: T,
    pub y: T,
    /// Tangent direction, rad from the +x axis.
    pub heading: T,
}

/// Position and tangent direction along the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
}

/// Serial chain of limb segments from a root pose to the front foot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimbGeometry<T> {
    /// Arc length of each chain segment, m.
    pub seg_len: Vec<T>,
    /// Limb index of each chain segment, root first.
    pub chain: Vec<usize>,
    pub base: BasePose<T>,
}

impl<T: Scalar> LimbGeometry<T> {
    /// Equal-length chain over limbs `0..limbs`, traversed from the last limb
    /// to limb 0 (the front leg), lying flat on the ground when straight.
    pub fn flat(limbs: usize, seg_len: T) -> Self {
        Self {
            seg_len: vec![seg_len; limbs],
            chain: (0..limbs).rev().collect(),
            base: BasePose {
                x: T::zero(),
                y: T::zero(),
                heading: T::zero(),
            },
        }
    }

    pub fn validate(&self, limbs: usize) -> Result<()> {
        check_len("geometry seg_len vs chain", self.chain.len(), self.seg_len.len())?;
        if let Some(l) = self.seg_len.iter().find(|l| !(l.is_finite() && **l > T::zero())) {
            return Err(invalid(format!("seg_len must be > 0, got {l}")));
        }
        if let Some(j) = self.chain.iter().find(|&&j| j >= limbs) {
            return Err(invalid(format!("chain references limb {j}, robot has {limbs}")));
        }
        if !(self.base.x.is_finite() && self.base.y.is_finite() && self.base.heading.is_finite()) {
            return Err(invalid("base pose must be finite"));
        }
        Ok(())
    }
}

fn sinc<T: Scalar>(x: T) -> T {
    if x.abs() < T::epsilon().sqrt().sqrt() {
        // 1 - x^2/6 + x^4/120
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Chord of one arc relative to its start frame: `(dx, dy)` in the start
/// frame's tangent coordinates.
pub fn chord<T: Scalar>(seg_len: T, theta: T) -> (T, T) {
    let c = seg_len * sinc(theta);
    (c * theta.cos(), c * theta.sin())
}

/// Frames at the root and at every segment tip along the chain.
pub fn forward_kinematics<T: Scalar>(geom: &LimbGeometry<T>, q: &PoseState<T>) -> Vec<Frame<T>> {
    let mut f = Frame {
        x: geom.base.x,
        y: geom.base.y,
        heading: geom.base.heading,
    };
    let mut frames = Vec::with_capacity(geom.chain.len() + 1);
    frames.push(f);
    for (&limb, &len) in geom.chain.iter().zip(&geom.seg_len) {
        let theta = q.theta[limb];
        let (dx, dy) = chord(len, theta);
        let (s, c) = f.heading.sin_cos();
        f = Frame {
            x: f.x + c * dx - s * dy,
            y: f.y + s * dx + c * dy,
            heading: f.heading + theta + theta,
        };
        frames.push(f);
    }
    frames
}

/// Vertical position of the chain tip above the ground plane `y = 0`.
pub fn foot_height<T: Scalar>(geom: &LimbGeometry<T>, q: &PoseState<T>) -> T {
    forward_kinematics(geom, q).last().map(|f| f.y).unwrap_or(geom.base.y)
}

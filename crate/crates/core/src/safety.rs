//! Saturating temperature supervisor.
//!
//! The supervisor bounds each wire's duty cycle by a fraction `gamma` of the
//! one-step minimum-energy input toward an adjusted setpoint,
//!
//! ```text
//! x_set = (1/gamma) (I - (1 - gamma) A) x_max
//! u_max = gamma * B^T (B B^T)^+ (x_set - A x)
//! ```
//!
//! so that the closed loop under `u_max` obeys `e(k+1) = gamma A e(k)` with
//! `e = x - x_max`. The nonpositive orthant `{e <= 0}` is invariant under that
//! map iff `gamma A` is elementwise nonnegative. Because the block system is
//! monotone, any input below `u_max` preserves the same invariance.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::thermal::{check_duty, AugmentedState, BlockLinearSystem, ThermalBlock};
use crate::Scalar;

/// Temperature ceiling and margin fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyConfig<T> {
    t_max: T,
    gamma: T,
    overrides: BTreeMap<usize, T>,
}

impl<T: Scalar> SafetyConfig<T> {
    pub fn new(t_max: T, gamma: T) -> Result<Self> {
        if !t_max.is_finite() {
            return Err(Error::NonFinite("t_max"));
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(Self {
            t_max,
            gamma,
            overrides: BTreeMap::new(),
        })
    }

    /// Per-wire ceiling, replacing the uniform `t_max` for SMA `index`.
    pub fn with_override(mut self, index: usize, t_max: T) -> Result<Self> {
        if !t_max.is_finite() {
            return Err(Error::NonFinite("t_max override"));
        }
        self.overrides.insert(index, t_max);
        Ok(self)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn overrides(&self) -> &BTreeMap<usize, T> {
        &self.overrides
    }

    pub fn t_max_for(&self, index: usize) -> T {
        self.overrides.get(&index).copied().unwrap_or(self.t_max)
    }

    /// Augmented bound `[t_max_i, 1]`.
    pub fn x_max(&self, index: usize) -> Vec2<T> {
        Vec2::new(self.t_max_for(index), T::one())
    }

    /// Checks that every governed wire has an ambient equilibrium strictly
    /// below its ceiling and that overrides address existing wires.
    pub fn validate_for(&self, sys: &BlockLinearSystem<T>) -> Result<()> {
        if let Some((&i, _)) = self.overrides.iter().next_back().filter(|(&i, _)| i >= sys.m()) {
            return Err(invalid(format!(
                "t_max override for SMA {i} but the model has {} SMAs",
                sys.m()
            )));
        }
        for (i, blk) in sys.blocks().iter().enumerate() {
            let ambient = blk
                .ambient()
                .ok_or_else(|| invalid(format!("SMA {i}: a1 = {} has no stable ambient equilibrium", blk.a1())))?;
            let t_max = self.t_max_for(i);
            if t_max <= ambient {
                return Err(invalid(format!(
                    "t_max must exceed the ambient equilibrium a3/(1-a1) of every SMA: \
                     SMA {i} has t_max {t_max} <= ambient {ambient}"
                )));
            }
        }
        Ok(())
    }
}

/// Error `e = x - x_max` of one wire; the constant slot is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyError<T> {
    temp: T,
}

impl<T: Scalar> SafetyError<T> {
    pub fn of(x: &AugmentedState<T>, x_max: Vec2<T>) -> Self {
        Self {
            temp: x.temp() - x_max[0],
        }
    }

    pub fn as_vec2(&self) -> Vec2<T> {
        Vec2::new(self.temp, T::zero())
    }

    pub fn is_safe(&self) -> bool {
        self.temp <= T::zero()
    }
}

pub fn safety_errors<T: Scalar>(x: &[AugmentedState<T>], cfg: &SafetyConfig<T>) -> Vec<SafetyError<T>> {
    x.iter()
        .enumerate()
        .map(|(i, xi)| SafetyError::of(xi, cfg.x_max(i)))
        .collect()
}

/// Location of a negative entry of `gamma A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub block: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InvarianceCertificate {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl InvarianceCertificate {
    pub fn into_result(self) -> Result<()> {
        match self.witness {
            None => Ok(()),
            Some(Witness { block, row, col }) => Err(Error::NotInvariant { block, row, col }),
        }
    }
}

/// Checks whether `{e <= 0}` is invariant under `e -> gamma A e`, block by block.
/// The first negative entry in (block, row, column) order is the witness.
pub fn check_invariance<T: Scalar>(sys: &BlockLinearSystem<T>, cfg: &SafetyConfig<T>) -> InvarianceCertificate {
    let witness = sys.blocks().iter().enumerate().find_map(|(block, blk)| {
        let ga = blk.a().scale(cfg.gamma());
        ga.entries()
            .find(|&(_, _, v)| v < T::zero())
            .map(|(row, col, _)| Witness { block, row, col })
    });
    InvarianceCertificate {
        holds: witness.is_none(),
        witness,
    }
}

fn block_setpoint<T: Scalar>(blk: &ThermalBlock<T>, gamma: T, x_max: Vec2<T>) -> Vec2<T> {
    let shaped = Mat2::identity() - blk.a().scale(T::one() - gamma);
    (shaped * x_max).scale(T::one() / gamma)
}

/// Adjusted setpoints `x_set_i = (1/gamma)(I - (1-gamma) A_i) x_max_i`.
pub fn adjusted_setpoint<T: Scalar>(sys: &BlockLinearSystem<T>, cfg: &SafetyConfig<T>) -> Vec<Vec2<T>> {
    sys.blocks()
        .iter()
        .enumerate()
        .map(|(i, blk)| block_setpoint(blk, cfg.gamma(), cfg.x_max(i)))
        .collect()
}

/// `B^T (B B^T)^+ r` for one block. `B B^T` is rank one with its only nonzero
/// entry `a2^2` at (0,0), so its pseudoinverse is `1/a2^2` in that slot.
fn min_energy_input<T: Scalar>(blk: &ThermalBlock<T>, index: usize, r: Vec2<T>) -> Result<T> {
    let b = blk.b();
    let bbt = b.outer(b);
    let d = bbt.0[0][0];
    if d == T::zero() {
        return Err(Error::Uncontrollable(index));
    }
    let mut pinv = Mat2::zero();
    pinv.0[0][0] = T::one() / d;
    Ok(b.dot(pinv * r))
}

/// One-step minimum-energy input driving each block from `x` to `x_set`.
pub fn u_star<T: Scalar>(sys: &BlockLinearSystem<T>, x: &[AugmentedState<T>], x_set: &[Vec2<T>]) -> Result<Vec<T>> {
    check_len("u_star state", sys.m(), x.len())?;
    check_len("u_star setpoint", sys.m(), x_set.len())?;
    sys.blocks()
        .iter()
        .zip(x.iter().zip(x_set))
        .enumerate()
        .map(|(i, (blk, (xi, &si)))| min_energy_input(blk, i, si - blk.a() * xi.as_vec2()))
        .collect()
}

/// Maximum safe input `gamma * u_star(x, x_set)`. May be negative (state above
/// the bound) or exceed one (far below it); it is not clipped here.
pub fn u_max<T: Scalar>(sys: &BlockLinearSystem<T>, x: &[AugmentedState<T>], cfg: &SafetyConfig<T>) -> Result<Vec<T>> {
    let x_set = adjusted_setpoint(sys, cfg);
    Ok(u_star(sys, x, &x_set)?.into_iter().map(|u| cfg.gamma() * u).collect())
}

/// Elementwise `min(v, u_max)`, clipped into the actuator range `[0,1]`.
pub fn compose<T: Scalar>(v: &[T], u_max: &[T]) -> Result<Vec<T>> {
    check_len("compose", v.len(), u_max.len())?;
    v.iter().try_for_each(|&vi| check_duty(vi))?;
    Ok(v.iter()
        .zip(u_max)
        .map(|(&vi, &mi)| {
            let u = if vi <= mi { vi } else { mi };
            u.max(T::zero()).min(T::one())
        })
        .collect())
}

/// Whether the supervisor overrides channel `i` (the `else` branch of the
/// composition).
pub fn supervisor_active<T: Scalar>(v: &[T], u_max: &[T]) -> Vec<bool> {
    v.iter().zip(u_max).map(|(vi, mi)| vi > mi).collect()
}

/// Result of one supervised step.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedStep<T> {
    pub u_hat: Vec<T>,
    pub u_max: Vec<T>,
    pub active: Vec<bool>,
    pub next: Vec<AugmentedState<T>>,
}

pub fn supervise_step<T: Scalar>(
    sys: &BlockLinearSystem<T>,
    x: &[AugmentedState<T>],
    v: &[T],
    cfg: &SafetyConfig<T>,
) -> Result<SupervisedStep<T>> {
    check_len("supervise_step request", sys.m(), v.len())?;
    let u_max = u_max(sys, x, cfg)?;
    let u_hat = compose(v, &u_max)?;
    let next = sys.step(x, &u_hat)?;
    Ok(SupervisedStep {
        active: supervisor_active(v, &u_max),
        u_hat,
        u_max,
        next,
    })
}

//! Fixed-step planar plant: per-wire thermal blocks driving a first-order
//! antagonistic bending model for each limb.
//!
//! Limb `j` is bent by wires `2j` (+) and `2j+1` (-). Heating the `+` wire
//! bends the limb toward negative angles, so a positive pose error
//! `theta - theta_bar` yields a positive PIAW command that drives the angle
//! back down.

mod kinematics;
mod scenario;
mod trace;

pub use kinematics::{chord, foot_height, forward_kinematics, BasePose, Frame, LimbGeometry};
pub use scenario::{run_scenario, Scenario, SetpointSchedule};
pub use trace::{fmt_sig9, round_sig9, ActivationInterval, Summary, TraceLog, TraceRow};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::pose::PoseState;
use crate::thermal::{AugmentedState, BlockLinearSystem};
use crate::Scalar;

/// Number of limbs on the five-limb robot.
pub const LIMBS: usize = 5;
/// Number of SMA wires on the five-limb robot.
pub const SMAS: usize = 2 * LIMBS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseModelParams<T> {
    /// Bending response, rad per °C per s.
    pub c_gain: T,
    /// Restoring rate, 1/s.
    pub c_damp: T,
    /// Constant per-limb loading bias, rad/s.
    pub load: Vec<T>,
    /// Angle clamp, rad.
    pub theta_lim: T,
}

impl<T: Scalar> PoseModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_gain.is_finite() && self.c_gain > T::zero()) {
            return Err(invalid(format!("c_gain must be > 0, got {}", self.c_gain)));
        }
        if !(self.c_damp.is_finite() && self.c_damp > T::zero()) {
            return Err(invalid(format!("c_damp must be > 0, got {}", self.c_damp)));
        }
        if !(self.theta_lim.is_finite() && self.theta_lim > T::zero()) {
            return Err(invalid(format!("theta_lim must be > 0, got {}", self.theta_lim)));
        }
        if self.load.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("load"));
        }
        Ok(())
    }

    pub fn limbs(&self) -> usize {
        self.load.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceWindow<T> {
    pub t_start: T,
    pub t_end: T,
    /// Additive angular-rate bias per limb, rad/s.
    pub bias: Vec<T>,
}

/// Scripted disturbances; overlapping windows add.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceProfile<T> {
    pub windows: Vec<DisturbanceWindow<T>>,
}

impl<T: Scalar> DisturbanceProfile<T> {
    pub fn validate(&self, limbs: usize) -> Result<()> {
        for (i, w) in self.windows.iter().enumerate() {
            if !(w.t_start.is_finite() && w.t_end.is_finite() && w.t_start < w.t_end) {
                return Err(invalid(format!(
                    "disturbance window {i}: t_start must be < t_end, got [{}, {}]",
                    w.t_start, w.t_end
                )));
            }
            check_len("disturbance bias", limbs, w.bias.len())?;
        }
        Ok(())
    }

    /// Summed biases of every window with `t_start <= t < t_end`.
    pub fn active_biases(&self, t: T, limbs: usize) -> Vec<T> {
        let mut d = vec![T::zero(); limbs];
        for w in self.windows.iter().filter(|w| w.t_start <= t && t < w.t_end) {
            d.iter_mut().zip(&w.bias).for_each(|(a, &b)| *a = *a + b);
        }
        d
    }
}

/// Full simulated state `z = [q; x]` with its clocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState<T> {
    pub q: PoseState<T>,
    pub x: Vec<AugmentedState<T>>,
    pub t: T,
    pub k: usize,
}

impl<T: Scalar> PlantState<T> {
    pub fn new(q: PoseState<T>, temps: &[T]) -> Self {
        Self {
            q,
            x: AugmentedState::from_temps(temps),
            t: T::zero(),
            k: 0,
        }
    }

    pub fn temps(&self) -> Vec<T> {
        self.x.iter().map(AugmentedState::temp).collect()
    }
}

/// One bending update. `rel_temps` are wire temperatures relative to their
/// ambient equilibria, `2J` long.
pub fn pose_step<T: Scalar>(
    pm: &PoseModelParams<T>,
    dt: T,
    q: &PoseState<T>,
    rel_temps: &[T],
    disturbance: &[T],
) -> Result<PoseState<T>> {
    let j = q.len();
    check_len("pose_step load", j, pm.load.len())?;
    check_len("pose_step temperatures", 2 * j, rel_temps.len())?;
    check_len("pose_step disturbance", j, disturbance.len())?;
    let theta = q
        .theta
        .iter()
        .enumerate()
        .map(|(i, &th)| {
            let drive = pm.c_gain * (rel_temps[2 * i + 1] - rel_temps[2 * i]);
            let rate = drive - pm.c_damp * th + pm.load[i] + disturbance[i];
            (th + dt * rate).max(-pm.theta_lim).min(pm.theta_lim)
        })
        .collect();
    Ok(PoseState::new(theta))
}

/// Thermal and pose dynamics sharing one fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T> {
    thermal: BlockLinearSystem<T>,
    pose: PoseModelParams<T>,
    dt: T,
    ambient: Vec<T>,
}

impl<T: Scalar> Plant<T> {
    pub fn new(thermal: BlockLinearSystem<T>, pose: PoseModelParams<T>, dt: T) -> Result<Self> {
        pose.validate()?;
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(invalid(format!("dt must be > 0, got {dt}")));
        }
        check_len("plant SMA count (2 per limb)", 2 * pose.limbs(), thermal.m())?;
        let ambient = thermal
            .ambient()
            .into_iter()
            .enumerate()
            .map(|(i, a)| a.ok_or_else(|| invalid(format!("SMA {i} has no ambient equilibrium"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            thermal,
            pose,
            dt,
            ambient,
        })
    }

    pub fn thermal(&self) -> &BlockLinearSystem<T> {
        &self.thermal
    }

    pub fn pose_model(&self) -> &PoseModelParams<T> {
        &self.pose
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn limbs(&self) -> usize {
        self.pose.limbs()
    }

    pub fn ambient(&self) -> &[T] {
        &self.ambient
    }

    /// Rest state: zero angles, every wire at its ambient equilibrium.
    pub fn rest_state(&self) -> PlantState<T> {
        PlantState::new(PoseState::zeros(self.limbs()), &self.ambient)
    }

    pub fn relative_temps(&self, x: &[AugmentedState<T>]) -> Vec<T> {
        x.iter().zip(&self.ambient).map(|(xi, &a)| xi.temp() - a).collect()
    }

    /// Advances both subsystems from `state` under the executed input `u_hat`.
    /// The pose update uses the temperatures at the start of the step.
    pub fn step(&self, state: &PlantState<T>, u_hat: &[T], profile: &DisturbanceProfile<T>) -> Result<PlantState<T>> {
        let x = self.thermal.step(&state.x, u_hat)?;
        let d = profile.active_biases(state.t, self.limbs());
        let q = pose_step(&self.pose, self.dt, &state.q, &self.relative_temps(&state.x), &d)?;
        let k = state.k + 1;
        Ok(PlantState {
            q,
            x,
            t: T::from_usize_lossy(k) * self.dt,
            k,
        })
    }
}

pub fn plant_step<T: Scalar>(
    plant: &Plant<T>,
    state: &PlantState<T>,
    u_hat: &[T],
    profile: &DisturbanceProfile<T>,
) -> Result<PlantState<T>> {
    plant.step(state, u_hat, profile)
}

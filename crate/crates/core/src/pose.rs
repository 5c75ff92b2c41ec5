//! Per-limb pose control: PI with anti-windup on the bending-angle error, and
//! the antagonistic pair mapping from a signed command to two duty cycles.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::Scalar;

/// Limb bending angles, rad.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseState<T> {
    pub theta: Vec<T>,
}

impl<T: Scalar> PoseState<T> {
    pub fn new(theta: Vec<T>) -> Self {
        Self { theta }
    }

    pub fn zeros(limbs: usize) -> Self {
        Self {
            theta: vec![T::zero(); limbs],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiawGains<T> {
    pub k_p: T,
    pub k_i: T,
    pub k_a: T,
    /// Sampling time, s.
    pub dt: T,
}

impl<T: Scalar> PiawGains<T> {
    pub fn new(k_p: T, k_i: T, k_a: T, dt: T) -> Result<Self> {
        let g = Self { k_p, k_i, k_a, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_p.is_finite() && self.k_i.is_finite() && self.k_a.is_finite()) {
            return Err(Error::NonFinite("PIAW gains"));
        }
        if self.k_p < T::zero() || self.k_i < T::zero() {
            return Err(invalid(format!(
                "k_p and k_i must be >= 0, got k_p = {}, k_i = {}",
                self.k_p, self.k_i
            )));
        }
        if !(self.dt.is_finite() && self.dt > T::zero()) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for PiawGains<T> {
    /// Synthetic scenario defaults.
    fn default() -> Self {
        Self {
            k_p: T::lit(2.0),
            k_i: T::lit(0.5),
            k_a: T::zero(),
            dt: T::lit(0.1),
        }
    }
}

/// Controller memory: integral accumulator and the previous commanded and
/// saturated outputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiawState<T> {
    pub acc: T,
    pub last_eta: T,
    pub last_mu: T,
}

impl<T: Scalar> PiawState<T> {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiawOutput<T> {
    /// Commanded (unsaturated) signal.
    pub eta: T,
    /// Saturated signal in `[-1, 1]`.
    pub mu: T,
    pub state: PiawState<T>,
}

/// `delta_i = theta_i - theta_bar_i`.
pub fn pose_error<T: Scalar>(q: &PoseState<T>, q_bar: &PoseState<T>) -> Result<Vec<T>> {
    check_len("pose_error", q.len(), q_bar.len())?;
    Ok(q.theta.iter().zip(&q_bar.theta).map(|(&a, &b)| a - b).collect())
}

pub fn sat<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// One PIAW update. The current error enters the accumulator before the
/// output is formed:
///
/// ```text
/// acc' = acc + delta + k_a (mu_prev - eta_prev)
/// eta  = k_p delta + k_i dt acc'
/// mu   = sat(eta)
/// ```
pub fn piaw_step<T: Scalar>(gains: &PiawGains<T>, state: &PiawState<T>, delta: T) -> Result<PiawOutput<T>> {
    if !delta.is_finite() {
        return Err(Error::NonFinite("pose error"));
    }
    if !(state.acc.is_finite() && state.last_eta.is_finite() && state.last_mu.is_finite()) {
        return Err(Error::NonFinite("PIAW state"));
    }
    let acc = state.acc + delta + gains.k_a * (state.last_mu - state.last_eta);
    let eta = gains.k_p * delta + gains.k_i * gains.dt * acc;
    let mu = sat(eta);
    Ok(PiawOutput {
        eta,
        mu,
        state: PiawState {
            acc,
            last_eta: eta,
            last_mu: mu,
        },
    })
}

/// Routes a signed command to the `(+, -)` wires of an antagonistic pair.
pub fn pair_map<T: Scalar>(mu: T) -> Result<(T, T)> {
    if !(mu >= -T::one() && mu <= T::one()) {
        return Err(Error::CommandOutOfRange(mu.as_f64()));
    }
    Ok(if mu >= T::zero() {
        (mu, T::zero())
    } else {
        (T::zero(), -mu)
    })
}

/// Runs every limb's PIAW law and expands the commands into `2J` duty cycles;
/// limb `j` drives channels `2j` (+) and `2j+1` (-). Returns the requests and
/// the updated controller states.
pub fn pose_controller_step<T: Scalar>(
    gains: &[PiawGains<T>],
    states: &[PiawState<T>],
    q: &PoseState<T>,
    q_bar: &PoseState<T>,
) -> Result<(Vec<T>, Vec<PiawState<T>>)> {
    check_len("pose_controller_step gains", q.len(), gains.len())?;
    check_len("pose_controller_step states", q.len(), states.len())?;
    let delta = pose_error(q, q_bar)?;
    let mut v = Vec::with_capacity(2 * q.len());
    let mut next = Vec::with_capacity(q.len());
    for ((g, s), &d) in gains.iter().zip(states).zip(&delta) {
        let out = piaw_step(g, s, d)?;
        let (plus, minus) = pair_map(out.mu)?;
        v.push(plus);
        v.push(minus);
        next.push(out.state);
    }
    Ok((v, next))
}

/// Bank of per-limb PIAW controllers owning their state.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseController<T> {
    gains: Vec<PiawGains<T>>,
    states: Vec<PiawState<T>>,
}

impl<T: Scalar> PoseController<T> {
    pub fn new(gains: Vec<PiawGains<T>>) -> Result<Self> {
        gains.iter().try_for_each(PiawGains::validate)?;
        let states = vec![PiawState::default(); gains.len()];
        Ok(Self { gains, states })
    }

    pub fn uniform(gains: PiawGains<T>, limbs: usize) -> Result<Self> {
        Self::new(vec![gains; limbs])
    }

    pub fn gains(&self) -> &[PiawGains<T>] {
        &self.gains
    }

    pub fn states(&self) -> &[PiawState<T>] {
        &self.states
    }

    pub fn reset(&mut self) {
        self.states.iter_mut().for_each(PiawState::reset);
    }

    pub fn step(&mut self, q: &PoseState<T>, q_bar: &PoseState<T>) -> Result<Vec<T>> {
        let (v, next) = pose_controller_step(&self.gains, &self.states, q, q_bar)?;
        self.states = next;
        Ok(v)
    }
}

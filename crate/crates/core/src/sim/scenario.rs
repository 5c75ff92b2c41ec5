use crate::error::{check_len, invalid, Result};
use crate::pose::{PiawGains, PoseController, PoseState};
use crate::safety::{check_invariance, compose, supervisor_active, u_max, SafetyConfig};
use crate::Scalar;

use super::kinematics::{foot_height, LimbGeometry};
use super::trace::{TraceLog, TraceRow};
use super::{DisturbanceProfile, Plant, PlantState};

/// Piecewise-constant setpoint trajectory: each entry holds from its start
/// time until the next entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointSchedule<T> {
    segments: Vec<(T, PoseState<T>)>,
}

impl<T: Scalar> SetpointSchedule<T> {
    pub fn new(segments: Vec<(T, PoseState<T>)>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| invalid("setpoint schedule is empty"))?;
        if first.0 != T::zero() {
            return Err(invalid(format!(
                "setpoint schedule must start at t = 0, first entry at t = {}",
                first.0
            )));
        }
        let limbs = first.1.len();
        for (i, w) in segments.windows(2).enumerate() {
            if w[1].0.is_nan() || w[1].0 <= w[0].0 {
                return Err(invalid(format!(
                    "setpoint times must be strictly increasing: entry {} at t = {} follows t = {}",
                    i + 1,
                    w[1].0,
                    w[0].0
                )));
            }
        }
        for (_, q) in &segments {
            check_len("setpoint limb count", limbs, q.len())?;
            if q.theta.iter().any(|t| !t.is_finite()) {
                return Err(invalid("setpoint angles must be finite"));
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(q: PoseState<T>) -> Self {
        Self {
            segments: vec![(T::zero(), q)],
        }
    }

    pub fn segments(&self) -> &[(T, PoseState<T>)] {
        &self.segments
    }

    pub fn limbs(&self) -> usize {
        self.segments[0].1.len()
    }

    pub fn at(&self, t: T) -> &PoseState<T> {
        let idx = self.segments.partition_point(|(start, _)| *start <= t);
        &self.segments[idx.saturating_sub(1)].1
    }
}

/// Everything needed for one closed-loop run.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub plant: Plant<T>,
    pub safety: SafetyConfig<T>,
    pub gains: Vec<PiawGains<T>>,
    pub geometry: LimbGeometry<T>,
    pub setpoints: SetpointSchedule<T>,
    pub disturbances: DisturbanceProfile<T>,
    pub horizon: usize,
    pub initial: PlantState<T>,
}

impl<T: Scalar> Scenario<T> {
    /// Checks dimensions, parameter ranges and the safe start. Does not check
    /// the invariance certificate.
    pub fn validate_config(&self) -> Result<()> {
        let limbs = self.plant.limbs();
        let sys = self.plant.thermal();
        if self.horizon == 0 {
            return Err(invalid("horizon must be >= 1 step"));
        }
        check_len("gains per limb", limbs, self.gains.len())?;
        self.gains.iter().try_for_each(PiawGains::validate)?;
        check_len("setpoint limb count", limbs, self.setpoints.limbs())?;
        self.geometry.validate(limbs)?;
        self.disturbances.validate(limbs)?;
        check_len("initial angles", limbs, self.initial.q.len())?;
        check_len("initial temperatures", sys.m(), self.initial.x.len())?;
        self.safety.validate_for(sys)?;
        for (i, xi) in self.initial.x.iter().enumerate() {
            let t_max = self.safety.t_max_for(i);
            if xi.temp().is_nan() || xi.temp() > t_max {
                return Err(invalid(format!(
                    "initial temperature of SMA {i} ({}) exceeds t_max {t_max}",
                    xi.temp()
                )));
            }
        }
        Ok(())
    }

    /// [`Scenario::validate_config`] plus the invariance certificate; a failed
    /// certificate is reported as [`crate::Error::NotInvariant`].
    pub fn validate(&self) -> Result<()> {
        self.validate_config()?;
        check_invariance(self.plant.thermal(), &self.safety).into_result()
    }
}

/// Runs the fixed-step loop: pose control, supervision, plant update. Each
/// logged row holds the state at the start of step `k` and the inputs
/// computed from it.
pub fn run_scenario<T: Scalar>(scenario: &Scenario<T>) -> Result<TraceLog<T>> {
    scenario.validate()?;
    let plant = &scenario.plant;
    let sys = plant.thermal();
    let mut controller = PoseController::new(scenario.gains.clone())?;
    let mut state = scenario.initial.clone();
    let mut rows = Vec::with_capacity(scenario.horizon);

    for _ in 0..scenario.horizon {
        let q_bar = scenario.setpoints.at(state.t).clone();
        let v = controller.step(&state.q, &q_bar)?;
        let bound = u_max(sys, &state.x, &scenario.safety)?;
        let u_hat = compose(&v, &bound)?;
        let active = supervisor_active(&v, &bound);
        let next = plant.step(&state, &u_hat, &scenario.disturbances)?;
        rows.push(TraceRow {
            k: state.k,
            t: state.t,
            foot_height: foot_height(&scenario.geometry, &state.q),
            theta: std::mem::take(&mut state.q.theta),
            setpoint: q_bar.theta,
            temps: state.temps(),
            v,
            u_max: bound,
            u_hat,
            active,
        });
        state = next;
    }
    Ok(TraceLog::new(plant.limbs(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lookup() {
        let s = SetpointSchedule::new(vec![
            (0.0, PoseState::new(vec![0.1])),
            (5.0, PoseState::new(vec![0.2])),
            (9.0, PoseState::new(vec![0.3])),
        ])
        .unwrap();
        assert_eq!(s.at(0.0).theta, vec![0.1]);
        assert_eq!(s.at(4.99).theta, vec![0.1]);
        assert_eq!(s.at(5.0).theta, vec![0.2]);
        assert_eq!(s.at(100.0).theta, vec![0.3]);
    }

    #[test]
    fn schedule_validation() {
        assert!(SetpointSchedule::<f64>::new(vec![]).is_err());
        assert!(SetpointSchedule::new(vec![(1.0, PoseState::new(vec![0.1]))]).is_err());
        assert!(
            SetpointSchedule::new(vec![(0.0, PoseState::new(vec![0.1])), (0.0, PoseState::new(vec![0.2])),]).is_err()
        );
        assert!(SetpointSchedule::new(vec![
            (0.0, PoseState::new(vec![0.1])),
            (1.0, PoseState::new(vec![0.2, 0.3])),
        ])
        .is_err());
    }
}

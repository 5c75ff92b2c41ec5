//! Supervisory safe control for SMA-actuated soft legged robots.
//!
//! - [`thermal`]: lumped Joule-heating wire models, the augmented block linear
//!   system and least-squares calibration.
//! - [`safety`]: the saturating temperature supervisor and its invariance
//!   certificate.
//! - [`pose`]: per-limb PI control with anti-windup and antagonistic-pair
//!   routing.
//! - [`sim`]: a deterministic planar five-limb plant and scenario runner.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod error;
pub mod linalg;
pub mod pose;
pub mod safety;
mod scalar;
pub mod sim;
pub mod thermal;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PhysicalThermalParams = thermal::PhysicalThermalParams<f64>;
pub type LumpedThermalParams = thermal::LumpedThermalParams<f64>;
pub type AugmentedState = thermal::AugmentedState<f64>;
pub type ThermalBlock = thermal::ThermalBlock<f64>;
pub type BlockLinearSystem = thermal::BlockLinearSystem<f64>;
pub type LumpedFit = thermal::LumpedFit<f64>;
pub type SafetyConfig = safety::SafetyConfig<f64>;
pub type PiawGains = pose::PiawGains<f64>;
pub type PiawState = pose::PiawState<f64>;
pub type PoseState = pose::PoseState<f64>;
pub type PoseController = pose::PoseController<f64>;
pub type PoseModelParams = sim::PoseModelParams<f64>;
pub type DisturbanceProfile = sim::DisturbanceProfile<f64>;
pub type DisturbanceWindow = sim::DisturbanceWindow<f64>;
pub type LimbGeometry = sim::LimbGeometry<f64>;
pub type Plant = sim::Plant<f64>;
pub type PlantState = sim::PlantState<f64>;
pub type Scenario = sim::Scenario<f64>;
pub type SetpointSchedule = sim::SetpointSchedule<f64>;
pub type TraceLog = sim::TraceLog<f64>;

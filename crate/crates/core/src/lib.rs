//! Entropy from an adiabatic accessibility preorder.
//!
//! The [`order`] module holds states, the `≺` oracles and the entropy
//! construction; [`simple`] and [`thermal`] provide concrete gas models and
//! thermal contact; [`calibration`] fixes additive entropy constants across
//! reaction networks.

pub mod calibration;
pub mod config;
pub mod error;
pub mod order;
pub mod report;
pub mod scalar;
pub mod simple;
pub mod state;
pub mod thermal;

pub use error::{Error, Result};
pub use report::{CheckResult, Report, Verdict};
pub use scalar::Real;
pub use state::{CompoundState, SpaceId, StateRef};

pub type FiniteRelation = order::FiniteRelation;
pub type AnalyticOracle = order::AnalyticOracle<f64>;
pub type IdealGas = simple::IdealGas<f64>;
pub type VanDerWaals = simple::VanDerWaals<f64>;
pub type CustomTable = simple::CustomTable<f64>;
pub type StatePoint = simple::StatePoint<f64>;
pub type GeometricOracle = simple::GeometricOracle<f64>;
pub type Body = thermal::Body<f64>;
pub type ReactionNetwork = calibration::ReactionNetwork<f64>;
pub type FTable = calibration::FTable<f64>;
pub type CalibrationSolution = calibration::CalibrationSolution<f64>;
pub type State = StateRef<f64>;
pub type Compound = CompoundState<f64, StateRef<f64>>;

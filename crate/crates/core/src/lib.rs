#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod beamforming;
pub mod caas_control;
pub mod channel;
pub mod cli;
pub mod constellation;
pub mod geo;
pub mod handover;
pub mod ids;
pub mod io;
pub mod num;
pub mod prediction;
pub mod sim;

// double-precision aliases
pub type OrbitalShell = crate::constellation::OrbitalShell<f64>;
pub type SatelliteOrbit = crate::constellation::SatelliteOrbit<f64>;
pub type SatelliteState = crate::constellation::SatelliteState<f64>;
pub type GroundPoint = crate::constellation::GroundPoint<f64>;
pub type CoverageWindow = crate::constellation::CoverageWindow<f64>;
pub type LinkParams = crate::channel::LinkParams<f64>;
pub type CsiSample = crate::channel::CsiSample<f64>;
pub type InterferenceMatrix = crate::prediction::InterferenceMatrix<f64>;
pub type PowerAllocation = crate::beamforming::PowerAllocation<f64>;
pub type AllocationOutcome = crate::beamforming::AllocationOutcome<f64>;
pub type HandoverGraph = crate::handover::HandoverGraph<f64>;
pub type HgmCandidate = crate::handover::HgmCandidate<f64>;
pub type HoPath = crate::handover::HoPath<f64>;
pub type HoMetricWeights = crate::handover::HoMetricWeights<f64>;
pub type SubConstellation = crate::caas_control::SubConstellation<f64>;
pub type Region = crate::caas_control::Region<f64>;
pub type Scenario = crate::sim::Scenario<f64>;
pub type MetricsReport = crate::sim::MetricsReport<f64>;
pub type EventLog = crate::sim::EventLog<f64>;
pub type Event = crate::sim::Event<f64>;
pub type UeProfile = crate::sim::UeProfile<f64>;
pub type SimContext = crate::sim::SimContext<f64>;

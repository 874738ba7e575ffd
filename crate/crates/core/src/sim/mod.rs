//! Deterministic discrete-time simulation of both access strategies.

mod caas;
mod ephemeris;
mod events;
mod population;
mod radio;
mod scenario;
mod standalone;
mod sweep;

pub use caas::ue_handover_graph;
pub use ephemeris::{footprint_half_angle_deg, Ephemeris};
pub use events::{
    compute_metrics, mark_ping_pongs, Event, EventLog, HoRecord, MetricsReport, RateRecord,
    ScRecord, UeMetrics,
};
pub use population::{populate_ues, rng_stream, UeProfile};
pub use scenario::{
    bundled_scenario, parse_scenario_str, ControlConfig, HandoverConfig, PredictionConfig,
    Predictor, Scenario, ScenarioError, StandaloneConfig, BUNDLED_SCENARIO,
};
pub use sweep::{sweep, sweep_with, SweepRow};

use serde::{Deserialize, Serialize};

use crate::beamforming::BeamformingError;
use crate::caas_control::ControlError;
use crate::constellation::{ConstellationError, SPEED_OF_LIGHT_KM_S};
use crate::handover::{HandoverError, HgmParams, ProtocolTiming};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;
use crate::prediction::PredictionError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Handover(#[from] HandoverError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error("{0}")]
    Invalid(String),
    #[error("event {index} at t={t} precedes the previous event at t={previous}")]
    Ordering { index: usize, t: f64, previous: f64 },
    #[error("satellite {satellite} uses {used_w} W of its {budget_w} W budget at t={t}")]
    Conservation {
        t: f64,
        satellite: SatelliteId,
        used_w: f64,
        budget_w: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Caas,
    Standalone,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Caas, Strategy::Standalone];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Caas => "caas",
            Strategy::Standalone => "standalone",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "caas" => Ok(Strategy::Caas),
            "standalone" => Ok(Strategy::Standalone),
            _ => Err(format!(
                "unknown strategy `{s}` (expected caas or standalone)"
            )),
        }
    }
}

/// Geometry shared by every run over the same shells, area, mask and
/// duration, whatever the seed, UE count or strategy.
#[derive(Debug, Clone)]
pub struct SimContext<T> {
    pub ephemeris: Ephemeris<T>,
}

impl<T: Scalar> SimContext<T> {
    pub fn new(scenario: &Scenario<T>) -> Result<Self, SimError> {
        scenario.validate()?;
        let ephemeris = Ephemeris::build(
            &scenario.shells,
            &scenario.area,
            scenario.mask_deg,
            (T::zero(), scenario.duration_s),
        )?;
        Ok(Self { ephemeris })
    }

    fn check_compatible(&self, scenario: &Scenario<T>) -> Result<(), SimError> {
        let e = &self.ephemeris;
        if e.horizon != (T::zero(), scenario.duration_s) || e.mask_deg != scenario.mask_deg {
            return Err(SimError::Invalid(
                "simulation context was built for a different horizon or mask".into(),
            ));
        }
        Ok(())
    }
}

/// Round-trip time used for handover preparation: twice the highest
/// shell altitude over the speed of light.
pub fn scenario_rtt<T: Scalar>(scenario: &Scenario<T>) -> T {
    let alt = scenario
        .shells
        .iter()
        .map(|s| s.altitude_km)
        .fold(T::zero(), T::max);
    T::lit(2.0) * alt / T::lit(SPEED_OF_LIGHT_KM_S)
}

pub fn protocol_timing<T: Scalar>(scenario: &Scenario<T>) -> ProtocolTiming<T> {
    ProtocolTiming {
        rtt: scenario_rtt(scenario),
        guard: scenario.handover.guard_s,
        execution_time: scenario.handover.execution_time_s,
    }
}

pub fn hgm_params<T: Scalar>(scenario: &Scenario<T>) -> HgmParams<T> {
    HgmParams {
        delta_min: scenario.handover.delta_min_s,
        lead: protocol_timing(scenario).lead(),
    }
}

/// One beam during one step, as dumped by verbose runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub time_s: f64,
    pub sat_id: SatelliteId,
    pub ue_id: UeId,
    pub power_w: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
}

/// Runs one strategy over a scenario.
pub fn run<T: Scalar>(
    scenario: &Scenario<T>,
    strategy: Strategy,
) -> Result<(MetricsReport<T>, EventLog<T>), SimError> {
    scenario.validate()?;
    if scenario.step_count() == 0 {
        let log = EventLog::new();
        return Ok((compute_metrics(&log, scenario)?, log));
    }
    run_with(&SimContext::new(scenario)?, scenario, strategy)
}

/// [`run`] with a prebuilt geometry context.
pub fn run_with<T: Scalar>(
    ctx: &SimContext<T>,
    scenario: &Scenario<T>,
    strategy: Strategy,
) -> Result<(MetricsReport<T>, EventLog<T>), SimError> {
    run_inner(ctx, scenario, strategy, None)
}

/// [`run_with`] that also returns every per-step beam allocation.
pub fn run_traced<T: Scalar>(
    ctx: &SimContext<T>,
    scenario: &Scenario<T>,
    strategy: Strategy,
) -> Result<(MetricsReport<T>, EventLog<T>, Vec<AllocationRow>), SimError> {
    let mut rows = Vec::new();
    let (report, log) = run_inner(ctx, scenario, strategy, Some(&mut rows))?;
    Ok((report, log, rows))
}

fn run_inner<T: Scalar>(
    ctx: &SimContext<T>,
    scenario: &Scenario<T>,
    strategy: Strategy,
    trace: Option<&mut Vec<AllocationRow>>,
) -> Result<(MetricsReport<T>, EventLog<T>), SimError> {
    scenario.validate()?;
    let mut log = EventLog::new();
    if scenario.step_count() > 0 {
        ctx.check_compatible(scenario)?;
        let ues = populate_ues(scenario)?;
        match strategy {
            Strategy::Caas => caas::run_caas(ctx, scenario, &ues, &mut log, trace)?,
            Strategy::Standalone => {
                standalone::run_standalone(ctx, scenario, &ues, &mut log, trace)?
            }
        }
        log.sort();
        events::mark_ping_pongs(&mut log, scenario.handover.ping_pong_window_s);
    }
    let report = compute_metrics(&log, scenario)?;
    Ok((report, log))
}

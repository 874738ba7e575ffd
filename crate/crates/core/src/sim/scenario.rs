use serde::{Deserialize, Serialize};

use crate::beamforming::AllocationOptions;
use crate::caas_control::{GeoRect, ScOptions, DEFAULT_MAX_DEPTH, DEFAULT_MAX_UES_PER_REGION};
use crate::channel::LinkParams;
use crate::constellation::OrbitalShell;
use crate::handover::{
    HoMetricWeights, DEFAULT_DELTA_MIN_S, DEFAULT_EXECUTION_TIME_S, DEFAULT_GUARD_S,
    DEFAULT_PING_PONG_WINDOW_S,
};
use crate::num::Scalar;
use crate::prediction::{DEFAULT_ATTENTION_TAU_S, DEFAULT_HISTORY_CAPACITY};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Range { path: String, message: String },
}

impl ScenarioError {
    fn range(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Range {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> &str {
        match self {
            ScenarioError::Parse { path, .. } | ScenarioError::Range { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandoverConfig<T> {
    pub alpha: T,
    pub beta: T,
    pub delta_min_s: T,
    pub guard_s: T,
    pub execution_time_s: T,
    pub ping_pong_window_s: T,
}

impl<T: Scalar> Default for HandoverConfig<T> {
    fn default() -> Self {
        let w = HoMetricWeights::<T>::default();
        Self {
            alpha: w.alpha,
            beta: w.beta,
            delta_min_s: T::lit(DEFAULT_DELTA_MIN_S),
            guard_s: T::lit(DEFAULT_GUARD_S),
            execution_time_s: T::lit(DEFAULT_EXECUTION_TIME_S),
            ping_pong_window_s: T::lit(DEFAULT_PING_PONG_WINDOW_S),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandaloneConfig<T> {
    pub hysteresis_db: T,
    pub time_to_trigger_steps: u32,
}

impl<T: Scalar> Default for StandaloneConfig<T> {
    fn default() -> Self {
        Self {
            hysteresis_db: T::lit(3.0),
            time_to_trigger_steps: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct ControlConfig<T> {
    pub max_ues_per_region: usize,
    pub max_depth: u32,
    pub sc: ScOptions<T>,
}

impl<T: Scalar> Default for ControlConfig<T> {
    fn default() -> Self {
        Self {
            max_ues_per_region: DEFAULT_MAX_UES_PER_REGION,
            max_depth: DEFAULT_MAX_DEPTH,
            sc: ScOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predictor {
    Attention,
    Ephemeris,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionConfig<T> {
    pub predictor: Predictor,
    pub history_capacity: usize,
    pub tau_s: T,
}

impl<T: Scalar> Default for PredictionConfig<T> {
    fn default() -> Self {
        Self {
            predictor: Predictor::Attention,
            history_capacity: DEFAULT_HISTORY_CAPACITY,
            tau_s: T::lit(DEFAULT_ATTENTION_TAU_S),
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Scenario<T> {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub shells: Vec<OrbitalShell<T>>,
    pub area: GeoRect<T>,
    #[serde(default = "default_ue_count")]
    pub ue_count: usize,
    /// Mean of the Poisson demand, in bps.
    #[serde(default = "default_demand_mean")]
    pub demand_mean_bps: T,
    /// Size of one Poisson demand unit, bps.
    #[serde(default = "default_demand_unit")]
    pub demand_unit_bps: T,
    #[serde(default = "default_duration")]
    pub duration_s: T,
    #[serde(default = "T::one")]
    pub time_step_s: T,
    #[serde(default = "default_mask")]
    pub mask_deg: T,
    #[serde(default)]
    pub link: LinkParams<T>,
    #[serde(default)]
    pub handover: HandoverConfig<T>,
    #[serde(default)]
    pub standalone: StandaloneConfig<T>,
    #[serde(default)]
    pub control: ControlConfig<T>,
    #[serde(default)]
    pub prediction: PredictionConfig<T>,
    #[serde(default)]
    pub allocation: AllocationOptions<T>,
}

fn default_seed() -> u64 {
    1
}
fn default_ue_count() -> usize {
    40
}
fn default_demand_mean<T: Scalar>() -> T {
    T::lit(20e6)
}
fn default_demand_unit<T: Scalar>() -> T {
    T::lit(1e6)
}
fn default_duration<T: Scalar>() -> T {
    T::lit(600.0)
}
fn default_mask<T: Scalar>() -> T {
    T::lit(10.0)
}

impl<T: Scalar> Scenario<T> {
    /// Number of metric samples: `t = k * time_step` for `t < duration`.
    pub fn step_count(&self) -> usize {
        if !(self.duration_s > T::zero()) {
            return 0;
        }
        (self.duration_s / self.time_step_s)
            .ceil()
            .to_usize()
            .unwrap_or(0)
    }

    pub fn step_time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.time_step_s
    }

    pub fn weights(&self) -> HoMetricWeights<T> {
        HoMetricWeights {
            alpha: self.handover.alpha,
            beta: self.handover.beta,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.shells.is_empty() {
            return Err(ScenarioError::range(
                "shells",
                "at least one shell is required",
            ));
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, s) in self.shells.iter().enumerate() {
            let at = |f: &str| format!("shells[{i}].{f}");
            if s.satellite_count == 0 {
                return Err(ScenarioError::range(
                    at("satellite_count"),
                    "must be positive",
                ));
            }
            if s.plane_count == 0 || s.satellite_count % s.plane_count != 0 {
                return Err(ScenarioError::range(
                    at("plane_count"),
                    "must be positive and divide satellite_count",
                ));
            }
            if !(s.inclination_deg >= T::zero() && s.inclination_deg <= T::lit(180.0)) {
                return Err(ScenarioError::range(
                    at("inclination_deg"),
                    format!("{} outside [0, 180]", s.inclination_deg),
                ));
            }
            if !(s.altitude_km > T::zero()) || !s.altitude_km.is_finite() {
                return Err(ScenarioError::range(at("altitude_km"), "must be positive"));
            }
            if s.phasing_factor >= s.plane_count {
                return Err(ScenarioError::range(
                    at("phasing_factor"),
                    "must be below plane_count",
                ));
            }
            if !ids.insert(s.shell_id) {
                return Err(ScenarioError::range(at("shell_id"), "duplicate shell id"));
            }
        }
        self.area
            .validate()
            .map_err(|e| ScenarioError::range("area", e.to_string()))?;
        let positive = |v: T, path: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::range(path, format!("{v} must be positive")))
            }
        };
        positive(self.demand_mean_bps, "demand_mean_bps")?;
        positive(self.demand_unit_bps, "demand_unit_bps")?;
        positive(self.time_step_s, "time_step_s")?;
        if !(self.duration_s >= T::zero()) || !self.duration_s.is_finite() {
            return Err(ScenarioError::range("duration_s", "must be non-negative"));
        }
        if !(self.mask_deg >= T::zero() && self.mask_deg < T::lit(90.0)) {
            return Err(ScenarioError::range("mask_deg", "must lie in [0, 90)"));
        }
        if let Err(e) = self.link.validate() {
            return Err(ScenarioError::range("link", e.to_string()));
        }
        if self.weights().validate().is_err() {
            return Err(ScenarioError::range(
                "handover.alpha",
                "alpha and beta in [0, 1] must sum to 1",
            ));
        }
        positive(
            self.handover.ping_pong_window_s,
            "handover.ping_pong_window_s",
        )?;
        if !(self.handover.delta_min_s >= T::zero()) {
            return Err(ScenarioError::range(
                "handover.delta_min_s",
                "must be non-negative",
            ));
        }
        if !(self.handover.guard_s >= T::zero()) || !(self.handover.execution_time_s >= T::zero()) {
            return Err(ScenarioError::range(
                "handover.guard_s",
                "guard and execution time must be non-negative",
            ));
        }
        if !(self.standalone.hysteresis_db >= T::zero()) {
            return Err(ScenarioError::range(
                "standalone.hysteresis_db",
                "must be non-negative",
            ));
        }
        if self.control.max_ues_per_region == 0 {
            return Err(ScenarioError::range(
                "control.max_ues_per_region",
                "must be positive",
            ));
        }
        self.control
            .sc
            .validate()
            .map_err(|e| ScenarioError::range("control", e.to_string()))?;
        if self.prediction.history_capacity == 0 {
            return Err(ScenarioError::range(
                "prediction.history_capacity",
                "must be positive",
            ));
        }
        positive(self.prediction.tau_s, "prediction.tau_s")?;
        if self.allocation.max_sweeps == 0 || self.allocation.grid_points < 2 {
            return Err(ScenarioError::range(
                "allocation",
                "max_sweeps >= 1 and grid_points >= 2 required",
            ));
        }
        if !(self.allocation.grid_floor > T::zero() && self.allocation.grid_floor < T::one()) {
            return Err(ScenarioError::range(
                "allocation.grid_floor",
                "must lie in (0, 1)",
            ));
        }
        positive(self.allocation.epsilon_bps, "allocation.epsilon_bps")?;
        Ok(())
    }
}

/// The bundled two-shell scenario.
pub const BUNDLED_SCENARIO: &str = include_str!("../../scenarios/two_shell_sea.json");

/// Parses and validates a scenario document.
pub fn parse_scenario_str<T>(text: &str) -> Result<Scenario<T>, ScenarioError>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario<T> = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Parse {
            path: if path == "." { "<root>".into() } else { path },
            message: e.inner().to_string(),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn bundled_scenario() -> Scenario<f64> {
    parse_scenario_str(BUNDLED_SCENARIO).expect("bundled scenario is valid")
}

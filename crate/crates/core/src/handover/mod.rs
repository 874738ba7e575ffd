//! Handover graph model, pre-configured handover paths, the conditional
//! handover protocol and ping-pong accounting.

mod graph;
mod paths;
mod protocol;

pub use graph::{
    build_hgm, edge_benefit, BenefitNorm, HandoverGraph, HgmCandidate, HgmEdge, HgmParams,
};
pub use paths::{best_dual_paths, best_partial_path, best_path, k_best_paths, HoPath};
pub use protocol::{
    detect_ping_pong, ho_protocol_step, ping_pong_indices, HoPhase, HoProtocolState, MessageKind,
    ProtocolTiming, SignalingMessage,
};

use serde::{Deserialize, Serialize};

use crate::num::Scalar;

pub const DEFAULT_DELTA_MIN_S: f64 = 2.0;
pub const DEFAULT_GUARD_S: f64 = 0.05;
pub const DEFAULT_EXECUTION_TIME_S: f64 = 0.1;
pub const DEFAULT_PING_PONG_WINDOW_S: f64 = 30.0;
/// Number of first paths tried by the dual-path solver.
pub const DUAL_PATH_CANDIDATES: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HandoverError {
    #[error("invalid metric weights: alpha {alpha} + beta {beta} must be 1 with both in [0, 1]")]
    InvalidWeights { alpha: f64, beta: f64 },
    #[error("switch at t={t} lies outside the window overlap")]
    InfeasibleSwitch { t: f64 },
    #[error("no coverage window contains t0={t0}")]
    NoInitialCoverage { t0: f64 },
    #[error("coverage gap: nothing reachable covers t={first_uncovered}")]
    CoverageGap { first_uncovered: f64 },
    #[error("no vertex-disjoint pair of handover paths: {0}")]
    DualInfeasible(String),
    #[error("time went backwards: {t} after {last}")]
    TimeRegression { last: f64, t: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Relative importance of link capability and remaining stay time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoMetricWeights<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> HoMetricWeights<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self, HandoverError> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), HandoverError> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.alpha)
            || !unit(self.beta)
            || (self.alpha + self.beta - T::one()).abs() > T::lit(1e-6)
        {
            return Err(HandoverError::InvalidWeights {
                alpha: self.alpha.as_f64(),
                beta: self.beta.as_f64(),
            });
        }
        Ok(())
    }
}

impl<T: Scalar> Default for HoMetricWeights<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.5),
            beta: T::lit(0.5),
        }
    }
}

//! CSI history buffers, CSI predictors and the interference matrix.
//!
//! Two predictors share the [`CsiSample`] interface: an exact ephemeris
//! predictor that re-evaluates the link geometry at the future instant, and
//! an attention-weighted extrapolator over the stored history. The latter
//! weights each stored sample by `softmax(-|t_future - t_i| / tau)` and
//! extrapolates it along its backward finite-difference slope.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::channel::{csi_sample, link_gain_db, ChannelError, CsiSample, LinkParams};
use crate::constellation::{
    elevation, propagate, CoverageSnapshot, GroundPoint, SatelliteOrbit, SatelliteState,
};
use crate::geo::Vec3;
use crate::ids::{SatelliteId, UeId};
use crate::num::{db_to_linear, Scalar};

pub const DEFAULT_HISTORY_CAPACITY: usize = 16;
pub const DEFAULT_ATTENTION_TAU_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictionError {
    #[error("sample at t={new} does not follow the last stored sample at t={last}")]
    OutOfOrder { last: f64, new: f64 },
    #[error("sample belongs to link {got:?}, history holds {expected:?}")]
    WrongLink {
        expected: (SatelliteId, UeId),
        got: (SatelliteId, UeId),
    },
    #[error("prediction needs at least one stored sample")]
    InsufficientData,
    #[error("prediction instant {t_future} is not after the last sample at {last}")]
    NotInFuture { last: f64, t_future: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("satellite {satellite} does not cover UE {ue}")]
    CoverageViolation { ue: UeId, satellite: SatelliteId },
    #[error("no state for satellite {0}")]
    MissingState(SatelliteId),
    #[error("unknown UE {0}")]
    UnknownUe(UeId),
    #[error("{0}")]
    Shape(String),
}

/// Bounded, time-ordered CSI history of one satellite-UE link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiHistory<T> {
    pub link: (SatelliteId, UeId),
    pub capacity: usize,
    samples: VecDeque<CsiSample<T>>,
}

impl<T: Scalar> CsiHistory<T> {
    pub fn new(link: (SatelliteId, UeId), capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            link,
            capacity,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends a sample, evicting the oldest one once the capacity is reached.
    pub fn push(&mut self, sample: CsiSample<T>) -> Result<(), PredictionError> {
        let got = (sample.satellite_id, sample.ue_id);
        if got != self.link {
            return Err(PredictionError::WrongLink {
                expected: self.link,
                got,
            });
        }
        if let Some(last) = self.samples.back() {
            if !(sample.time > last.time) {
                return Err(PredictionError::OutOfOrder {
                    last: last.time.as_f64(),
                    new: sample.time.as_f64(),
                });
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&CsiSample<T>> {
        self.samples.back()
    }

    /// Samples, oldest first.
    pub fn samples(&self) -> impl ExactSizeIterator<Item = &CsiSample<T>> + '_ {
        self.samples.iter()
    }
}

/// Attention weights of the stored samples for a prediction at `t_future`.
pub fn attention_weights<T: Scalar>(history: &CsiHistory<T>, t_future: T, tau: T) -> Vec<T> {
    let scores: Vec<T> = history
        .samples()
        .map(|s| -(t_future - s.time).abs() / tau)
        .collect();
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Attention-weighted CSI extrapolation.
pub fn predict_csi_attention<T: Scalar>(
    history: &CsiHistory<T>,
    t_future: T,
    tau: T,
) -> Result<CsiSample<T>, PredictionError> {
    let last = history.last().ok_or(PredictionError::InsufficientData)?;
    if !(t_future > last.time) {
        return Err(PredictionError::NotInFuture {
            last: last.time.as_f64(),
            t_future: t_future.as_f64(),
        });
    }
    let weights = attention_weights(history, t_future, tau);
    let (mut gain, mut loss, mut doppler) = (T::zero(), T::zero(), T::zero());
    let mut prev: Option<&CsiSample<T>> = None;
    for (w, s) in weights.iter().zip(history.samples()) {
        let lead = t_future - s.time;
        let slope = |f: fn(&CsiSample<T>) -> T| match prev {
            Some(p) => (f(s) - f(p)) / (s.time - p.time),
            None => T::zero(),
        };
        gain = gain + *w * (s.channel_gain_db + slope(|c| c.channel_gain_db) * lead);
        loss = loss + *w * (s.path_loss_db + slope(|c| c.path_loss_db) * lead);
        doppler = doppler + *w * (s.doppler_hz + slope(|c| c.doppler_hz) * lead);
        prev = Some(s);
    }
    Ok(CsiSample {
        time: t_future,
        satellite_id: last.satellite_id,
        ue_id: last.ue_id,
        channel_gain_db: gain,
        path_loss_db: loss,
        doppler_hz: doppler,
    })
}

/// Exact-geometry CSI at `t_future`; fails when the satellite is below the
/// elevation mask of `gp` at that instant.
pub fn predict_csi_ephemeris<T: Scalar>(
    orbit: &SatelliteOrbit<T>,
    gp: &GroundPoint<T>,
    ue_id: UeId,
    boresight: &GroundPoint<T>,
    params: &LinkParams<T>,
    t_future: T,
    mask_deg: T,
) -> Result<CsiSample<T>, PredictionError> {
    let state = propagate(orbit, t_future);
    if elevation(&state, gp) < mask_deg {
        return Err(ChannelError::NotVisible {
            satellite: orbit.id,
            ue: ue_id,
        }
        .into());
    }
    Ok(csi_sample(&state, gp, ue_id, boresight, params, t_future)?)
}

/// Transmitter column of an [`InterferenceMatrix`]: one beam of one
/// satellite, pointed at `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transmitter {
    pub satellite_id: SatelliteId,
    pub target: UeId,
}

/// Linear power gains from every transmitter beam to every receive link.
///
/// Row `r` and column `r` belong to the same assignment, so the serving
/// coefficients sit on the diagonal. A dual-connected UE owns two rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMatrix<T> {
    pub ue_ids: Vec<UeId>,
    pub tx_ids: Vec<Transmitter>,
    /// Row-major, `ue_ids.len() x tx_ids.len()`.
    pub coefficients: Vec<T>,
    /// Extra interference per row from transmitters outside the matrix, W.
    pub background_w: Vec<T>,
}

impl<T: Scalar> InterferenceMatrix<T> {
    pub fn empty() -> Self {
        Self {
            ue_ids: Vec::new(),
            tx_ids: Vec::new(),
            coefficients: Vec::new(),
            background_w: Vec::new(),
        }
    }

    /// Builds a square matrix over `links` with `coeff(row, col)`.
    pub fn from_fn(
        links: &[(UeId, SatelliteId)],
        mut coeff: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let n = links.len();
        let mut coefficients = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                coefficients.push(coeff(r, c));
            }
        }
        Self {
            ue_ids: links.iter().map(|l| l.0).collect(),
            tx_ids: links
                .iter()
                .map(|&(ue, sat)| Transmitter {
                    satellite_id: sat,
                    target: ue,
                })
                .collect(),
            coefficients,
            background_w: vec![T::zero(); n],
        }
    }

    pub fn rows(&self) -> usize {
        self.ue_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.tx_ids.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.coefficients[row * self.tx_ids.len() + col]
    }

    /// Whether column `col` carries useful signal for row `row` (its own
    /// beam or another beam serving the same UE) rather than interference.
    #[inline]
    pub fn is_own(&self, row: usize, col: usize) -> bool {
        row == col || self.tx_ids[col].target == self.ue_ids[row]
    }

    pub fn check(&self) -> Result<(), PredictionError> {
        let (r, c) = (self.rows(), self.cols());
        if r != c || self.coefficients.len() != r * c || self.background_w.len() != r {
            return Err(PredictionError::Shape(format!(
                "matrix {r}x{c} with {} coefficients and {} background entries",
                self.coefficients.len(),
                self.background_w.len()
            )));
        }
        if self
            .coefficients
            .iter()
            .chain(&self.background_w)
            .any(|v| !(*v >= T::zero()) || !v.is_finite())
        {
            return Err(PredictionError::Shape(
                "coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Same matrix with rows and columns reordered by `perm` (new index ->
    /// old index).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.rows();
        let mut coefficients = Vec::with_capacity(n * n);
        for &r in perm {
            for &c in perm {
                coefficients.push(self.get(r, c));
            }
        }
        Self {
            ue_ids: perm.iter().map(|&i| self.ue_ids[i]).collect(),
            tx_ids: perm.iter().map(|&i| self.tx_ids[i]).collect(),
            coefficients,
            background_w: perm.iter().map(|&i| self.background_w[i]).collect(),
        }
    }
}

/// Linear gain of the beam from `sat` aimed at `boresight`, observed at
/// `ground`; zero below the geometric horizon.
#[inline]
pub(crate) fn linear_gain<T: Scalar>(
    sat: Vec3<T>,
    boresight: Vec3<T>,
    ground: Vec3<T>,
    params: &LinkParams<T>,
) -> T {
    match link_gain_db(sat, boresight, ground, params) {
        Some((g, _)) => db_to_linear(g),
        None => T::zero(),
    }
}

/// Interference matrix for a set of (UE, satellite) assignments, each
/// served by one beam aimed at `boresights[i]`.
pub fn interference_matrix<T: Scalar>(
    snapshot: &CoverageSnapshot<T>,
    states: &BTreeMap<SatelliteId, SatelliteState<T>>,
    ue_positions: &BTreeMap<UeId, GroundPoint<T>>,
    assignments: &[(UeId, SatelliteId)],
    boresights: &[GroundPoint<T>],
    params: &LinkParams<T>,
) -> Result<InterferenceMatrix<T>, PredictionError> {
    if boresights.len() != assignments.len() {
        return Err(PredictionError::Shape(format!(
            "{} assignments but {} boresights",
            assignments.len(),
            boresights.len()
        )));
    }
    let mut sat_pos = Vec::with_capacity(assignments.len());
    let mut ue_pos = Vec::with_capacity(assignments.len());
    for &(ue, sat) in assignments {
        if !snapshot.covers(sat, ue) {
            return Err(PredictionError::CoverageViolation { ue, satellite: sat });
        }
        sat_pos.push(
            states
                .get(&sat)
                .ok_or(PredictionError::MissingState(sat))?
                .position,
        );
        ue_pos.push(
            ue_positions
                .get(&ue)
                .ok_or(PredictionError::UnknownUe(ue))?
                .ecef(),
        );
    }
    let aim: Vec<Vec3<T>> = boresights.iter().map(|b| b.ecef()).collect();
    Ok(InterferenceMatrix::from_fn(assignments, |r, c| {
        linear_gain(sat_pos[c], aim[c], ue_pos[r], params)
    }))
}

//! Downlink link model: free-space path loss, Doppler, a Gaussian beam
//! pattern, thermal noise, SINR and capped Shannon rate.

use serde::{Deserialize, Serialize};

use crate::constellation::propagate::elevation_from;
use crate::constellation::{GroundPoint, SatelliteState, SPEED_OF_LIGHT_KM_S};
use crate::geo::Vec3;
use crate::ids::{SatelliteId, UeId};
use crate::num::{db_to_linear, linear_to_db, Scalar};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("satellite {satellite} is below the horizon of UE {ue}")]
    NotVisible { satellite: SatelliteId, ue: UeId },
}

/// Radio parameters shared by every satellite and UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams<T> {
    pub carrier_frequency_hz: T,
    pub bandwidth_hz: T,
    pub tx_power_dbw: T,
    pub sat_antenna_gain_dbi: T,
    pub ue_antenna_gain_dbi: T,
    pub noise_temperature_k: T,
    pub beamwidth_3db_deg: T,
    /// Upper bound on spectral efficiency, b/s/Hz.
    pub spectral_efficiency_cap: T,
    /// Sidelobe floor below boresight gain, dB.
    pub sidelobe_floor_db: T,
    /// Fixed extra loss applied to every link, dB.
    pub excess_loss_db: T,
}

impl<T: Scalar> Default for LinkParams<T> {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: T::lit(2e9),
            bandwidth_hz: T::lit(30e6),
            tx_power_dbw: T::lit(34.0),
            sat_antenna_gain_dbi: T::lit(30.0),
            ue_antenna_gain_dbi: T::zero(),
            noise_temperature_k: T::lit(290.0),
            beamwidth_3db_deg: T::lit(4.0),
            spectral_efficiency_cap: T::lit(7.8),
            sidelobe_floor_db: T::lit(30.0),
            excess_loss_db: T::zero(),
        }
    }
}

impl<T: Scalar> LinkParams<T> {
    /// Per-satellite transmit power budget, W.
    pub fn power_budget_w(&self) -> T {
        db_to_linear(self.tx_power_dbw)
    }

    /// Thermal noise power k T B, W.
    pub fn noise_power_w(&self) -> T {
        T::lit(BOLTZMANN) * self.noise_temperature_k * self.bandwidth_hz
    }

    pub fn noise_power_dbm(&self) -> T {
        linear_to_db(self.noise_power_w()) + T::lit(30.0)
    }

    /// Highest achievable rate, bps.
    pub fn max_rate_bps(&self) -> T {
        self.bandwidth_hz * self.spectral_efficiency_cap
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_temperature_k", self.noise_temperature_k),
            ("beamwidth_3db_deg", self.beamwidth_3db_deg),
            ("spectral_efficiency_cap", self.spectral_efficiency_cap),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ChannelError::Domain(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        let finite = [
            ("tx_power_dbw", self.tx_power_dbw),
            ("sat_antenna_gain_dbi", self.sat_antenna_gain_dbi),
            ("ue_antenna_gain_dbi", self.ue_antenna_gain_dbi),
            ("excess_loss_db", self.excess_loss_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ChannelError::Domain(format!("{name} must be finite")));
            }
        }
        if !(self.sidelobe_floor_db >= T::zero()) {
            return Err(ChannelError::Domain(
                "sidelobe_floor_db must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Channel state of one satellite-UE link at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiSample<T> {
    pub time: T,
    pub satellite_id: SatelliteId,
    pub ue_id: UeId,
    /// Antenna gains minus losses, dB.
    pub channel_gain_db: T,
    pub path_loss_db: T,
    pub doppler_hz: T,
}

/// Free-space path loss 32.45 + 20 log10(d_km) + 20 log10(f_MHz), dB.
pub fn free_space_path_loss<T: Scalar>(distance_km: T, frequency_hz: T) -> Result<T, ChannelError> {
    if !(distance_km > T::zero()) || !(frequency_hz > T::zero()) {
        return Err(ChannelError::Domain(format!(
            "path loss needs positive distance and frequency, got {distance_km} km and {frequency_hz} Hz"
        )));
    }
    Ok(T::lit(32.45)
        + T::lit(20.0) * distance_km.log10()
        + T::lit(20.0) * (frequency_hz / T::lit(1e6)).log10())
}

/// Doppler shift seen by a static ground point, Hz. Positive while the
/// satellite approaches.
pub fn doppler_shift<T: Scalar>(
    state: &SatelliteState<T>,
    gp: &GroundPoint<T>,
    frequency_hz: T,
) -> T {
    let los = state.position - gp.ecef();
    let range = los.norm();
    if range <= T::zero() {
        return T::zero();
    }
    let range_rate = los.dot(state.earth_relative_velocity()) / range;
    -(range_rate / T::lit(SPEED_OF_LIGHT_KM_S)) * frequency_hz
}

/// Gaussian beam pattern `G0 - 3 (theta / (bw/2))^2`, floored at
/// `G0 - sidelobe_floor_db`.
pub fn beam_gain<T: Scalar>(off_boresight_deg: T, params: &LinkParams<T>) -> T {
    let half = params.beamwidth_3db_deg / T::lit(2.0);
    let x = off_boresight_deg / half;
    let g0 = params.sat_antenna_gain_dbi;
    (g0 - T::lit(3.0) * x * x).max(g0 - params.sidelobe_floor_db)
}

/// Angle at the satellite between the boresight target and the ground point, degrees.
pub fn off_boresight_deg<T: Scalar>(sat: Vec3<T>, boresight: Vec3<T>, ground: Vec3<T>) -> T {
    (boresight - sat).angle_to(ground - sat).to_degrees()
}

/// Channel gain and path loss of the beam pointed at `boresight` as seen
/// from `ground`. `None` when the satellite is below the geometric horizon.
#[inline]
pub(crate) fn link_gain_db<T: Scalar>(
    sat: Vec3<T>,
    boresight: Vec3<T>,
    ground: Vec3<T>,
    params: &LinkParams<T>,
) -> Option<(T, T)> {
    if elevation_from(sat, ground) < T::zero() {
        return None;
    }
    let range = (sat - ground).norm();
    let pl = free_space_path_loss(range, params.carrier_frequency_hz).ok()?;
    let g = beam_gain(off_boresight_deg(sat, boresight, ground), params);
    Some((
        g + params.ue_antenna_gain_dbi - pl - params.excess_loss_db,
        pl,
    ))
}

/// CSI of the beam aimed at `boresight_target`, observed at `gp`.
pub fn csi_sample<T: Scalar>(
    state: &SatelliteState<T>,
    gp: &GroundPoint<T>,
    ue_id: UeId,
    boresight_target: &GroundPoint<T>,
    params: &LinkParams<T>,
    t: T,
) -> Result<CsiSample<T>, ChannelError> {
    let (gain, pl) = link_gain_db(state.position, boresight_target.ecef(), gp.ecef(), params)
        .ok_or(ChannelError::NotVisible {
            satellite: state.satellite_id,
            ue: ue_id,
        })?;
    Ok(CsiSample {
        time: t,
        satellite_id: state.satellite_id,
        ue_id,
        channel_gain_db: gain,
        path_loss_db: pl,
        doppler_hz: doppler_shift(state, gp, params.carrier_frequency_hz),
    })
}

/// SINR in dB from received powers in dBm.
pub fn sinr<T: Scalar>(serving_rx_dbm: T, interferer_rx_dbm: &[T], params: &LinkParams<T>) -> T {
    let mw = |dbm: T| db_to_linear(dbm);
    let interference: T = interferer_rx_dbm.iter().map(|&p| mw(p)).sum();
    let noise_mw = params.noise_power_w() * T::lit(1e3);
    linear_to_db(mw(serving_rx_dbm) / (noise_mw + interference))
}

/// `bandwidth * min(log2(1 + sinr), cap)` for a dB SINR.
pub fn achievable_rate<T: Scalar>(sinr_db: T, params: &LinkParams<T>) -> T {
    rate_from_linear(db_to_linear(sinr_db), params)
}

/// As [`achievable_rate`] for a linear SINR.
#[inline]
pub fn rate_from_linear<T: Scalar>(sinr_linear: T, params: &LinkParams<T>) -> T {
    if !(sinr_linear > T::zero()) {
        return T::zero();
    }
    params.bandwidth_hz
        * sinr_linear
            .ln_1p()
            .min(params.spectral_efficiency_cap * T::LN_2())
        / T::LN_2()
}

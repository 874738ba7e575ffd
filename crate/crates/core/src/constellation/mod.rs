//! Multi-shell constellation geometry: Walker shells, circular two-body
//! propagation in an Earth-fixed frame, elevation and coverage windows.

mod coverage;
pub(crate) mod propagate;
mod walker;

pub use coverage::{coverage_windows, coverage_windows_sampled, snapshot, snapshot_orbits};
pub(crate) use coverage::{sample_count, sample_time};
pub use propagate::{elevation, mean_motion, orbital_period, propagate, slant_range};
pub use walker::{build_constellation, build_walker_shell};

use serde::{Deserialize, Serialize};

use crate::geo::Vec3;
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// Mean equatorial radius of the spherical Earth model, km.
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.441_8;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;
/// Speed of light, km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Coarse scan step used when locating coverage windows, s.
pub const WINDOW_SCAN_STEP_S: f64 = 1.0;
/// Bisection tolerance on window endpoints, s.
pub const WINDOW_ENDPOINT_TOL_S: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstellationError {
    #[error("invalid shell: {0}")]
    InvalidShell(String),
    #[error("invalid ground point: {0}")]
    InvalidGroundPoint(String),
    #[error("invalid time horizon [{0}, {1}]")]
    InvalidHorizon(f64, f64),
}

/// RAAN distribution of a Walker shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkerPattern {
    /// Planes spread over 360 degrees of RAAN.
    Delta,
    /// Planes spread over 180 degrees of RAAN (near-polar shells).
    Star,
}

/// Inclination at and above which a shell defaults to the star pattern.
pub const STAR_PATTERN_MIN_INCLINATION_DEG: f64 = 80.0;

/// A Walker shell: satellites sharing altitude and inclination in evenly
/// spaced planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalShell<T> {
    pub shell_id: u16,
    pub satellite_count: u32,
    pub plane_count: u32,
    pub inclination_deg: T,
    pub altitude_km: T,
    #[serde(default = "default_phasing")]
    pub phasing_factor: u32,
    /// Explicit pattern; `None` picks star for inclination >= 80 degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<WalkerPattern>,
}

fn default_phasing() -> u32 {
    1
}

impl<T: Scalar> OrbitalShell<T> {
    /// Shell with the default phasing (1, or 0 for a single plane).
    pub fn new(
        shell_id: u16,
        satellite_count: u32,
        plane_count: u32,
        inclination_deg: T,
        altitude_km: T,
    ) -> Self {
        Self {
            shell_id,
            satellite_count,
            plane_count,
            inclination_deg,
            altitude_km,
            phasing_factor: default_phasing().min(plane_count.saturating_sub(1)),
            pattern: None,
        }
    }

    pub fn satellites_per_plane(&self) -> u32 {
        self.satellite_count
            .checked_div(self.plane_count)
            .unwrap_or(0)
    }

    pub fn semi_major_axis_km(&self) -> T {
        T::lit(EARTH_RADIUS_KM) + self.altitude_km
    }

    pub fn effective_pattern(&self) -> WalkerPattern {
        self.pattern.unwrap_or(
            if self.inclination_deg >= T::lit(STAR_PATTERN_MIN_INCLINATION_DEG) {
                WalkerPattern::Star
            } else {
                WalkerPattern::Delta
            },
        )
    }

    pub fn validate(&self) -> Result<(), ConstellationError> {
        let bad = |m: String| Err(ConstellationError::InvalidShell(m));
        if self.satellite_count == 0 || self.plane_count == 0 {
            return bad(format!(
                "shell {}: satellite and plane counts must be positive",
                self.shell_id
            ));
        }
        if !self.satellite_count.is_multiple_of(self.plane_count) {
            return bad(format!(
                "shell {}: {} satellites not divisible into {} planes",
                self.shell_id, self.satellite_count, self.plane_count
            ));
        }
        if !(self.inclination_deg >= T::zero() && self.inclination_deg <= T::lit(180.0)) {
            return bad(format!(
                "shell {}: inclination outside [0, 180] degrees",
                self.shell_id
            ));
        }
        if !(self.altitude_km > T::zero()) || !self.altitude_km.is_finite() {
            return bad(format!(
                "shell {}: altitude must be positive",
                self.shell_id
            ));
        }
        if self.phasing_factor >= self.plane_count {
            return bad(format!(
                "shell {}: phasing factor must be below plane count",
                self.shell_id
            ));
        }
        Ok(())
    }
}

/// Circular orbit of one satellite. Angles in degrees, epoch at t = 0
/// unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteOrbit<T> {
    pub id: SatelliteId,
    pub raan_deg: T,
    pub initial_anomaly_deg: T,
    pub inclination_deg: T,
    pub semi_major_axis_km: T,
    pub epoch_s: T,
}

impl<T: Scalar> SatelliteOrbit<T> {
    pub fn altitude_km(&self) -> T {
        self.semi_major_axis_km - T::lit(EARTH_RADIUS_KM)
    }
}

/// Instantaneous kinematics.
///
/// `position` is Earth-fixed. `velocity` is the inertial velocity resolved
/// in the Earth-fixed axes, so its magnitude is the circular speed; the
/// Earth-relative velocity is `velocity - omega x position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState<T> {
    pub satellite_id: SatelliteId,
    pub time: T,
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
}

impl<T: Scalar> SatelliteState<T> {
    /// Velocity relative to the rotating Earth.
    pub fn earth_relative_velocity(&self) -> Vec3<T> {
        let omega = Vec3::new(T::zero(), T::zero(), T::lit(EARTH_ROTATION_RATE));
        self.velocity - omega.cross(self.position)
    }
}

/// Point on (or above) the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint<T> {
    pub latitude_deg: T,
    pub longitude_deg: T,
    #[serde(default)]
    pub altitude_km: T,
}

impl<T: Scalar> GroundPoint<T> {
    pub fn new(latitude_deg: T, longitude_deg: T) -> Result<Self, ConstellationError> {
        Self::with_altitude(latitude_deg, longitude_deg, T::zero())
    }

    pub fn with_altitude(
        latitude_deg: T,
        longitude_deg: T,
        altitude_km: T,
    ) -> Result<Self, ConstellationError> {
        let gp = Self {
            latitude_deg,
            longitude_deg,
            altitude_km,
        };
        gp.validate()?;
        Ok(gp)
    }

    pub fn validate(&self) -> Result<(), ConstellationError> {
        let in_range = |v: T, lim: f64| v >= T::lit(-lim) && v <= T::lit(lim);
        if !in_range(self.latitude_deg, 90.0) {
            return Err(ConstellationError::InvalidGroundPoint(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        if !in_range(self.longitude_deg, 180.0) {
            return Err(ConstellationError::InvalidGroundPoint(format!(
                "longitude {} outside [-180, 180]",
                self.longitude_deg
            )));
        }
        if !self.altitude_km.is_finite() {
            return Err(ConstellationError::InvalidGroundPoint(
                "non-finite altitude".into(),
            ));
        }
        Ok(())
    }

    /// Earth-fixed position, km.
    pub fn ecef(&self) -> Vec3<T> {
        let r = T::lit(EARTH_RADIUS_KM) + self.altitude_km;
        let (slat, clat) = self.latitude_deg.to_radians().sin_cos();
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        Vec3::new(r * clat * clon, r * clat * slon, r * slat)
    }
}

/// Interval during which a satellite is above the elevation mask of a
/// ground point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageWindow<T> {
    pub satellite_id: SatelliteId,
    pub ground_point_id: UeId,
    pub start: T,
    pub end: T,
    pub peak_elevation_deg: T,
}

impl<T: Scalar> CoverageWindow<T> {
    pub fn duration(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.start && t <= self.end
    }

    /// Length of the common interval with `other` (zero if disjoint).
    pub fn overlap(&self, other: &Self) -> T {
        (self.end.min(other.end) - self.start.max(other.start)).max(T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry<T> {
    pub satellite_id: SatelliteId,
    pub ground_point_id: UeId,
    pub elevation_deg: T,
    pub slant_range_km: T,
}

/// Instantaneous multi-coverage state; entries sorted by (satellite, ground point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSnapshot<T> {
    pub time: T,
    pub entries: Vec<SnapshotEntry<T>>,
}

impl<T: Scalar> CoverageSnapshot<T> {
    pub fn covers(&self, sat: SatelliteId, gp: UeId) -> bool {
        self.entry(sat, gp).is_some()
    }

    pub fn entry(&self, sat: SatelliteId, gp: UeId) -> Option<&SnapshotEntry<T>> {
        self.entries
            .binary_search_by(|e| (e.satellite_id, e.ground_point_id).cmp(&(sat, gp)))
            .ok()
            .map(|i| &self.entries[i])
    }
}

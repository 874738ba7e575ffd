use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::caas_control::GeoRect;
use crate::constellation::propagate::elevation_from;
use crate::constellation::{
    build_constellation, coverage_windows_sampled, elevation, propagate, sample_count, sample_time,
    ConstellationError, CoverageWindow, GroundPoint, OrbitalShell, SatelliteOrbit, SatelliteState,
    EARTH_RADIUS_KM, WINDOW_SCAN_STEP_S,
};
use crate::geo::Vec3;
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// Extra central angle allowed when prefiltering satellites, degrees.
const PREFILTER_MARGIN_DEG: f64 = 1.0;

/// Satellite positions sampled on the coverage scan grid, restricted to
/// satellites that can rise above the mask somewhere in the service area.
#[derive(Debug, Clone)]
pub struct Ephemeris<T> {
    pub orbits: Vec<SatelliteOrbit<T>>,
    pub horizon: (T, T),
    pub step: T,
    pub mask_deg: T,
    positions: Vec<Vec<Vec3<T>>>,
    index: BTreeMap<SatelliteId, usize>,
}

/// Earth central angle between a ground point and the edge of the
/// coverage footprint of a satellite at `altitude_km`, degrees.
pub fn footprint_half_angle_deg<T: Scalar>(altitude_km: T, mask_deg: T) -> T {
    let re = T::lit(EARTH_RADIUS_KM);
    let e = mask_deg.to_radians();
    ((re / (re + altitude_km) * e.cos()).acos() - e).to_degrees()
}

impl<T: Scalar> Ephemeris<T> {
    pub fn build(
        shells: &[OrbitalShell<T>],
        area: &GeoRect<T>,
        mask_deg: T,
        horizon: (T, T),
    ) -> Result<Self, ConstellationError> {
        let orbits = build_constellation(shells)?;
        let (t0, t1) = horizon;
        let step = T::lit(WINDOW_SCAN_STEP_S);
        let n = if t1 > t0 {
            sample_count(t0, t1, step)
        } else {
            1
        };

        let center = area.center().ecef().normalized();
        let corners = [
            (area.lat_min_deg, area.lon_min_deg),
            (area.lat_min_deg, area.lon_max_deg),
            (area.lat_max_deg, area.lon_min_deg),
            (area.lat_max_deg, area.lon_max_deg),
            (area.lat_min_deg, area.center().longitude_deg),
            (area.lat_max_deg, area.center().longitude_deg),
        ];
        let reach = corners
            .iter()
            .map(|&(la, lo)| GroundPoint {
                latitude_deg: la,
                longitude_deg: lo,
                altitude_km: T::zero(),
            })
            .map(|g| center.angle_to(g.ecef()).to_degrees())
            .fold(T::zero(), T::max);

        let sampled: Vec<Option<Vec<Vec3<T>>>> = orbits
            .par_iter()
            .map(|o| {
                let limit = (footprint_half_angle_deg(o.altitude_km(), mask_deg)
                    + reach
                    + T::lit(PREFILTER_MARGIN_DEG))
                .to_radians()
                .cos();
                let pos: Vec<Vec3<T>> = (0..n)
                    .map(|k| propagate(o, sample_time(t0, t1, step, k)).position)
                    .collect();
                let near = pos.iter().any(|p| p.normalized().dot(center) >= limit);
                near.then_some(pos)
            })
            .collect();
        let mut kept = Vec::new();
        let mut positions = Vec::new();
        for (o, p) in orbits.into_iter().zip(sampled) {
            if let Some(p) = p {
                kept.push(o);
                positions.push(p);
            }
        }
        let index = kept.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
        Ok(Self {
            orbits: kept,
            horizon,
            step,
            mask_deg,
            positions,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn index_of(&self, id: SatelliteId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Position of satellite `i` at `t`, from the cache when `t` is on the grid.
    pub fn position(&self, i: usize, t: T) -> Vec3<T> {
        let k = (t - self.horizon.0) / self.step;
        if k >= T::zero() && k.fract() == T::zero() {
            if let Some(p) = k.to_usize().and_then(|k| self.positions[i].get(k)) {
                return *p;
            }
        }
        propagate(&self.orbits[i], t).position
    }

    pub fn state(&self, i: usize, t: T) -> SatelliteState<T> {
        propagate(&self.orbits[i], t)
    }

    /// Coverage windows of every cached satellite over `gp` within the
    /// ephemeris horizon, ordered by satellite then start.
    pub fn windows(&self, gp: &GroundPoint<T>, ue_id: UeId) -> Vec<CoverageWindow<T>> {
        let (t0, t1) = self.horizon;
        if !(t1 > t0) {
            return Vec::new();
        }
        let g = gp.ecef();
        let mut out = Vec::new();
        let mut coarse = Vec::with_capacity(self.positions.first().map_or(0, Vec::len));
        for (i, orbit) in self.orbits.iter().enumerate() {
            coarse.clear();
            coarse.extend(self.positions[i].iter().map(|&p| elevation_from(p, g)));
            // cheap rejection: far below the mask at every sample
            if coarse.iter().all(|&e| e < self.mask_deg - T::lit(5.0)) {
                continue;
            }
            let exact = |t: T| elevation(&propagate(orbit, t), gp);
            out.extend(coverage_windows_sampled(
                &coarse,
                exact,
                orbit.id,
                ue_id,
                self.horizon,
                self.step,
                self.mask_deg,
            ));
        }
        out
    }
}

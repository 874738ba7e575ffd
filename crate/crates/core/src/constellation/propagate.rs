use super::{GroundPoint, SatelliteOrbit, SatelliteState, EARTH_ROTATION_RATE, MU_EARTH};
use crate::geo::Vec3;
use crate::num::Scalar;

/// Circular-orbit angular rate sqrt(mu / a^3), rad/s.
pub fn mean_motion<T: Scalar>(semi_major_axis_km: T) -> T {
    (T::lit(MU_EARTH) / semi_major_axis_km.powi(3)).sqrt()
}

/// Two-body period 2 pi sqrt(a^3 / mu), s.
pub fn orbital_period<T: Scalar>(semi_major_axis_km: T) -> T {
    T::TAU() / mean_motion(semi_major_axis_km)
}

/// Propagates a circular orbit to time `t` (seconds since t = 0).
///
/// The inertial frame coincides with the Earth-fixed frame at t = 0, so the
/// Earth-fixed position is the inertial one rotated by `-omega_e * t`.
pub fn propagate<T: Scalar>(orbit: &SatelliteOrbit<T>, t: T) -> SatelliteState<T> {
    let a = orbit.semi_major_axis_km;
    let n = mean_motion(a);
    let u = orbit.initial_anomaly_deg.to_radians() + n * (t - orbit.epoch_s);
    let (su, cu) = u.sin_cos();
    let (sr, cr) = orbit.raan_deg.to_radians().sin_cos();
    let (si, ci) = orbit.inclination_deg.to_radians().sin_cos();

    let pos_eci = Vec3::new(
        a * (cr * cu - sr * su * ci),
        a * (sr * cu + cr * su * ci),
        a * (su * si),
    );
    let an = a * n;
    let vel_eci = Vec3::new(
        an * (-cr * su - sr * cu * ci),
        an * (-sr * su + cr * cu * ci),
        an * (cu * si),
    );

    let theta = -T::lit(EARTH_ROTATION_RATE) * t;
    SatelliteState {
        satellite_id: orbit.id,
        time: t,
        position: pos_eci.rotate_z(theta),
        velocity: vel_eci.rotate_z(theta),
    }
}

/// Geometric elevation of `position` above the local horizon of `gp`, degrees.
pub fn elevation<T: Scalar>(state: &SatelliteState<T>, gp: &GroundPoint<T>) -> T {
    elevation_from(state.position, gp.ecef())
}

pub(crate) fn elevation_from<T: Scalar>(sat: Vec3<T>, ground: Vec3<T>) -> T {
    let los = sat - ground;
    let range = los.norm();
    if range <= T::zero() {
        return T::lit(90.0);
    }
    let s = (los.dot(ground.normalized()) / range)
        .max(-T::one())
        .min(T::one());
    s.asin().to_degrees()
}

/// Straight-line distance from the ground point to the satellite, km.
pub fn slant_range<T: Scalar>(state: &SatelliteState<T>, gp: &GroundPoint<T>) -> T {
    (state.position - gp.ecef()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::EARTH_RADIUS_KM;
    use crate::ids::SatelliteId;

    fn orbit(alt: f64, incl: f64, raan: f64, anomaly: f64) -> SatelliteOrbit<f64> {
        SatelliteOrbit {
            id: SatelliteId::new(0, 0, 0),
            raan_deg: raan,
            initial_anomaly_deg: anomaly,
            inclination_deg: incl,
            semi_major_axis_km: EARTH_RADIUS_KM + alt,
            epoch_s: 0.0,
        }
    }

    fn to_inertial(s: &SatelliteState<f64>) -> Vec3<f64> {
        s.position.rotate_z(EARTH_ROTATION_RATE * s.time)
    }

    #[test]
    fn period_oracle() {
        // 2 pi sqrt(a^3/mu), evaluated independently
        assert!((orbital_period(EARTH_RADIUS_KM + 550.0) - 5738.992815).abs() < 1e-5);
        assert!((orbital_period(EARTH_RADIUS_KM + 1200.0) - 6565.301256).abs() < 1e-5);
    }

    #[test]
    fn one_period_returns_to_start_inertially() {
        let o = orbit(550.0, 53.0, 40.0, 17.0);
        let t = orbital_period(o.semi_major_axis_km);
        let p0 = to_inertial(&propagate(&o, 0.0));
        let p1 = to_inertial(&propagate(&o, t));
        assert!((p0 - p1).norm() < 1e-3);
        // in the Earth-fixed frame it is the start rotated by the Earth's turn over t
        let e0 = propagate(&o, 0.0)
            .position
            .rotate_z(-EARTH_ROTATION_RATE * t);
        assert!((e0 - propagate(&o, t).position).norm() < 1e-3);
    }

    #[test]
    fn circular_radius_and_speed() {
        let o = orbit(550.0, 53.0, 10.0, 100.0);
        for k in 0..600 {
            let s = propagate(&o, k as f64 * 1.37);
            assert!((s.position.norm() - o.semi_major_axis_km).abs() < 1e-6);
            assert!((s.velocity.norm() - 7.585088535).abs() < 1e-4);
            assert!((s.velocity.norm() - (MU_EARTH / o.semi_major_axis_km).sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let o = orbit(1200.0, 86.4, 70.0, 3.0);
        let h = 1e-3;
        let t = 321.0;
        let fd = (to_inertial(&propagate(&o, t + h)) - to_inertial(&propagate(&o, t - h)))
            .scale(1.0 / (2.0 * h));
        let v = propagate(&o, t).velocity.rotate_z(EARTH_ROTATION_RATE * t);
        assert!((fd - v).norm() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let o = orbit(550.0, 53.0, 10.0, 100.0);
        assert_eq!(propagate(&o, 123.456), propagate(&o, 123.456));
    }

    #[test]
    fn zenith_and_antipode() {
        let o = orbit(550.0, 0.0, 0.0, 0.0);
        let s = propagate(&o, 0.0);
        let gp = GroundPoint::new(0.0, 0.0).unwrap();
        assert!((elevation(&s, &gp) - 90.0).abs() < 1e-9);
        assert!((slant_range(&s, &gp) - 550.0).abs() < 1e-9);
        let anti = GroundPoint::new(0.0, 180.0).unwrap();
        assert!(elevation(&s, &anti) < 0.0);
    }

    #[test]
    fn slant_range_at_ten_degrees() {
        // place the satellite where it sits 10 degrees above the horizon of (0, 0):
        // central angle = acos(R cos(el) / (R + h)) - el
        let r = EARTH_RADIUS_KM;
        let h = 550.0;
        let el = 10f64.to_radians();
        let lambda = ((r * el.cos()) / (r + h)).acos() - el;
        let s = SatelliteState {
            satellite_id: SatelliteId::new(0, 0, 0),
            time: 0.0,
            position: Vec3::new((r + h) * lambda.cos(), (r + h) * lambda.sin(), 0.0),
            velocity: Vec3::zero(),
        };
        let gp = GroundPoint::new(0.0, 0.0).unwrap();
        assert!((elevation(&s, &gp) - 10.0).abs() < 1e-9);
        // spherical-triangle oracle: sqrt(R^2 sin^2 e + 2Rh + h^2) - R sin e = 1815.65 km
        assert!((slant_range(&s, &gp) - 1815.6).abs() < 0.5);
    }

    #[test]
    fn generic_f32_radius() {
        let o = SatelliteOrbit {
            id: SatelliteId::new(0, 0, 0),
            raan_deg: 10.0f32,
            initial_anomaly_deg: 20.0,
            inclination_deg: 53.0,
            semi_major_axis_km: 6928.137,
            epoch_s: 0.0,
        };
        let s = propagate(&o, 100.0f32);
        assert!((s.position.norm() - 6928.137).abs() < 1e-2);
    }
}

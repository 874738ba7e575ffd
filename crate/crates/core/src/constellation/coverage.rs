use super::propagate::{elevation, propagate, slant_range};
use super::{
    build_constellation, ConstellationError, CoverageSnapshot, CoverageWindow, GroundPoint,
    OrbitalShell, SatelliteOrbit, SnapshotEntry, WINDOW_ENDPOINT_TOL_S, WINDOW_SCAN_STEP_S,
};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// Samples whose elevation lies within this margin below the mask are probed
/// for a short pass peaking between coarse samples.
const GRAZE_PROBE_DEG: f64 = 1.0;

/// Coverage windows of one satellite over one ground point within
/// `[t0, t1]`, sorted by start.
///
/// A 1 s coarse scan brackets every mask crossing, which bisection then
/// refines to 1 ms. Windows are clipped to the horizon.
pub fn coverage_windows<T: Scalar>(
    orbit: &SatelliteOrbit<T>,
    gp: &GroundPoint<T>,
    gp_id: UeId,
    horizon: (T, T),
    mask_deg: T,
) -> Result<Vec<CoverageWindow<T>>, ConstellationError> {
    let (t0, t1) = horizon;
    check_horizon(t0, t1)?;
    let step = T::lit(WINDOW_SCAN_STEP_S);
    let n = sample_count(t0, t1, step);
    let coarse: Vec<T> = (0..n)
        .map(|k| elevation(&propagate(orbit, sample_time(t0, t1, step, k)), gp))
        .collect();
    let exact = |t: T| elevation(&propagate(orbit, t), gp);
    Ok(coverage_windows_sampled(
        &coarse, exact, orbit.id, gp_id, horizon, step, mask_deg,
    ))
}

fn check_horizon<T: Scalar>(t0: T, t1: T) -> Result<(), ConstellationError> {
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(ConstellationError::InvalidHorizon(t0.as_f64(), t1.as_f64()));
    }
    Ok(())
}

/// Number of coarse samples covering `[t0, t1]` at `step`, both ends included.
pub(crate) fn sample_count<T: Scalar>(t0: T, t1: T, step: T) -> usize {
    ((t1 - t0) / step).ceil().to_usize().unwrap_or(0) + 1
}

#[inline]
pub(crate) fn sample_time<T: Scalar>(t0: T, t1: T, step: T, k: usize) -> T {
    (t0 + T::from_usize_lossy(k) * step).min(t1)
}

/// Window extraction from pre-computed coarse elevations.
///
/// `coarse[k]` is the elevation at `min(t0 + k * step, t1)`; `exact`
/// evaluates the elevation at an arbitrary instant and is used for endpoint
/// bisection and peak refinement.
pub fn coverage_windows_sampled<T: Scalar, F: Fn(T) -> T>(
    coarse: &[T],
    exact: F,
    satellite_id: SatelliteId,
    gp_id: UeId,
    horizon: (T, T),
    step: T,
    mask_deg: T,
) -> Vec<CoverageWindow<T>> {
    let (t0, t1) = horizon;
    let n = coarse.len();
    let time = |k: usize| sample_time(t0, t1, step, k);
    let covered = |k: usize| coarse[k] >= mask_deg;
    let tol = T::lit(WINDOW_ENDPOINT_TOL_S);
    let above = |t: T| exact(t) >= mask_deg;

    let mut out = Vec::new();
    let mut start: Option<(T, usize)> = None;
    for k in 0..n {
        match (start, covered(k)) {
            (None, true) => {
                let s = if k == 0 {
                    t0
                } else {
                    bisect(time(k - 1), time(k), &above, tol)
                };
                start = Some((s, k));
            }
            (Some((s, first)), false) => {
                let e = bisect(time(k - 1), time(k), &above, tol);
                out.push(make_window(
                    s,
                    e,
                    first,
                    k - 1,
                    coarse,
                    &time,
                    &exact,
                    satellite_id,
                    gp_id,
                ));
                start = None;
            }
            (None, false) => {
                // short pass peaking between three uncovered samples
                if k >= 1
                    && k + 1 < n
                    && coarse[k] > coarse[k - 1]
                    && coarse[k] >= coarse[k + 1]
                    && coarse[k] > mask_deg - T::lit(GRAZE_PROBE_DEG)
                {
                    let (tp, ep) = golden_max(time(k - 1), time(k + 1), &exact);
                    if ep >= mask_deg {
                        let s = bisect(time(k - 1), tp, &above, tol);
                        let e = bisect(tp, time(k + 1), &|t| !above(t), tol);
                        if s < e {
                            out.push(CoverageWindow {
                                satellite_id,
                                ground_point_id: gp_id,
                                start: s,
                                end: e,
                                peak_elevation_deg: ep,
                            });
                        }
                    }
                }
            }
            (Some(_), true) => {}
        }
    }
    if let Some((s, first)) = start {
        if s < t1 {
            out.push(make_window(
                s,
                t1,
                first,
                n - 1,
                coarse,
                &time,
                &exact,
                satellite_id,
                gp_id,
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn make_window<T: Scalar>(
    start: T,
    end: T,
    first: usize,
    last: usize,
    coarse: &[T],
    time: &impl Fn(usize) -> T,
    exact: &impl Fn(T) -> T,
    satellite_id: SatelliteId,
    gp_id: UeId,
) -> CoverageWindow<T> {
    let mut best = first;
    for k in first..=last {
        if coarse[k] > coarse[best] {
            best = k;
        }
    }
    let lo = if best > first { time(best - 1) } else { start };
    let hi = if best < last { time(best + 1) } else { end };
    let (_, refined) = golden_max(lo.max(start), hi.min(end), exact);
    CoverageWindow {
        satellite_id,
        ground_point_id: gp_id,
        start,
        end,
        peak_elevation_deg: refined.max(coarse[best]),
    }
}

/// Locates the state change of `pred` inside `[lo, hi]`, assuming
/// `pred(lo) != pred(hi)`; returns the midpoint of the final bracket.
fn bisect<T: Scalar>(mut lo: T, mut hi: T, pred: &impl Fn(T) -> bool, tol: T) -> T {
    let lo_state = pred(lo);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if pred(mid) == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

fn golden_max<T: Scalar>(mut a: T, mut b: T, f: &impl Fn(T) -> T) -> (T, T) {
    let invphi = T::lit(0.618_033_988_749_895);
    let mut c = b - (b - a) * invphi;
    let mut d = a + (b - a) * invphi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if b - a < T::lit(1e-4) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * invphi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * invphi;
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// All (satellite, ground point) pairs above the mask at `t`. Ground point
/// ids are their indices in `gps`.
pub fn snapshot<T: Scalar>(
    shells: &[OrbitalShell<T>],
    gps: &[GroundPoint<T>],
    t: T,
    mask_deg: T,
) -> Result<CoverageSnapshot<T>, ConstellationError> {
    let orbits = build_constellation(shells)?;
    Ok(snapshot_orbits(&orbits, gps, t, mask_deg))
}

pub fn snapshot_orbits<T: Scalar>(
    orbits: &[SatelliteOrbit<T>],
    gps: &[GroundPoint<T>],
    t: T,
    mask_deg: T,
) -> CoverageSnapshot<T> {
    let mut entries = Vec::new();
    if !gps.is_empty() {
        for orbit in orbits {
            let state = propagate(orbit, t);
            for (i, gp) in gps.iter().enumerate() {
                let el = elevation(&state, gp);
                if el >= mask_deg {
                    entries.push(SnapshotEntry {
                        satellite_id: orbit.id,
                        ground_point_id: UeId(i as u32),
                        elevation_deg: el,
                        slant_range_km: slant_range(&state, gp),
                    });
                }
            }
        }
    }
    entries.sort_by_key(|e| (e.satellite_id, e.ground_point_id));
    CoverageSnapshot { time: t, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_walker_shell, EARTH_RADIUS_KM};

    fn leo(raan: f64, anomaly: f64) -> SatelliteOrbit<f64> {
        SatelliteOrbit {
            id: SatelliteId::new(0, 0, 0),
            raan_deg: raan,
            initial_anomaly_deg: anomaly,
            inclination_deg: 53.0,
            semi_major_axis_km: EARTH_RADIUS_KM + 550.0,
            epoch_s: 0.0,
        }
    }

    /// Independent brute-force classification at 0.1 s.
    fn brute_force(
        orbit: &SatelliteOrbit<f64>,
        gp: &GroundPoint<f64>,
        t0: f64,
        t1: f64,
        mask: f64,
    ) -> Vec<(f64, f64)> {
        let n = ((t1 - t0) / 0.1).round() as usize;
        let mut out = Vec::new();
        let mut open: Option<f64> = None;
        for k in 0..=n {
            let t = t0 + k as f64 * 0.1;
            let cov = elevation(&propagate(orbit, t), gp) >= mask;
            match (open, cov) {
                (None, true) => open = Some(t),
                (Some(s), false) => {
                    out.push((s, t - 0.1));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            out.push((s, t1));
        }
        out
    }

    #[test]
    fn never_visible_is_empty() {
        // equatorial satellite cannot be seen from the pole
        let mut o = leo(0.0, 0.0);
        o.inclination_deg = 0.0;
        let gp = GroundPoint::new(89.0, 0.0).unwrap();
        assert!(coverage_windows(&o, &gp, UeId(0), (0.0, 3000.0), 10.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_horizon() {
        let gp = GroundPoint::new(0.0, 0.0).unwrap();
        assert!(coverage_windows(&leo(0.0, 0.0), &gp, UeId(0), (10.0, 10.0), 10.0).is_err());
    }

    #[test]
    fn agrees_with_brute_force() {
        let gp = GroundPoint::new(3.0, 100.0).unwrap();
        let mut checked = 0;
        for raan in (0..360).step_by(15) {
            for anomaly in (0..360).step_by(30) {
                let o = leo(raan as f64, anomaly as f64);
                let w = coverage_windows(&o, &gp, UeId(0), (0.0, 600.0), 10.0).unwrap();
                let bf = brute_force(&o, &gp, 0.0, 600.0, 10.0);
                assert_eq!(w.len(), bf.len(), "raan {raan} anomaly {anomaly}");
                for (a, b) in w.iter().zip(&bf) {
                    assert!((a.start - b.0).abs() <= 0.1 && (a.end - b.1).abs() <= 0.1);
                    let mid = 0.5 * (a.start + a.end);
                    assert!(elevation(&propagate(&o, mid), &gp) >= 10.0);
                    assert!(a.peak_elevation_deg >= 10.0);
                }
                checked += w.len();
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn endpoints_sit_on_the_mask() {
        let gp = GroundPoint::new(3.0, 100.0).unwrap();
        for anomaly in (0..360).step_by(5) {
            let o = leo(60.0, anomaly as f64);
            for w in coverage_windows(&o, &gp, UeId(0), (0.0, 6000.0), 10.0).unwrap() {
                if w.start > 0.0 {
                    assert!((elevation(&propagate(&o, w.start), &gp) - 10.0).abs() < 1e-3);
                }
                if w.end < 6000.0 {
                    assert!((elevation(&propagate(&o, w.end), &gp) - 10.0).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn snapshot_matches_windows() {
        let shells = [OrbitalShell::new(0, 1584, 72, 53.0f64, 550.0)];
        let gps = [
            GroundPoint::new(2.0, 100.0).unwrap(),
            GroundPoint::new(5.0, 110.0).unwrap(),
        ];
        let orbits = build_walker_shell(&shells[0]).unwrap();
        for t in [0.0, 137.0, 411.5] {
            let snap = snapshot(&shells, &gps, t, 10.0).unwrap();
            for o in &orbits {
                for (i, gp) in gps.iter().enumerate() {
                    let ws = coverage_windows(o, gp, UeId(i as u32), (0.0, 600.0), 10.0).unwrap();
                    let inside = ws.iter().any(|w| w.start + 0.1 < t && t < w.end - 0.1);
                    let edge = ws
                        .iter()
                        .any(|w| (w.start - t).abs() <= 0.1 || (w.end - t).abs() <= 0.1);
                    if !edge {
                        assert_eq!(inside, snap.covers(o.id, UeId(i as u32)));
                    }
                }
            }
            assert!(snap.entries.iter().all(|e| e.elevation_deg >= 10.0));
        }
    }

    #[test]
    fn empty_ground_points_give_empty_snapshot() {
        let shells = [OrbitalShell::new(0, 4, 2, 53.0, 550.0)];
        assert!(snapshot::<f64>(&shells, &[], 0.0, 10.0)
            .unwrap()
            .entries
            .is_empty());
    }
}

use std::collections::BTreeSet;

use super::{ConstellationError, OrbitalShell, SatelliteOrbit, WalkerPattern};
use crate::ids::SatelliteId;
use crate::num::Scalar;

/// Expands a Walker shell into its satellite orbits.
///
/// Plane `p` sits at RAAN `p * spread / P` (spread 360 degrees for delta,
/// 180 for star). Slot `s` of plane `p` starts at anomaly
/// `s * 360 / S + p * F * 360 / N` with `S` satellites per plane, `N` in
/// total and phasing factor `F`.
pub fn build_walker_shell<T: Scalar>(
    shell: &OrbitalShell<T>,
) -> Result<Vec<SatelliteOrbit<T>>, ConstellationError> {
    shell.validate()?;
    let planes = shell.plane_count;
    let per_plane = shell.satellites_per_plane();
    let spread = match shell.effective_pattern() {
        WalkerPattern::Delta => T::lit(360.0),
        WalkerPattern::Star => T::lit(180.0),
    };
    let raan_step = spread / T::lit(planes as f64);
    let slot_step = T::lit(360.0) / T::lit(per_plane as f64);
    let phase_step =
        T::lit(shell.phasing_factor as f64) * T::lit(360.0) / T::lit(shell.satellite_count as f64);
    let sma = shell.semi_major_axis_km();

    let mut out = Vec::with_capacity(shell.satellite_count as usize);
    for p in 0..planes {
        let pf = T::lit(p as f64);
        for s in 0..per_plane {
            let anomaly = T::lit(s as f64) * slot_step + pf * phase_step;
            out.push(SatelliteOrbit {
                id: SatelliteId::new(shell.shell_id, p as u16, s as u16),
                raan_deg: pf * raan_step,
                initial_anomaly_deg: anomaly % T::lit(360.0),
                inclination_deg: shell.inclination_deg,
                semi_major_axis_km: sma,
                epoch_s: T::zero(),
            });
        }
    }
    Ok(out)
}

/// Builds every shell and concatenates the orbits. Shell ids must be unique.
pub fn build_constellation<T: Scalar>(
    shells: &[OrbitalShell<T>],
) -> Result<Vec<SatelliteOrbit<T>>, ConstellationError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for shell in shells {
        if !seen.insert(shell.shell_id) {
            return Err(ConstellationError::InvalidShell(format!(
                "duplicate shell id {}",
                shell.shell_id
            )));
        }
        out.extend(build_walker_shell(shell)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starlink_like_shell() {
        let orbits = build_walker_shell(&OrbitalShell::new(0, 1584, 72, 53.0f64, 550.0)).unwrap();
        assert_eq!(orbits.len(), 1584);
        let planes: BTreeSet<u16> = orbits.iter().map(|o| o.id.plane).collect();
        assert_eq!(planes.len(), 72);
        assert!(planes
            .iter()
            .all(|p| orbits.iter().filter(|o| o.id.plane == *p).count() == 22));
        assert!((orbits[22].raan_deg - 5.0).abs() < 1e-12);
        assert!((orbits[1].initial_anomaly_deg - 360.0 / 22.0).abs() < 1e-12);
        assert!((orbits[0].semi_major_axis_km - 6928.137).abs() < 1e-9);
    }

    #[test]
    fn oneweb_like_shell_uses_star_spacing() {
        let orbits = build_walker_shell(&OrbitalShell::new(1, 648, 18, 86.4f64, 1200.0)).unwrap();
        assert_eq!(orbits.len(), 648);
        assert_eq!(orbits.iter().filter(|o| o.id.plane == 0).count(), 36);
        // star pattern spreads 18 planes over 180 degrees
        assert!((orbits[36].raan_deg - 10.0).abs() < 1e-12);
        let mut s = OrbitalShell::new(1, 648, 18, 86.4f64, 1200.0);
        s.pattern = Some(WalkerPattern::Delta);
        let delta = build_walker_shell(&s).unwrap();
        assert!((delta[36].raan_deg - 20.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_single_satellite() {
        let mut shell = OrbitalShell::new(0, 1, 1, 0.0, 550.0);
        shell.phasing_factor = 0;
        let orbits = build_walker_shell(&shell).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].raan_deg, 0.0);
        assert_eq!(orbits[0].initial_anomaly_deg, 0.0);
    }

    #[test]
    fn indivisible_shell_rejected() {
        let err = build_walker_shell(&OrbitalShell::new(0, 100, 7, 53.0, 550.0)).unwrap_err();
        assert!(matches!(err, ConstellationError::InvalidShell(_)));
    }

    #[test]
    fn duplicate_shell_ids_rejected() {
        let s = OrbitalShell::new(0, 4, 2, 53.0, 550.0);
        assert!(build_constellation(&[s.clone(), s]).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let orbits =
            build_walker_shell(&OrbitalShell::new(0, 1584u32, 72, 53.0f32, 550.0f32)).unwrap();
        assert!((orbits[22].raan_deg - 5.0).abs() < 1e-5);
    }
}

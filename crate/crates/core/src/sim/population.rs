use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Scenario, SimError};
use crate::caas_control::{Connectivity, Preference, UeRequirement};
use crate::constellation::{build_walker_shell, elevation, propagate, slant_range, GroundPoint};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// A static UE with its service requirement and default access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub struct UeProfile<T> {
    pub ue_id: UeId,
    pub position: GroundPoint<T>,
    pub requirement: UeRequirement<T>,
    pub default_shell: u16,
    /// Strongest covering satellite of the default shell at the start.
    pub default_satellite: Option<SatelliteId>,
}

/// Independent deterministic RNG stream per purpose.
pub fn rng_stream(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a of the stream name selects the ChaCha stream
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Draws the UE population of a scenario.
///
/// Positions come from stream "ue-pos", Poisson demands from "ue-demand"
/// and default shells from "ue-shell". A UE is dual-connected, and latency
/// sensitive, when its demand exceeds the mean.
pub fn populate_ues<T: Scalar>(scenario: &Scenario<T>) -> Result<Vec<UeProfile<T>>, SimError> {
    let n = scenario.ue_count;
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = &scenario.area;
    let mut pos_rng = rng_stream(scenario.seed, "ue-pos");
    let mut demand_rng = rng_stream(scenario.seed, "ue-demand");
    let mut shell_rng = rng_stream(scenario.seed, "ue-shell");
    let lambda = (scenario.demand_mean_bps / scenario.demand_unit_bps).as_f64();
    let poisson =
        Poisson::new(lambda).map_err(|e| SimError::Invalid(format!("demand distribution: {e}")))?;

    let t0 = T::zero();
    let mut shell_orbits = Vec::with_capacity(scenario.shells.len());
    for s in &scenario.shells {
        shell_orbits.push(build_walker_shell(s)?);
    }
    let shell_states: Vec<Vec<_>> = shell_orbits
        .iter()
        .map(|os| os.iter().map(|o| propagate(o, t0)).collect())
        .collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lat: f64 = pos_rng.gen_range(a.lat_min_deg.as_f64()..a.lat_max_deg.as_f64());
        let lon: f64 = pos_rng.gen_range(a.lon_min_deg.as_f64()..a.lon_max_deg.as_f64());
        let position = GroundPoint::new(T::lit(lat), T::lit(lon))?;
        let demand_bps = T::lit(poisson.sample(&mut demand_rng)) * scenario.demand_unit_bps;
        let shell_index = shell_rng.gen_range(0..scenario.shells.len());
        let dual = demand_bps > scenario.demand_mean_bps;

        let default_satellite = shell_states[shell_index]
            .iter()
            .filter(|s| elevation(s, &position) >= scenario.mask_deg)
            .map(|s| (slant_range(s, &position), s.satellite_id))
            .min_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(_, id)| id);

        let ue_id = UeId(i as u32);
        out.push(UeProfile {
            ue_id,
            position,
            requirement: UeRequirement {
                ue_id,
                demand_bps,
                min_rate_bps: scenario.demand_unit_bps,
                connectivity: if dual {
                    Connectivity::Dual
                } else {
                    Connectivity::Single
                },
                preference: if dual {
                    Preference::LatencySensitive
                } else {
                    Preference::CoverageStable
                },
            },
            default_shell: scenario.shells[shell_index].shell_id,
            default_satellite,
        });
    }
    Ok(out)
}

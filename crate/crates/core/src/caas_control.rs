//! Open constellation control: traffic-driven region division and
//! sub-constellation formation from the shared multi-shell satellite pool.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constellation::{
    coverage_windows, ConstellationError, CoverageWindow, GroundPoint, SatelliteOrbit,
};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

pub const DEFAULT_MAX_UES_PER_REGION: usize = 50;
pub const DEFAULT_MAX_DEPTH: u32 = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("invalid area: {0}")]
    InvalidArea(String),
    #[error("no requirement for UE {0}")]
    MissingRequirement(UeId),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
}

/// Latitude/longitude rectangle, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoRect<T> {
    pub lat_min_deg: T,
    pub lat_max_deg: T,
    pub lon_min_deg: T,
    pub lon_max_deg: T,
}

impl<T: Scalar> GeoRect<T> {
    pub fn new(
        lat_min_deg: T,
        lat_max_deg: T,
        lon_min_deg: T,
        lon_max_deg: T,
    ) -> Result<Self, ControlError> {
        let r = Self {
            lat_min_deg,
            lat_max_deg,
            lon_min_deg,
            lon_max_deg,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let ok_lat = |v: T| v >= T::lit(-90.0) && v <= T::lit(90.0);
        let ok_lon = |v: T| v >= T::lit(-180.0) && v <= T::lit(180.0);
        if !(ok_lat(self.lat_min_deg)
            && ok_lat(self.lat_max_deg)
            && self.lat_min_deg < self.lat_max_deg)
        {
            return Err(ControlError::InvalidArea(format!(
                "latitude range [{}, {}]",
                self.lat_min_deg, self.lat_max_deg
            )));
        }
        if !(ok_lon(self.lon_min_deg)
            && ok_lon(self.lon_max_deg)
            && self.lon_min_deg < self.lon_max_deg)
        {
            return Err(ControlError::InvalidArea(format!(
                "longitude range [{}, {}]",
                self.lon_min_deg, self.lon_max_deg
            )));
        }
        Ok(())
    }

    /// Closed containment.
    pub fn contains(&self, gp: &GroundPoint<T>) -> bool {
        gp.latitude_deg >= self.lat_min_deg
            && gp.latitude_deg <= self.lat_max_deg
            && gp.longitude_deg >= self.lon_min_deg
            && gp.longitude_deg <= self.lon_max_deg
    }

    /// Area in square degrees.
    pub fn area_deg2(&self) -> T {
        (self.lat_max_deg - self.lat_min_deg) * (self.lon_max_deg - self.lon_min_deg)
    }

    pub fn center(&self) -> GroundPoint<T> {
        let half = T::lit(0.5);
        GroundPoint {
            latitude_deg: (self.lat_min_deg + self.lat_max_deg) * half,
            longitude_deg: (self.lon_min_deg + self.lon_max_deg) * half,
            altitude_km: T::zero(),
        }
    }

    /// Quadrants in the order SW, SE, NW, NE.
    pub fn quarters(&self) -> [Self; 4] {
        let c = self.center();
        let (lat, lon) = (c.latitude_deg, c.longitude_deg);
        [
            Self {
                lat_max_deg: lat,
                lon_max_deg: lon,
                ..*self
            },
            Self {
                lat_max_deg: lat,
                lon_min_deg: lon,
                ..*self
            },
            Self {
                lat_min_deg: lat,
                lon_max_deg: lon,
                ..*self
            },
            Self {
                lat_min_deg: lat,
                lon_min_deg: lon,
                ..*self
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    pub id: usize,
    pub bounds: GeoRect<T>,
    pub ue_ids: Vec<UeId>,
    pub controller_id: usize,
    pub depth: u32,
}

/// Quadtree division of `area`: any cell holding more than
/// `max_ues_per_region` UEs is quartered until the bound holds or
/// `max_depth` is reached. Leaves are returned in SW, SE, NW, NE order.
///
/// Cell edges are half-open: a UE on an internal edge belongs to the cell
/// to its north or east. UEs outside `area` are clamped onto it.
pub fn divide_regions<T: Scalar>(
    area: &GeoRect<T>,
    ue_positions: &[(UeId, GroundPoint<T>)],
    max_ues_per_region: usize,
    max_depth: u32,
) -> Vec<Region<T>> {
    let clamp = |gp: &GroundPoint<T>| {
        (
            gp.latitude_deg.max(area.lat_min_deg).min(area.lat_max_deg),
            gp.longitude_deg.max(area.lon_min_deg).min(area.lon_max_deg),
        )
    };
    let mut ues: Vec<(UeId, T, T)> = ue_positions
        .iter()
        .map(|(id, gp)| {
            let (la, lo) = clamp(gp);
            (*id, la, lo)
        })
        .collect();
    ues.sort_by_key(|u| u.0);
    let mut out = Vec::new();
    split(
        *area,
        ues,
        0,
        max_ues_per_region.max(1),
        max_depth,
        &mut out,
    );
    out
}

fn split<T: Scalar>(
    bounds: GeoRect<T>,
    ues: Vec<(UeId, T, T)>,
    depth: u32,
    max_ues: usize,
    max_depth: u32,
    out: &mut Vec<Region<T>>,
) {
    if ues.len() <= max_ues || depth >= max_depth {
        let id = out.len();
        out.push(Region {
            id,
            bounds,
            ue_ids: ues.iter().map(|u| u.0).collect(),
            controller_id: id,
            depth,
        });
        return;
    }
    let c = bounds.center();
    let mut parts: [Vec<(UeId, T, T)>; 4] = Default::default();
    for u in ues {
        let north = u.1 >= c.latitude_deg;
        let east = u.2 >= c.longitude_deg;
        parts[usize::from(north) * 2 + usize::from(east)].push(u);
    }
    for (q, part) in bounds.quarters().into_iter().zip(parts) {
        split(q, part, depth + 1, max_ues, max_depth, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Single,
    Dual,
}

impl Connectivity {
    pub fn links(self) -> usize {
        match self {
            Connectivity::Single => 1,
            Connectivity::Dual => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    LatencySensitive,
    CoverageStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeRequirement<T> {
    pub ue_id: UeId,
    pub demand_bps: T,
    pub min_rate_bps: T,
    pub connectivity: Connectivity,
    pub preference: Preference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScOptions<T> {
    pub slice_s: T,
    pub validity_s: T,
    pub capacity_per_satellite: u32,
    /// Score multiplier for a satellite in the UE's preferred altitude class.
    pub altitude_preference: T,
    /// Slack each side of a slice a covering window must also span, s.
    pub slice_margin_s: T,
}

impl<T: Scalar> Default for ScOptions<T> {
    fn default() -> Self {
        Self {
            slice_s: T::lit(10.0),
            validity_s: T::lit(60.0),
            capacity_per_satellite: 30,
            altitude_preference: T::lit(1.5),
            slice_margin_s: T::lit(2.0),
        }
    }
}

impl<T: Scalar> ScOptions<T> {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.slice_s > T::zero()) || !(self.validity_s > T::zero()) {
            return Err(ControlError::InvalidOption(
                "slice and validity must be positive".into(),
            ));
        }
        if self.capacity_per_satellite == 0 {
            return Err(ControlError::InvalidOption(
                "capacity_per_satellite must be positive".into(),
            ));
        }
        if !(self.altitude_preference >= T::one()) || !(self.slice_margin_s >= T::zero()) {
            return Err(ControlError::InvalidOption(
                "altitude_preference >= 1 and slice_margin_s >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubConstellation<T> {
    pub region_id: usize,
    pub satellite_ids: BTreeSet<SatelliteId>,
    pub valid_from: T,
    pub valid_to: T,
    pub capacity_per_satellite: u32,
}

/// A demand point left without enough covering members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncoveredDemand<T> {
    pub ue_id: UeId,
    pub slice_start: T,
    pub missing_links: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScFormation<T> {
    pub sc: SubConstellation<T>,
    pub uncovered: Vec<UncoveredDemand<T>>,
    /// Planned (UE, slice index) assignments per member.
    pub assignments: BTreeMap<SatelliteId, Vec<(UeId, usize)>>,
}

impl<T: Scalar> ScFormation<T> {
    pub fn is_partial(&self) -> bool {
        !self.uncovered.is_empty()
    }
}

/// One satellite of the shared pool as seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolSatellite<T> {
    pub id: SatelliteId,
    pub altitude_km: T,
}

/// Start instants of the demand slices of `[from, to)`.
pub fn slice_starts<T: Scalar>(from: T, to: T, slice: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let s = from + T::from_usize_lossy(k) * slice;
        if !(s < to) {
            break;
        }
        out.push(s);
        k += 1;
    }
    out
}

/// Greedy sub-constellation formation from precomputed coverage windows.
///
/// `windows[ue]` holds every pool window of that UE; windows of satellites
/// missing from `pool` are ignored. Each (UE, slice) demand point needs as
/// many covering members as the UE has links. A satellite covers a point
/// when one of its windows spans the slice widened by `slice_margin_s`
/// (clipped to `window_horizon`). The satellite serving the largest
/// preference-weighted number of open points is added until no satellite
/// can serve any more; ties go to `retained` members, then to the lower id.
#[allow(clippy::too_many_arguments)]
pub fn form_sc_from_windows<T: Scalar>(
    region: &Region<T>,
    pool: &[PoolSatellite<T>],
    windows: &BTreeMap<UeId, Vec<CoverageWindow<T>>>,
    reqs: &BTreeMap<UeId, UeRequirement<T>>,
    validity: (T, T),
    window_horizon: (T, T),
    retained: &BTreeSet<SatelliteId>,
    opts: &ScOptions<T>,
) -> Result<ScFormation<T>, ControlError> {
    opts.validate()?;
    let (from, to) = validity;
    let slices = slice_starts(from, to, opts.slice_s);
    let alt: BTreeMap<SatelliteId, T> = pool.iter().map(|p| (p.id, p.altitude_km)).collect();
    let (alt_lo, alt_hi) = pool
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
            (lo.min(p.altitude_km), hi.max(p.altitude_km))
        });

    // demand points (ue index, slice index)
    let ues: Vec<UeId> = region.ue_ids.clone();
    let mut need: Vec<Vec<usize>> = Vec::with_capacity(ues.len());
    for u in &ues {
        let r = reqs.get(u).ok_or(ControlError::MissingRequirement(*u))?;
        need.push(vec![r.connectivity.links(); slices.len()]);
    }

    // coverable points per satellite with their weights
    let mut cover: BTreeMap<SatelliteId, Vec<(usize, usize, T)>> = BTreeMap::new();
    for (ui, u) in ues.iter().enumerate() {
        let pref = reqs[u].preference;
        for w in windows.get(u).map(Vec::as_slice).unwrap_or_default() {
            let Some(&a) = alt.get(&w.satellite_id) else {
                continue;
            };
            let preferred = match pref {
                Preference::CoverageStable => a >= alt_hi,
                Preference::LatencySensitive => a <= alt_lo,
            };
            let weight = if preferred {
                opts.altitude_preference
            } else {
                T::one()
            };
            for (k, &s) in slices.iter().enumerate() {
                let lo = (s - opts.slice_margin_s).max(window_horizon.0);
                let hi = (s + opts.slice_s + opts.slice_margin_s)
                    .min(to)
                    .min(window_horizon.1);
                if w.start <= lo && w.end >= hi {
                    cover
                        .entry(w.satellite_id)
                        .or_default()
                        .push((ui, k, weight));
                }
            }
        }
    }
    for pts in cover.values_mut() {
        pts.sort_by_key(|p| (p.1, p.0));
        pts.dedup_by_key(|p| (p.1, p.0));
    }

    let cap = opts.capacity_per_satellite as usize;
    let mut members = BTreeSet::new();
    let mut assignments: BTreeMap<SatelliteId, Vec<(UeId, usize)>> = BTreeMap::new();
    loop {
        // score: per slice, the best `cap` open points
        let mut best: Option<(T, bool, SatelliteId)> = None;
        for (&sat, pts) in &cover {
            if members.contains(&sat) {
                continue;
            }
            let score = score_of(pts, &need, cap);
            if !(score > T::zero()) {
                continue;
            }
            let keep = retained.contains(&sat);
            let better = match &best {
                None => true,
                Some((bs, bk, _)) => score > *bs || (score == *bs && keep && !*bk),
            };
            if better {
                best = Some((score, keep, sat));
            }
        }
        let Some((_, _, sat)) = best else { break };
        members.insert(sat);
        let taken = assign(&cover[&sat], &mut need, cap);
        assignments.insert(sat, taken.into_iter().map(|(ui, k)| (ues[ui], k)).collect());
    }

    let mut uncovered = Vec::new();
    for (k, &s) in slices.iter().enumerate() {
        for (ui, u) in ues.iter().enumerate() {
            if need[ui][k] > 0 {
                uncovered.push(UncoveredDemand {
                    ue_id: *u,
                    slice_start: s,
                    missing_links: need[ui][k],
                });
            }
        }
    }
    Ok(ScFormation {
        sc: SubConstellation {
            region_id: region.id,
            satellite_ids: members,
            valid_from: from,
            valid_to: to,
            capacity_per_satellite: opts.capacity_per_satellite,
        },
        uncovered,
        assignments,
    })
}

/// Points are sorted by slice; per slice the `cap` heaviest open points count.
fn score_of<T: Scalar>(pts: &[(usize, usize, T)], need: &[Vec<usize>], cap: usize) -> T {
    let mut total = T::zero();
    let mut i = 0;
    let mut buf: Vec<T> = Vec::new();
    while i < pts.len() {
        let k = pts[i].1;
        buf.clear();
        while i < pts.len() && pts[i].1 == k {
            if need[pts[i].0][k] > 0 {
                buf.push(pts[i].2);
            }
            i += 1;
        }
        if buf.len() > cap {
            buf.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
            buf.truncate(cap);
        }
        total = total + buf.iter().copied().sum::<T>();
    }
    total
}

/// Serves up to `cap` open points per slice: heaviest first, then the
/// points with the largest outstanding need, then UE order.
fn assign<T: Scalar>(
    pts: &[(usize, usize, T)],
    need: &mut [Vec<usize>],
    cap: usize,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let k = pts[i].1;
        let mut open: Vec<(usize, T)> = Vec::new();
        while i < pts.len() && pts[i].1 == k {
            if need[pts[i].0][k] > 0 {
                open.push((pts[i].0, pts[i].2));
            }
            i += 1;
        }
        open.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(need[b.0][k].cmp(&need[a.0][k]))
                .then(a.0.cmp(&b.0))
        });
        for &(ui, _) in open.iter().take(cap) {
            need[ui][k] -= 1;
            out.push((ui, k));
        }
    }
    out
}

/// Sub-constellation formation computing the pool windows directly.
#[allow(clippy::too_many_arguments)]
pub fn form_sc<T: Scalar>(
    region: &Region<T>,
    pool: &[SatelliteOrbit<T>],
    ue_positions: &BTreeMap<UeId, GroundPoint<T>>,
    reqs: &BTreeMap<UeId, UeRequirement<T>>,
    validity: (T, T),
    mask_deg: T,
    retained: &BTreeSet<SatelliteId>,
    opts: &ScOptions<T>,
) -> Result<ScFormation<T>, ControlError> {
    let horizon = (
        validity.0 - opts.slice_margin_s,
        validity.1 + opts.slice_margin_s,
    );
    let mut windows: BTreeMap<UeId, Vec<CoverageWindow<T>>> = BTreeMap::new();
    for u in &region.ue_ids {
        let gp = ue_positions
            .get(u)
            .ok_or(ControlError::MissingRequirement(*u))?;
        let list = windows.entry(*u).or_default();
        for orbit in pool {
            list.extend(coverage_windows(orbit, gp, *u, horizon, mask_deg)?);
        }
    }
    let pool_sats: Vec<PoolSatellite<T>> = pool
        .iter()
        .map(|o| PoolSatellite {
            id: o.id,
            altitude_km: o.altitude_km(),
        })
        .collect();
    form_sc_from_windows(
        region, &pool_sats, &windows, reqs, validity, horizon, retained, opts,
    )
}

/// Re-forms the sub-constellation for `[t, t + validity)`, preferring the
/// current members on ties.
#[allow(clippy::too_many_arguments)]
pub fn reconfigure_sc<T: Scalar>(
    sc: &SubConstellation<T>,
    t: T,
    region: &Region<T>,
    pool: &[SatelliteOrbit<T>],
    ue_positions: &BTreeMap<UeId, GroundPoint<T>>,
    reqs: &BTreeMap<UeId, UeRequirement<T>>,
    mask_deg: T,
    opts: &ScOptions<T>,
) -> Result<ScFormation<T>, ControlError> {
    if t < sc.valid_from {
        return Err(ControlError::InvalidOption(format!(
            "reconfiguration at {t} precedes the current validity start {}",
            sc.valid_from
        )));
    }
    form_sc(
        region,
        pool,
        ue_positions,
        reqs,
        (t, t + opts.validity_s),
        mask_deg,
        &sc.satellite_ids,
        opts,
    )
}

mod common;

use std::collections::{BTreeMap, BTreeSet};

use caas_core::caas_control::{
    divide_regions, form_sc, form_sc_from_windows, reconfigure_sc, Connectivity, GeoRect,
    PoolSatellite, Preference, Region, ScFormation, ScOptions, UeRequirement,
};
use caas_core::constellation::{
    build_walker_shell, elevation, propagate, CoverageWindow, GroundPoint, SatelliteOrbit,
};
use caas_core::ids::{SatelliteId, UeId};
use caas_core::sim::bundled_scenario;
use proptest::prelude::*;

fn area() -> GeoRect<f64> {
    GeoRect::new(0.0, 7.0, 95.0, 115.0).unwrap()
}

fn ues(points: &[(f64, f64)]) -> Vec<(UeId, GroundPoint<f64>)> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(la, lo))| (UeId(i as u32), GroundPoint::new(la, lo).unwrap()))
        .collect()
}

fn check_partition(a: &GeoRect<f64>, pts: &[(UeId, GroundPoint<f64>)], regions: &[Region<f64>]) {
    let total: f64 = regions.iter().map(|r| r.bounds.area_deg2()).sum();
    assert!((total - a.area_deg2()).abs() < 1e-9 * a.area_deg2());
    for (i, x) in regions.iter().enumerate() {
        for y in &regions[i + 1..] {
            let dlat = x.bounds.lat_max_deg.min(y.bounds.lat_max_deg)
                - x.bounds.lat_min_deg.max(y.bounds.lat_min_deg);
            let dlon = x.bounds.lon_max_deg.min(y.bounds.lon_max_deg)
                - x.bounds.lon_min_deg.max(y.bounds.lon_min_deg);
            assert!(
                dlat <= 0.0 || dlon <= 0.0,
                "regions {} and {} overlap",
                x.id,
                y.id
            );
        }
    }
    let mut seen = BTreeSet::new();
    for r in regions {
        for u in &r.ue_ids {
            assert!(seen.insert(*u), "{u} in two regions");
            let gp = pts.iter().find(|p| p.0 == *u).unwrap().1;
            assert!(r.bounds.contains(&gp));
        }
    }
    assert_eq!(seen.len(), pts.len());
}

#[test]
fn sparse_population_is_one_region() {
    let pts: Vec<_> = (0..20)
        .map(|i| (0.35 * i as f64, 95.0 + i as f64))
        .collect();
    let r = divide_regions(&area(), &ues(&pts), 50, 6);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].bounds, area());
    let empty = divide_regions(&area(), &[], 50, 6);
    assert_eq!(empty.len(), 1);
    assert!(empty[0].ue_ids.is_empty());
}

#[test]
fn dense_quadrant_splits() {
    // 120 UEs in the south-west quadrant, 8 elsewhere
    let mut pts: Vec<_> = (0..120)
        .map(|i| (0.2 + 0.025 * i as f64, 95.5 + 0.07 * i as f64))
        .collect();
    pts.extend((0..8).map(|i| (4.0 + 0.3 * i as f64, 106.0 + i as f64)));
    let u = ues(&pts);
    let r = divide_regions(&area(), &u, 50, 6);
    assert!(r.len() >= 7, "{} regions", r.len());
    assert!(r.iter().all(|x| x.ue_ids.len() <= 50 || x.depth == 6));
    assert!(r.iter().any(|x| x.depth >= 2));
    check_partition(&area(), &u, &r);
}

#[test]
fn depth_cap_holds() {
    let pts = vec![(3.0, 100.0); 80];
    let r = divide_regions(&area(), &ues(&pts), 50, 3);
    let full = r.iter().find(|x| x.ue_ids.len() == 80).unwrap();
    assert_eq!(full.depth, 3);
}

#[test]
fn south_west_edges_are_inclusive() {
    let a = area();
    let mid = a.center();
    let mut pts: Vec<_> = vec![(mid.latitude_deg, mid.longitude_deg); 1];
    pts.extend((0..3).map(|i| (1.0 + i as f64, 97.0)));
    let r = divide_regions(&a, &ues(&pts), 2, 1);
    let owner = r.iter().find(|x| x.ue_ids.contains(&UeId(0))).unwrap();
    assert_eq!(
        (owner.bounds.lat_min_deg, owner.bounds.lon_min_deg),
        (mid.latitude_deg, mid.longitude_deg)
    );
}

fn req(ue: u32, connectivity: Connectivity, preference: Preference) -> UeRequirement<f64> {
    UeRequirement {
        ue_id: UeId(ue),
        demand_bps: 5e6,
        min_rate_bps: 1e6,
        connectivity,
        preference,
    }
}

fn region(n: u32) -> Region<f64> {
    Region {
        id: 0,
        bounds: area(),
        ue_ids: (0..n).map(UeId).collect(),
        controller_id: 0,
        depth: 0,
    }
}

fn synthetic_window(sat: SatelliteId, ue: u32, start: f64, end: f64) -> CoverageWindow<f64> {
    CoverageWindow {
        satellite_id: sat,
        ground_point_id: UeId(ue),
        start,
        end,
        peak_elevation_deg: 50.0,
    }
}

fn pool(n: u16, alt: f64) -> Vec<PoolSatellite<f64>> {
    (0..n)
        .map(|k| PoolSatellite {
            id: SatelliteId::new(0, 0, k),
            altitude_km: alt,
        })
        .collect()
}

fn synthetic(
    n_ue: u32,
    pool: &[PoolSatellite<f64>],
    connectivity: Connectivity,
    opts: &ScOptions<f64>,
) -> ScFormation<f64> {
    let windows: BTreeMap<_, _> = (0..n_ue)
        .map(|u| {
            (
                UeId(u),
                pool.iter()
                    .map(|p| synthetic_window(p.id, u, -100.0, 200.0))
                    .collect(),
            )
        })
        .collect();
    let reqs: BTreeMap<_, _> = (0..n_ue)
        .map(|u| (UeId(u), req(u, connectivity, Preference::LatencySensitive)))
        .collect();
    form_sc_from_windows(
        &region(n_ue),
        pool,
        &windows,
        &reqs,
        (0.0, 60.0),
        (-100.0, 200.0),
        &BTreeSet::new(),
        opts,
    )
    .unwrap()
}

#[test]
fn one_ue_one_satellite() {
    let f = synthetic(
        1,
        &pool(1, 550.0),
        Connectivity::Single,
        &ScOptions::default(),
    );
    assert_eq!(
        f.sc.satellite_ids,
        [SatelliteId::new(0, 0, 0)].into_iter().collect()
    );
    assert!(!f.is_partial());
}

#[test]
fn capacity_forces_three_satellites() {
    let opts = ScOptions::default();
    assert_eq!(opts.capacity_per_satellite, 30);
    let f = synthetic(61, &pool(6, 550.0), Connectivity::Single, &opts);
    assert!(f.sc.satellite_ids.len() >= 3);
    assert!(!f.is_partial());
    for taken in f.assignments.values() {
        let mut per_slice: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, k) in taken {
            *per_slice.entry(*k).or_default() += 1;
        }
        assert!(per_slice.values().all(|&c| c <= 30));
    }
    // two satellites cannot carry 61 UEs
    let short = synthetic(61, &pool(2, 550.0), Connectivity::Single, &opts);
    assert!(short.is_partial());
    assert_eq!(short.uncovered.len(), 6);
}

#[test]
fn dual_connectivity_takes_both() {
    let f = synthetic(
        1,
        &pool(2, 550.0),
        Connectivity::Dual,
        &ScOptions::default(),
    );
    assert_eq!(f.sc.satellite_ids.len(), 2);
    assert!(!f.is_partial());
    let lone = synthetic(
        1,
        &pool(1, 550.0),
        Connectivity::Dual,
        &ScOptions::default(),
    );
    assert!(lone.uncovered.iter().all(|u| u.missing_links == 1));
    assert_eq!(lone.uncovered.len(), 6);
}

#[test]
fn altitude_preference_breaks_ties() {
    let mut p = pool(1, 550.0);
    p.push(PoolSatellite {
        id: SatelliteId::new(1, 0, 0),
        altitude_km: 1200.0,
    });
    let windows: BTreeMap<_, _> = [(
        UeId(0),
        p.iter()
            .map(|s| synthetic_window(s.id, 0, -100.0, 200.0))
            .collect(),
    )]
    .into_iter()
    .collect();
    for (pref, want) in [
        (Preference::LatencySensitive, p[0].id),
        (Preference::CoverageStable, p[1].id),
    ] {
        let reqs: BTreeMap<_, _> = [(UeId(0), req(0, Connectivity::Single, pref))]
            .into_iter()
            .collect();
        let f = form_sc_from_windows(
            &region(1),
            &p,
            &windows,
            &reqs,
            (0.0, 60.0),
            (-100.0, 200.0),
            &BTreeSet::new(),
            &ScOptions::default(),
        )
        .unwrap();
        assert_eq!(
            f.sc.satellite_ids.iter().copied().collect::<Vec<_>>(),
            vec![want]
        );
    }
}

struct Fixture {
    orbits: Vec<SatelliteOrbit<f64>>,
    positions: BTreeMap<UeId, GroundPoint<f64>>,
    reqs: BTreeMap<UeId, UeRequirement<f64>>,
    region: Region<f64>,
}

fn fixture() -> Fixture {
    let sc = bundled_scenario();
    let orbits: Vec<_> = sc
        .shells
        .iter()
        .flat_map(|s| build_walker_shell(s).unwrap())
        .collect();
    let pts = [(1.5, 98.0), (3.5, 105.0), (5.0, 111.0), (2.0, 112.5)];
    let positions: BTreeMap<_, _> = ues(&pts).into_iter().collect();
    let reqs = (0..pts.len() as u32)
        .map(|u| {
            let c = if u == 1 {
                Connectivity::Dual
            } else {
                Connectivity::Single
            };
            let p = if u % 2 == 0 {
                Preference::CoverageStable
            } else {
                Preference::LatencySensitive
            };
            (UeId(u), req(u, c, p))
        })
        .collect();
    Fixture {
        orbits,
        positions,
        reqs,
        region: region(pts.len() as u32),
    }
}

fn covering(f: &Fixture, members: &BTreeSet<SatelliteId>, ue: UeId, t: f64) -> usize {
    f.orbits
        .iter()
        .filter(|o| {
            members.contains(&o.id) && elevation(&propagate(o, t), &f.positions[&ue]) >= 10.0
        })
        .count()
}

#[test]
fn reconfiguration_keeps_coverage_and_stability() {
    let f = fixture();
    let opts = ScOptions::default();
    let first = form_sc(
        &f.region,
        &f.orbits,
        &f.positions,
        &f.reqs,
        (0.0, 60.0),
        10.0,
        &BTreeSet::new(),
        &opts,
    )
    .unwrap();
    assert!(!first.is_partial());

    let same = reconfigure_sc(
        &first.sc,
        0.0,
        &f.region,
        &f.orbits,
        &f.positions,
        &f.reqs,
        10.0,
        &opts,
    )
    .unwrap();
    assert_eq!(same.sc.satellite_ids, first.sc.satellite_ids);

    let next = reconfigure_sc(
        &first.sc,
        60.0,
        &f.region,
        &f.orbits,
        &f.positions,
        &f.reqs,
        10.0,
        &opts,
    )
    .unwrap();
    assert!(!next.is_partial());
    assert_eq!((next.sc.valid_from, next.sc.valid_to), (60.0, 120.0));

    // every UE keeps its links on both sides of the seam
    for (sc, from, to) in [(&first.sc, 0.0, 60.0), (&next.sc, 60.0, 120.0)] {
        let mut t = from;
        while t <= to {
            for (u, r) in &f.reqs {
                assert!(
                    covering(&f, &sc.satellite_ids, *u, t) >= r.connectivity.links(),
                    "{u} at {t}"
                );
            }
            t += 1.0;
        }
    }

    // members that no longer see any UE are dropped
    let later = reconfigure_sc(
        &first.sc,
        900.0,
        &f.region,
        &f.orbits,
        &f.positions,
        &f.reqs,
        10.0,
        &opts,
    )
    .unwrap();
    for sat in &later.sc.satellite_ids {
        let o = f.orbits.iter().find(|o| o.id == *sat).unwrap();
        let sees = (0..=60).any(|k| {
            let s = propagate(o, 900.0 + k as f64);
            f.positions.values().any(|gp| elevation(&s, gp) >= 10.0)
        });
        assert!(sees, "{sat} kept without coverage");
    }
    assert!(reconfigure_sc(
        &later.sc,
        10.0,
        &f.region,
        &f.orbits,
        &f.positions,
        &f.reqs,
        10.0,
        &opts
    )
    .is_err());
}

#[allow(clippy::type_complexity)]
fn arb_windows() -> impl Strategy<Value = (u32, u16, Vec<(u32, u16, f64, f64)>, u32)> {
    (1u32..12, 2u16..8).prop_flat_map(|(n_ue, n_sat)| {
        let w = (0..n_ue, 0..n_sat, -20.0..70.0f64, 5.0..90.0f64)
            .prop_map(|(u, s, a, len)| (u, s, a, a + len));
        (
            Just(n_ue),
            Just(n_sat),
            prop::collection::vec(w, 0..40),
            1u32..5,
        )
    })
}

fn run_random(
    n_ue: u32,
    sats: &[PoolSatellite<f64>],
    raw: &[(u32, u16, f64, f64)],
    cap: u32,
) -> (ScFormation<f64>, BTreeMap<UeId, Vec<CoverageWindow<f64>>>) {
    let mut windows: BTreeMap<UeId, Vec<CoverageWindow<f64>>> = BTreeMap::new();
    for &(u, s, a, b) in raw {
        windows.entry(UeId(u)).or_default().push(synthetic_window(
            SatelliteId::new(0, 0, s),
            u,
            a,
            b,
        ));
    }
    let reqs: BTreeMap<_, _> = (0..n_ue)
        .map(|u| {
            let c = if u % 3 == 0 {
                Connectivity::Dual
            } else {
                Connectivity::Single
            };
            (UeId(u), req(u, c, Preference::LatencySensitive))
        })
        .collect();
    let opts = ScOptions {
        capacity_per_satellite: cap,
        ..ScOptions::default()
    };
    let f = form_sc_from_windows(
        &region(n_ue),
        sats,
        &windows,
        &reqs,
        (0.0, 60.0),
        (-100.0, 200.0),
        &BTreeSet::new(),
        &opts,
    )
    .unwrap();
    (f, windows)
}

proptest! {
    #[test]
    fn regions_partition_the_area(pts in prop::collection::vec((0.0..=7.0f64, 95.0..=115.0f64), 0..300), max in 1usize..60, depth in 0u32..7) {
        let u = ues(&pts);
        let r = divide_regions(&area(), &u, max, depth);
        check_partition(&area(), &u, &r);
        prop_assert!(r.iter().all(|x| x.ue_ids.len() <= max || x.depth == depth));
    }

    #[test]
    fn capacity_and_sufficiency((n_ue, n_sat, raw, cap) in arb_windows()) {
        let (f, windows) = run_random(n_ue, &pool(n_sat, 550.0), &raw, cap);
        for taken in f.assignments.values() {
            let mut per_slice: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, k) in taken {
                *per_slice.entry(*k).or_default() += 1;
            }
            prop_assert!(per_slice.values().all(|&c| c <= cap as usize));
        }
        // covered demand points have enough members spanning the padded slice
        let missing: BTreeSet<(UeId, i64)> = f.uncovered.iter().map(|d| (d.ue_id, d.slice_start as i64)).collect();
        for u in 0..n_ue {
            let links = if u % 3 == 0 { 2 } else { 1 };
            for k in 0..6 {
                let s = 10.0 * k as f64;
                if missing.contains(&(UeId(u), s as i64)) {
                    continue;
                }
                let n = windows.get(&UeId(u)).map_or(0, |ws| {
                    ws.iter()
                        .filter(|w| f.sc.satellite_ids.contains(&w.satellite_id) && w.start <= s - 2.0 && w.end >= (s + 12.0).min(60.0))
                        .map(|w| w.satellite_id)
                        .collect::<BTreeSet<_>>()
                        .len()
                });
                prop_assert!(n >= links, "UE {} slice {}: {} members", u, k, n);
            }
        }
    }

    #[test]
    fn bigger_pool_never_more_uncovered((n_ue, n_sat, raw, cap) in arb_windows(), drop in 1u16..4) {
        let full = pool(n_sat, 550.0);
        let keep = n_sat.saturating_sub(drop).max(1) as usize;
        let (big, _) = run_random(n_ue, &full, &raw, cap);
        let (small, _) = run_random(n_ue, &full[..keep], &raw, cap);
        let missing = |f: &ScFormation<f64>| f.uncovered.iter().map(|d| d.missing_links).sum::<usize>();
        prop_assert!(missing(&big) <= missing(&small), "{} vs {}", missing(&big), missing(&small));
    }
}

//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use caas_core::constellation::{elevation, propagate, CoverageWindow, GroundPoint, SatelliteOrbit};
use caas_core::handover::{HandoverGraph, HgmCandidate};
use caas_core::ids::{SatelliteId, UeId};
use rand::Rng;

/// Covered intervals from fixed-step sampling: each run of covered samples
/// becomes `[first, last]`.
pub fn brute_force_windows(
    orbit: &SatelliteOrbit<f64>,
    gp: &GroundPoint<f64>,
    horizon: (f64, f64),
    mask_deg: f64,
    dt: f64,
) -> Vec<(f64, f64)> {
    let steps = ((horizon.1 - horizon.0) / dt).round() as usize;
    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let t = (horizon.0 + k as f64 * dt).min(horizon.1);
        let up = elevation(&propagate(orbit, t), gp) >= mask_deg;
        open = match (open, up) {
            (None, true) => Some((t, t)),
            (Some((a, _)), true) => Some((a, t)),
            (Some(w), false) => {
                out.push(w);
                None
            }
            (None, false) => None,
        };
    }
    out.extend(open);
    out
}

pub fn window(slot: u16, start: f64, end: f64) -> CoverageWindow<f64> {
    CoverageWindow {
        satellite_id: SatelliteId::new(0, 0, slot),
        ground_point_id: UeId(0),
        start,
        end,
        peak_elevation_deg: 45.0,
    }
}

/// Random windows over `[0, 600]`, the first `at_start` of them open at 0.
pub fn random_candidates(rng: &mut impl Rng, n: usize, at_start: usize) -> Vec<HgmCandidate<f64>> {
    (0..n)
        .map(|i| {
            let start = if i < at_start {
                0.0
            } else {
                rng.gen_range(0.0..520.0f64).round()
            };
            let len = rng.gen_range(40.0..320.0f64).round();
            HgmCandidate {
                window: window(i as u16, start, (start + len).min(600.0)),
                capability_bps: rng.gen_range(1e7..2.4e8),
            }
        })
        .collect()
}

/// Every source-to-sink path as (benefit summed along the path, vertices
/// after the source).
pub fn all_paths(g: &HandoverGraph<f64>) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        g: &HandoverGraph<f64>,
        v: usize,
        acc: f64,
        stack: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if v != 0 && g.is_sink(v) {
            out.push((acc, stack.clone()));
        }
        for e in g.edges.iter().filter(|e| e.from == v) {
            stack.push(e.to);
            walk(g, e.to, acc + e.weight, stack, out);
            stack.pop();
        }
    }
    let mut out = Vec::new();
    walk(g, 0, 0.0, &mut Vec::new(), &mut out);
    out
}

pub fn exhaustive_best(g: &HandoverGraph<f64>) -> Option<f64> {
    all_paths(g).into_iter().map(|p| p.0).reduce(f64::max)
}

/// Best summed benefit over pairs of paths sharing no vertex but the source.
pub fn exhaustive_best_pair(g: &HandoverGraph<f64>) -> Option<f64> {
    let paths = all_paths(g);
    let mut best: Option<f64> = None;
    for (i, a) in paths.iter().enumerate() {
        for b in &paths[i + 1..] {
            if a.1.iter().all(|v| !b.1.contains(v)) {
                let s = a.0 + b.0;
                best = Some(best.map_or(s, |x: f64| x.max(s)));
            }
        }
    }
    best
}

/// Power grid of the allocator: zero, then `points` log-spaced values from
/// `floor * budget` to `budget`.
pub fn power_grid(budget: f64, points: usize, floor: f64) -> Vec<f64> {
    let lo = budget * floor;
    std::iter::once(0.0)
        .chain((0..points).map(|k| lo * (budget / lo).powf(k as f64 / (points - 1) as f64)))
        .collect()
}

/// Shannon rate with a spectral-efficiency cap, bps.
pub fn capped_rate(sinr: f64, bandwidth_hz: f64, cap: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2().min(cap)
}

/// `chains` overlapping window chains that each span `[0, 600]`, plus
/// `extra` random windows, slots numbered in creation order.
pub fn chained_candidates(
    rng: &mut impl Rng,
    chains: usize,
    extra: usize,
) -> Vec<HgmCandidate<f64>> {
    let mut out = Vec::new();
    let push =
        |out: &mut Vec<HgmCandidate<f64>>, start: f64, end: f64, rng: &mut dyn rand::RngCore| {
            let slot = out.len() as u16;
            out.push(HgmCandidate {
                window: window(slot, start, end),
                capability_bps: rng.gen_range(1e7..2.4e8),
            });
        };
    for _ in 0..chains {
        let mut start = 0.0;
        loop {
            let end = (start + rng.gen_range(180.0..380.0f64).round()).min(600.0);
            push(&mut out, start, end, rng);
            if end >= 600.0 {
                break;
            }
            start = end - rng.gen_range(10.0..80.0f64).round();
        }
    }
    for _ in 0..extra {
        let start = rng.gen_range(0.0..520.0f64).round();
        let end = (start + rng.gen_range(40.0..320.0f64).round()).min(600.0);
        push(&mut out, start, end, rng);
    }
    out
}

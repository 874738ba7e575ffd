//! Constellation-as-a-service: regional sub-constellations over both
//! shells, pre-configured handover paths and predictive power allocation.

use std::collections::{BTreeMap, BTreeSet};

use super::radio::{
    budgets, check_budgets, conventional_handover, gain_matrix, record_rates, serving_gain,
    ActiveLink,
};
use super::{
    hgm_params, protocol_timing, AllocationRow, Event, EventLog, HoRecord, Predictor, ScRecord,
    Scenario, SimContext, SimError, UeProfile,
};
use crate::beamforming::{allocate_power_with, PowerAllocation};
use crate::caas_control::{
    divide_regions, form_sc_from_windows, slice_starts, Connectivity, PoolSatellite, UeRequirement,
};
use crate::channel::{csi_sample, rate_from_linear, LinkParams};
use crate::constellation::CoverageWindow;
use crate::geo::Vec3;
use crate::handover::{
    best_dual_paths, best_partial_path, best_path, build_hgm, ho_protocol_step, HandoverError,
    HandoverGraph, HgmCandidate, HgmParams, HoMetricWeights, HoPath, HoProtocolState, MessageKind,
    ProtocolTiming, SignalingMessage,
};
use crate::ids::{SatelliteId, UeId};
use crate::num::{db_to_linear, Scalar};
use crate::prediction::{
    predict_csi_attention, predict_csi_ephemeris, CsiHistory, InterferenceMatrix,
};

/// Restart offset after the reach of a partial path, s.
const RESTART_EPS_S: f64 = 1e-3;

/// A handover path followed over `[from, to]`.
struct Planned<T> {
    from: T,
    to: T,
    path: HoPath<T>,
    windows: Vec<CoverageWindow<T>>,
}

struct Segment<T> {
    ue: usize,
    link_id: u8,
    from: T,
    to: T,
    path: HoPath<T>,
    state: HoProtocolState<T>,
}

fn same_window<T: Scalar>(a: &CoverageWindow<T>, b: &CoverageWindow<T>) -> bool {
    a.satellite_id == b.satellite_id && a.start == b.start && a.end == b.end
}

fn path_windows<T: Scalar>(g: &HandoverGraph<T>, p: &HoPath<T>) -> Vec<CoverageWindow<T>> {
    p.vertices
        .iter()
        .filter_map(|&v| g.window(v).copied())
        .collect()
}

/// Time the UE would switch onto `w`: at the horizon start for a window
/// already open, else one handover lead after it opens.
fn switch_instant<T: Scalar>(w: &CoverageWindow<T>, horizon: (T, T), hp: &HgmParams<T>) -> T {
    if w.start <= horizon.0 {
        horizon.0
    } else {
        (w.start + hp.lead).min(w.end)
    }
}

/// Handover graph of one UE over every visible satellite of every shell,
/// each window rated at its switch instant with the full power budget.
pub fn ue_handover_graph<T: Scalar>(
    ctx: &SimContext<T>,
    sc: &Scenario<T>,
    ue: &UeProfile<T>,
) -> Result<HandoverGraph<T>, SimError> {
    let eph = &ctx.ephemeris;
    let params = &sc.link;
    let hp = hgm_params(sc);
    let horizon = (T::zero(), sc.duration_s);
    let pos = ue.position.ecef();
    let snr_scale = params.power_budget_w() / params.noise_power_w();
    let cands: Vec<HgmCandidate<T>> = eph
        .windows(&ue.position, ue.ue_id)
        .into_iter()
        .map(|w| {
            let idx = eph
                .index_of(w.satellite_id)
                .expect("window of a cached satellite");
            let g = serving_gain(eph, switch_instant(&w, horizon, &hp), idx, pos, params);
            HgmCandidate {
                window: w,
                capability_bps: rate_from_linear(snr_scale * g, params),
            }
        })
        .collect();
    Ok(build_hgm(ue.ue_id, &cands, horizon, &sc.weights(), &hp)?)
}

/// Covers as much of the horizon as possible with consecutive paths,
/// restarting after every coverage gap.
fn plan_single<T: Scalar>(
    ue_id: UeId,
    cands: &[HgmCandidate<T>],
    horizon: (T, T),
    weights: &HoMetricWeights<T>,
    hp: &HgmParams<T>,
) -> Result<Vec<Planned<T>>, SimError> {
    let (mut t0, t1) = horizon;
    let mut out = Vec::new();
    while t0 < t1 {
        let live: Vec<HgmCandidate<T>> = cands
            .iter()
            .filter(|c| c.window.end > t0)
            .copied()
            .collect();
        let g = match build_hgm(ue_id, &live, (t0, t1), weights, hp) {
            Ok(g) => g,
            Err(HandoverError::NoInitialCoverage { .. }) => {
                let next = live
                    .iter()
                    .map(|c| c.window.start)
                    .filter(|&s| s > t0)
                    .fold(T::infinity(), T::min);
                if !next.is_finite() {
                    break;
                }
                t0 = next;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match best_path(&g) {
            Ok(path) => {
                out.push(Planned {
                    from: t0,
                    to: t1,
                    windows: path_windows(&g, &path),
                    path,
                });
                break;
            }
            Err(HandoverError::CoverageGap { .. }) => {
                let path = best_partial_path(&g).expect("initial coverage exists");
                let windows = path_windows(&g, &path);
                let reach = windows.last().map_or(t1, |w| w.end.min(t1));
                out.push(Planned {
                    from: t0,
                    to: reach,
                    path,
                    windows,
                });
                t0 = reach + T::lit(RESTART_EPS_S);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Paths of every link of one UE: a disjoint pair for dual connectivity
/// when one exists over the whole horizon, otherwise greedy per link.
fn plan_ue<T: Scalar>(
    ue_id: UeId,
    links: usize,
    cands: &[HgmCandidate<T>],
    horizon: (T, T),
    weights: &HoMetricWeights<T>,
    hp: &HgmParams<T>,
) -> Result<Vec<Vec<Planned<T>>>, SimError> {
    if links >= 2 {
        if let Ok(g) = build_hgm(ue_id, cands, horizon, weights, hp) {
            if let Ok((a, b)) = best_dual_paths(&g) {
                let planned = |p: HoPath<T>| Planned {
                    from: horizon.0,
                    to: horizon.1,
                    windows: path_windows(&g, &p),
                    path: p,
                };
                return Ok(vec![vec![planned(a)], vec![planned(b)]]);
            }
        }
    }
    let mut out: Vec<Vec<Planned<T>>> = Vec::with_capacity(links);
    let mut remaining = cands.to_vec();
    for _ in 0..links {
        let plan = plan_single(ue_id, &remaining, horizon, weights, hp)?;
        remaining.retain(|c| {
            !plan
                .iter()
                .flat_map(|p| &p.windows)
                .any(|w| same_window(w, &c.window))
        });
        out.push(plan);
    }
    Ok(out)
}

fn merge_intervals<T: Scalar>(iv: &mut Vec<(T, T)>) {
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T)> = Vec::with_capacity(iv.len());
    for &(a, b) in iv.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    *iv = out;
}

fn message_event<T: Scalar>(m: SignalingMessage<T>) -> Event<T> {
    let r = HoRecord {
        t: m.t,
        ue_id: m.ue_id,
        link_id: m.link_id,
        from_sat: m.from_sat,
        to_sat: m.to_sat,
    };
    match m.kind {
        MessageKind::Sequence => Event::Sequence(r),
        MessageKind::Prepare => Event::Prepare(r),
        MessageKind::Ack => Event::Ack(r),
        MessageKind::Execute => Event::Execute(r),
        MessageKind::Complete => Event::Complete(r),
    }
}

fn advance<T: Scalar>(
    seg: &mut Segment<T>,
    t: T,
    timing: &ProtocolTiming<T>,
    log: &mut EventLog<T>,
) -> Result<(), SimError> {
    let (next, msgs) = ho_protocol_step(&seg.state, t.min(seg.to), &seg.path, timing)?;
    seg.state = next;
    log.events.extend(msgs.into_iter().map(message_event));
    Ok(())
}

/// Membership intervals per (region, satellite).
struct ScPlan<T> {
    members: BTreeMap<(usize, SatelliteId), Vec<(T, T)>>,
}

pub(crate) fn run_caas<T: Scalar>(
    ctx: &SimContext<T>,
    sc: &Scenario<T>,
    ues: &[UeProfile<T>],
    log: &mut EventLog<T>,
    mut trace: Option<&mut Vec<AllocationRow>>,
) -> Result<(), SimError> {
    let eph = &ctx.ephemeris;
    let params = &sc.link;
    let timing = protocol_timing(sc);
    let hp = hgm_params(sc);
    let weights = sc.weights();
    let horizon = (T::zero(), sc.duration_s);
    let n = ues.len();
    let ue_ecef: Vec<Vec3<T>> = ues.iter().map(|u| u.position.ecef()).collect();
    let windows: BTreeMap<UeId, Vec<CoverageWindow<T>>> = ues
        .iter()
        .map(|u| (u.ue_id, eph.windows(&u.position, u.ue_id)))
        .collect();
    let positions: Vec<_> = ues.iter().map(|u| (u.ue_id, u.position)).collect();
    let reqs: BTreeMap<UeId, UeRequirement<T>> =
        ues.iter().map(|u| (u.ue_id, u.requirement)).collect();
    let pool: Vec<PoolSatellite<T>> = eph
        .orbits
        .iter()
        .map(|o| PoolSatellite {
            id: o.id,
            altitude_km: o.altitude_km(),
        })
        .collect();

    let regions = divide_regions(
        &sc.area,
        &positions,
        sc.control.max_ues_per_region,
        sc.control.max_depth,
    );
    let mut region_of = vec![0usize; n];
    for (ri, r) in regions.iter().enumerate() {
        for u in &r.ue_ids {
            region_of[u.0 as usize] = ri;
        }
    }

    let plan = form_all_scs(sc, &regions, &pool, &windows, &reqs, horizon, log)?;

    // handover plans, UE by UE: links already planned on a satellite
    // shrink its power share for the UEs planned after them
    let noise = params.noise_power_w();
    let budget = params.power_budget_w();
    let mut usage: BTreeMap<SatelliteId, Vec<(T, T)>> = BTreeMap::new();
    let mut segments: Vec<Segment<T>> = Vec::new();
    for (i, u) in ues.iter().enumerate() {
        let ri = region_of[i];
        let mut cands = Vec::new();
        for w in &windows[&u.ue_id] {
            let Some(ivs) = plan.members.get(&(ri, w.satellite_id)) else {
                continue;
            };
            let idx = eph
                .index_of(w.satellite_id)
                .expect("window of a cached satellite");
            // an admitted satellite keeps the UE until its pass ends
            if let Some(&(a, _)) = ivs.iter().find(|(a, b)| *b > w.start && *a < w.end) {
                let window = CoverageWindow {
                    start: w.start.max(a),
                    ..*w
                };
                let entry = switch_instant(&window, horizon, &hp);
                let load = usage.get(&w.satellite_id).map_or(0, |v| {
                    v.iter().filter(|(x, y)| *x <= entry && entry < *y).count()
                });
                let share = budget / T::from_usize_lossy(load + 1);
                let g = serving_gain(eph, entry, idx, ue_ecef[i], params);
                cands.push(HgmCandidate {
                    window,
                    capability_bps: rate_from_linear(share * g / noise, params),
                });
            }
        }
        let link_count = match u.requirement.connectivity {
            Connectivity::Single => 1,
            Connectivity::Dual => 2,
        };
        for (link, planned) in plan_ue(u.ue_id, link_count, &cands, horizon, &weights, &hp)?
            .into_iter()
            .enumerate()
        {
            let link_id = link as u8;
            for (k, p) in planned.iter().enumerate() {
                // back-to-back paths: the change of satellite is a reactive handover
                if k > 0 {
                    let prev = &planned[k - 1];
                    let last = prev.path.sequence.last().map(|s| s.0);
                    let first = p.path.sequence.first().map(|s| s.0);
                    if let (Some(a), Some(b)) = (last, first) {
                        if a != b && p.from - prev.to <= sc.time_step_s {
                            conventional_handover(log, p.from, i, link_id, a, b, &timing);
                        }
                    }
                }
            }
            for p in &planned {
                let seq = &p.path.sequence;
                for (h, &(sat, at)) in seq.iter().enumerate() {
                    let until = seq.get(h + 1).map_or(p.to, |x| x.1);
                    usage.entry(sat).or_default().push((at.max(p.from), until));
                }
            }
            segments.extend(planned.into_iter().map(|p| Segment {
                ue: i,
                link_id,
                from: p.from,
                to: p.to,
                state: HoProtocolState::new(u.ue_id, link_id),
                path: p.path,
            }));
        }
    }
    segments.sort_by(|a, b| {
        (a.ue, a.link_id).cmp(&(b.ue, b.link_id)).then(
            a.from
                .partial_cmp(&b.from)
                .unwrap_or(std::cmp::Ordering::Equal),
        )
    });

    let mut histories: BTreeMap<(SatelliteId, UeId), CsiHistory<T>> = BTreeMap::new();
    for k in 0..sc.step_count() {
        let t = sc.step_time(k);
        let mut links = Vec::new();
        let mut s = 0;
        while s < segments.len() {
            // segments of one link are disjoint and sorted: the active one is
            // the last that has started
            let key = (segments[s].ue, segments[s].link_id);
            let mut active: Option<usize> = None;
            while s < segments.len() && (segments[s].ue, segments[s].link_id) == key {
                if segments[s].from <= t {
                    active = Some(s);
                }
                s += 1;
            }
            let Some(a) = active else { continue };
            advance(&mut segments[a], t, &timing, log)?;
            let seg = &segments[a];
            if t > seg.to {
                continue;
            }
            if let Some(sat) = seg.path.serving_at(t) {
                let sat_index = eph.index_of(sat).expect("planned satellite is cached");
                links.push(ActiveLink {
                    ue: seg.ue,
                    link_id: seg.link_id,
                    sat,
                    sat_index,
                });
            }
        }

        let truth = gain_matrix(eph, t, &links, &ue_ecef, params);
        let full = budgets(&links, params);
        let alloc = allocate(sc, ctx, ues, &region_of, &links, &truth, &histories, t)?;
        check_budgets(t, &alloc, &full)?;
        record_rates(
            log,
            trace.as_deref_mut(),
            t,
            n,
            &links,
            &alloc,
            &truth,
            params,
        )?;

        // measured CSI of the serving links feeds the next prediction
        let mut active_keys = BTreeSet::new();
        for l in &links {
            let u = &ues[l.ue];
            let key = (l.sat, u.ue_id);
            active_keys.insert(key);
            let sample = csi_sample(
                &eph.state(l.sat_index, t),
                &u.position,
                u.ue_id,
                &u.position,
                params,
                t,
            )
            .map_err(crate::prediction::PredictionError::from)?;
            histories
                .entry(key)
                .or_insert_with(|| CsiHistory::new(key, sc.prediction.history_capacity))
                .push(sample)?;
        }
        histories.retain(|k, _| active_keys.contains(k));
    }
    for seg in &mut segments {
        let to = seg.to;
        advance(seg, to, &timing, log)?;
    }
    Ok(())
}

/// Forms the sub-constellation of every region for each validity period,
/// logging one `sc` event per formation.
fn form_all_scs<T: Scalar>(
    sc: &Scenario<T>,
    regions: &[crate::caas_control::Region<T>],
    pool: &[PoolSatellite<T>],
    windows: &BTreeMap<UeId, Vec<CoverageWindow<T>>>,
    reqs: &BTreeMap<UeId, UeRequirement<T>>,
    horizon: (T, T),
    log: &mut EventLog<T>,
) -> Result<ScPlan<T>, SimError> {
    let opts = &sc.control.sc;
    let mut plan = ScPlan {
        members: BTreeMap::new(),
    };
    let mut retained = vec![BTreeSet::new(); regions.len()];
    for v0 in slice_starts(horizon.0, horizon.1, opts.validity_s) {
        let v1 = (v0 + opts.validity_s).min(horizon.1);
        for (ri, region) in regions.iter().enumerate() {
            if region.ue_ids.is_empty() {
                continue;
            }
            let f = form_sc_from_windows(
                region,
                pool,
                windows,
                reqs,
                (v0, v1),
                horizon,
                &retained[ri],
                opts,
            )?;
            log.events.push(Event::Sc(ScRecord {
                t: v0,
                region_id: region.id,
                satellite_ids: f.sc.satellite_ids.iter().copied().collect(),
                uncovered_demand_points: f.uncovered.len(),
            }));
            for sat in &f.sc.satellite_ids {
                plan.members
                    .entry((ri, *sat))
                    .or_default()
                    .push((v0 - opts.slice_margin_s, v1 + opts.slice_margin_s));
            }
            retained[ri] = f.sc.satellite_ids;
        }
    }
    for iv in plan.members.values_mut() {
        merge_intervals(iv);
    }
    Ok(plan)
}

/// Per-region best-response allocation on predicted CSI.
///
/// Serving gains come from the CSI predictor; cross gains are geometric.
/// Beams of other regions enter as background at an equal split, and a
/// satellite shared between regions lends each its share of beams.
#[allow(clippy::too_many_arguments)]
fn allocate<T: Scalar>(
    sc: &Scenario<T>,
    ctx: &SimContext<T>,
    ues: &[UeProfile<T>],
    region_of: &[usize],
    links: &[ActiveLink],
    truth: &InterferenceMatrix<T>,
    histories: &BTreeMap<(SatelliteId, UeId), CsiHistory<T>>,
    t: T,
) -> Result<PowerAllocation<T>, SimError> {
    let params: &LinkParams<T> = &sc.link;
    let budget = params.power_budget_w();
    let mut beams: BTreeMap<SatelliteId, usize> = BTreeMap::new();
    for l in links {
        *beams.entry(l.sat).or_default() += 1;
    }
    let equal = |c: usize| budget / T::from_usize_lossy(beams[&links[c].sat]);
    let mut power = vec![T::zero(); links.len()];
    let mut by_region: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (g, l) in links.iter().enumerate() {
        by_region.entry(region_of[l.ue]).or_default().push(g);
    }
    for rows in by_region.values() {
        let pred: Vec<T> = rows
            .iter()
            .map(|&g| predicted_gain(sc, ctx, ues, &links[g], histories, t))
            .collect();
        let pairs: Vec<_> = rows.iter().map(|&g| links[g].pair()).collect();
        let mut m = InterferenceMatrix::from_fn(&pairs, |r, c| {
            if r == c {
                pred[r]
            } else {
                truth.get(rows[r], rows[c])
            }
        });
        let inside: BTreeSet<usize> = rows.iter().copied().collect();
        for (r, &g) in rows.iter().enumerate() {
            m.background_w[r] = (0..links.len())
                .filter(|c| !inside.contains(c))
                .map(|c| truth.get(g, c) * equal(c))
                .sum();
        }
        let mut local: BTreeMap<SatelliteId, usize> = BTreeMap::new();
        for &g in rows {
            *local.entry(links[g].sat).or_default() += 1;
        }
        let region_budgets: BTreeMap<SatelliteId, T> = local
            .iter()
            .map(|(s, &k)| {
                (
                    *s,
                    budget * T::from_usize_lossy(k) / T::from_usize_lossy(beams[s]),
                )
            })
            .collect();
        let outcome = allocate_power_with(&m, &region_budgets, params, &sc.allocation)?;
        for (r, &p) in outcome.allocation.power_w.iter().enumerate() {
            power[rows[r]] = p;
        }
    }
    Ok(PowerAllocation {
        tx_ids: truth.tx_ids.clone(),
        power_w: power,
    })
}

fn predicted_gain<T: Scalar>(
    sc: &Scenario<T>,
    ctx: &SimContext<T>,
    ues: &[UeProfile<T>],
    l: &ActiveLink,
    histories: &BTreeMap<(SatelliteId, UeId), CsiHistory<T>>,
    t: T,
) -> T {
    let u = &ues[l.ue];
    let attention = match sc.prediction.predictor {
        Predictor::Attention => histories
            .get(&(l.sat, u.ue_id))
            .and_then(|h| predict_csi_attention(h, t, sc.prediction.tau_s).ok()),
        Predictor::Ephemeris => None,
    };
    let sample = attention.or_else(|| {
        let orbit = &ctx.ephemeris.orbits[l.sat_index];
        predict_csi_ephemeris(
            orbit,
            &u.position,
            u.ue_id,
            &u.position,
            &sc.link,
            t,
            sc.mask_deg,
        )
        .ok()
    });
    sample.map_or(T::zero(), |s| db_to_linear(s.channel_gain_db))
}

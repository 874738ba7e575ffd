//! Baseline: each UE stays in its default shell and hands over on signal
//! strength with hysteresis and time-to-trigger.

use super::radio::{
    budgets, check_budgets, conventional_handover, gain_matrix, record_rates, serving_gain,
    ActiveLink,
};
use super::{protocol_timing, AllocationRow, EventLog, Scenario, SimContext, SimError, UeProfile};
use crate::beamforming::PowerAllocation;
use crate::constellation::CoverageWindow;
use crate::geo::Vec3;
use crate::ids::SatelliteId;
use crate::num::{db_to_linear, Scalar};

#[derive(Debug, Clone, Default)]
struct UeState {
    serving: Option<SatelliteId>,
    /// Candidate beating the serving satellite and for how many steps.
    pending: Option<(SatelliteId, u32)>,
}

pub(crate) fn run_standalone<T: Scalar>(
    ctx: &SimContext<T>,
    sc: &Scenario<T>,
    ues: &[UeProfile<T>],
    log: &mut EventLog<T>,
    mut trace: Option<&mut Vec<AllocationRow>>,
) -> Result<(), SimError> {
    let eph = &ctx.ephemeris;
    let params = &sc.link;
    let timing = protocol_timing(sc);
    let hysteresis = db_to_linear(sc.standalone.hysteresis_db);
    let ttt = sc.standalone.time_to_trigger_steps.max(1);
    let ue_ecef: Vec<Vec3<T>> = ues.iter().map(|u| u.position.ecef()).collect();
    let windows: Vec<Vec<CoverageWindow<T>>> = ues
        .iter()
        .map(|u| {
            eph.windows(&u.position, u.ue_id)
                .into_iter()
                .filter(|w| w.satellite_id.shell == u.default_shell)
                .collect()
        })
        .collect();
    let mut state: Vec<UeState> = ues
        .iter()
        .zip(&windows)
        .map(|(u, ws)| UeState {
            serving: u.default_satellite.filter(|s| {
                ws.iter()
                    .any(|w| w.satellite_id == *s && w.contains(T::zero()))
            }),
            pending: None,
        })
        .collect();

    let mut visible: Vec<(SatelliteId, usize, T)> = Vec::new();
    for k in 0..sc.step_count() {
        let t = sc.step_time(k);
        for (i, st) in state.iter_mut().enumerate() {
            visible.clear();
            for w in windows[i].iter().filter(|w| w.contains(t)) {
                let idx = eph
                    .index_of(w.satellite_id)
                    .expect("window of a cached satellite");
                visible.push((
                    w.satellite_id,
                    idx,
                    serving_gain(eph, t, idx, ue_ecef[i], params),
                ));
            }
            visible.sort_by_key(|v| v.0);
            visible.dedup_by_key(|v| v.0);
            let best = visible
                .iter()
                .copied()
                .reduce(|a, b| if b.2 > a.2 { b } else { a })
                .map(|(id, _, g)| (id, g));
            match st.serving {
                None => {
                    st.serving = best.map(|b| b.0);
                    st.pending = None;
                }
                Some(s) => match visible.iter().find(|v| v.0 == s) {
                    None => {
                        if let Some((b, _)) = best {
                            conventional_handover(log, t, i, 0, s, b, &timing);
                        }
                        st.serving = best.map(|b| b.0);
                        st.pending = None;
                    }
                    Some(&(_, _, g_serving)) => match best {
                        Some((b, g)) if b != s && g > g_serving * hysteresis => {
                            let count = match st.pending {
                                Some((p, c)) if p == b => c + 1,
                                _ => 1,
                            };
                            if count >= ttt {
                                conventional_handover(log, t, i, 0, s, b, &timing);
                                st.serving = Some(b);
                                st.pending = None;
                            } else {
                                st.pending = Some((b, count));
                            }
                        }
                        _ => st.pending = None,
                    },
                },
            }
        }

        let links: Vec<ActiveLink> = state
            .iter()
            .enumerate()
            .filter_map(|(ue, st)| {
                st.serving.map(|sat| ActiveLink {
                    ue,
                    link_id: 0,
                    sat,
                    sat_index: eph.index_of(sat).unwrap(),
                })
            })
            .collect();
        let truth = gain_matrix(eph, t, &links, &ue_ecef, params);
        let budget = budgets(&links, params);
        let alloc = PowerAllocation::equal_split(&truth.tx_ids, &budget)?;
        check_budgets(t, &alloc, &budget)?;
        record_rates(
            log,
            trace.as_deref_mut(),
            t,
            ues.len(),
            &links,
            &alloc,
            &truth,
            params,
        )?;
    }
    Ok(())
}

use std::collections::BTreeMap;

use super::{AllocationRow, Ephemeris, Event, EventLog, HoRecord, RateRecord, SimError};
use crate::beamforming::{evaluate_link_rates, evaluate_link_sinr, PowerAllocation};
use crate::channel::LinkParams;
use crate::geo::Vec3;
use crate::handover::ProtocolTiming;
use crate::ids::{SatelliteId, UeId};
use crate::num::{linear_to_db, Scalar};
use crate::prediction::{linear_gain, InterferenceMatrix};

/// One serving beam during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ActiveLink {
    pub ue: usize,
    pub link_id: u8,
    pub sat: SatelliteId,
    /// Index into the ephemeris.
    pub sat_index: usize,
}

impl ActiveLink {
    pub fn pair(&self) -> (UeId, SatelliteId) {
        (UeId(self.ue as u32), self.sat)
    }
}

/// True gains at `t` from every serving beam to every serving link, each
/// beam aimed at its own UE.
pub(crate) fn gain_matrix<T: Scalar>(
    eph: &Ephemeris<T>,
    t: T,
    links: &[ActiveLink],
    ue_ecef: &[Vec3<T>],
    params: &LinkParams<T>,
) -> InterferenceMatrix<T> {
    let pairs: Vec<_> = links.iter().map(ActiveLink::pair).collect();
    let sat_pos: Vec<Vec3<T>> = links.iter().map(|l| eph.position(l.sat_index, t)).collect();
    InterferenceMatrix::from_fn(&pairs, |r, c| {
        linear_gain(
            sat_pos[c],
            ue_ecef[links[c].ue],
            ue_ecef[links[r].ue],
            params,
        )
    })
}

/// Gain of the beam of `sat_index` aimed at `ue`, observed at `ue`.
pub(crate) fn serving_gain<T: Scalar>(
    eph: &Ephemeris<T>,
    t: T,
    sat_index: usize,
    ue: Vec3<T>,
    params: &LinkParams<T>,
) -> T {
    linear_gain(eph.position(sat_index, t), ue, ue, params)
}

/// Full budget of every satellite carrying a link.
pub(crate) fn budgets<T: Scalar>(
    links: &[ActiveLink],
    params: &LinkParams<T>,
) -> BTreeMap<SatelliteId, T> {
    links
        .iter()
        .map(|l| (l.sat, params.power_budget_w()))
        .collect()
}

/// Online conservation check of an allocation.
pub(crate) fn check_budgets<T: Scalar>(
    t: T,
    alloc: &PowerAllocation<T>,
    budgets: &BTreeMap<SatelliteId, T>,
) -> Result<(), SimError> {
    for (sat, used) in alloc.per_satellite() {
        let budget = budgets[&sat];
        if used > budget * (T::one() + T::lit(1e-9)) {
            return Err(SimError::Conservation {
                t: t.as_f64(),
                satellite: sat,
                used_w: used.as_f64(),
                budget_w: budget.as_f64(),
            });
        }
    }
    Ok(())
}

/// Evaluates true rates and records one rate sample per UE, and one row
/// per beam into `trace` when given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn record_rates<T: Scalar>(
    log: &mut EventLog<T>,
    trace: Option<&mut Vec<AllocationRow>>,
    t: T,
    ue_count: usize,
    links: &[ActiveLink],
    alloc: &PowerAllocation<T>,
    truth: &InterferenceMatrix<T>,
    params: &LinkParams<T>,
) -> Result<(), SimError> {
    let link_rates = if links.is_empty() {
        Vec::new()
    } else {
        evaluate_link_rates(alloc, truth, params)?
    };
    if let (Some(rows), false) = (trace, links.is_empty()) {
        let sinr = evaluate_link_sinr(alloc, truth, params)?;
        for (k, l) in links.iter().enumerate() {
            rows.push(AllocationRow {
                time_s: t.as_f64(),
                sat_id: l.sat,
                ue_id: UeId(l.ue as u32),
                power_w: alloc.power_w[k].as_f64(),
                sinr_db: linear_to_db(sinr[k]).as_f64(),
                rate_bps: link_rates[k].as_f64(),
            });
        }
    }
    let mut rate = vec![T::zero(); ue_count];
    let mut sats: Vec<Vec<SatelliteId>> = vec![Vec::new(); ue_count];
    for (l, r) in links.iter().zip(link_rates) {
        rate[l.ue] = rate[l.ue] + r;
        sats[l.ue].push(l.sat);
    }
    for (ue, (rate_bps, links)) in rate.into_iter().zip(sats).enumerate() {
        log.events.push(Event::Rate(RateRecord {
            t,
            ue_id: UeId(ue as u32),
            rate_bps,
            links,
        }));
    }
    Ok(())
}

/// Reactive handover decided at `t`: prepare, ack one RTT later, execute
/// after the guard, complete after the execution time.
pub(crate) fn conventional_handover<T: Scalar>(
    log: &mut EventLog<T>,
    t: T,
    ue: usize,
    link_id: u8,
    from: SatelliteId,
    to: SatelliteId,
    timing: &ProtocolTiming<T>,
) {
    let rec = |at: T| HoRecord {
        t: at,
        ue_id: UeId(ue as u32),
        link_id,
        from_sat: Some(from),
        to_sat: Some(to),
    };
    let exec = t + timing.rtt + timing.guard;
    log.events.push(Event::Prepare(rec(t)));
    log.events.push(Event::Ack(rec(t + timing.rtt)));
    log.events.push(Event::Execute(rec(exec)));
    log.events
        .push(Event::Complete(rec(exec + timing.execution_time)));
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Scenario, SimError};
use crate::handover::{detect_ping_pong, ping_pong_indices};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoRecord<T> {
    pub t: T,
    pub ue_id: UeId,
    pub link_id: u8,
    pub from_sat: Option<SatelliteId>,
    pub to_sat: Option<SatelliteId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScRecord<T> {
    pub t: T,
    pub region_id: usize,
    pub satellite_ids: Vec<SatelliteId>,
    pub uncovered_demand_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord<T> {
    pub t: T,
    pub ue_id: UeId,
    pub rate_bps: T,
    /// Serving satellites, empty during outage.
    pub links: Vec<SatelliteId>,
}

/// One log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event<T> {
    Sequence(HoRecord<T>),
    Prepare(HoRecord<T>),
    Ack(HoRecord<T>),
    Execute(HoRecord<T>),
    Complete(HoRecord<T>),
    Pingpong(HoRecord<T>),
    Sc(ScRecord<T>),
    Rate(RateRecord<T>),
}

impl<T: Scalar> Event<T> {
    pub fn t(&self) -> T {
        match self {
            Event::Sequence(r)
            | Event::Prepare(r)
            | Event::Ack(r)
            | Event::Execute(r)
            | Event::Complete(r) => r.t,
            Event::Pingpong(r) => r.t,
            Event::Sc(r) => r.t,
            Event::Rate(r) => r.t,
        }
    }

    /// Whether the event is a handover signalling message.
    pub fn is_signaling(&self) -> bool {
        matches!(
            self,
            Event::Sequence(_)
                | Event::Prepare(_)
                | Event::Ack(_)
                | Event::Execute(_)
                | Event::Complete(_)
        )
    }
}

/// Time-ordered simulation record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog<T> {
    pub events: Vec<Event<T>>,
}

impl<T: Scalar> EventLog<T> {
    pub fn new() -> Self {
        Self { events: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Stable sort by time; events sharing a time keep insertion order.
    pub fn sort(&mut self) {
        self.events.sort_by(|a, b| {
            a.t()
                .partial_cmp(&b.t())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn check_order(&self) -> Result<(), SimError> {
        for (i, w) in self.events.windows(2).enumerate() {
            if !(w[1].t() >= w[0].t()) {
                return Err(SimError::Ordering {
                    index: i + 1,
                    t: w[1].t().as_f64(),
                    previous: w[0].t().as_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn executed_handovers(&self) -> impl Iterator<Item = &HoRecord<T>> {
        self.events.iter().filter_map(|e| match e {
            Event::Execute(r) => Some(r),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> std::io::Result<Vec<u8>>
    where
        T: Serialize,
    {
        crate::io::to_jsonl(&self.events)
    }
}

/// Appends a `pingpong` event for every executed handover of a UE link
/// that returns to a satellite it left within `window`. The log must be
/// time-ordered; it is re-sorted afterwards.
pub fn mark_ping_pongs<T: Scalar>(log: &mut EventLog<T>, window: T) {
    let mut per_link: BTreeMap<(UeId, u8), Vec<&HoRecord<T>>> = BTreeMap::new();
    for r in log.executed_handovers() {
        if r.from_sat.is_some() && r.to_sat.is_some() {
            per_link.entry((r.ue_id, r.link_id)).or_default().push(r);
        }
    }
    let mut marks = Vec::new();
    for recs in per_link.values() {
        let l: Vec<_> = recs
            .iter()
            .map(|r| (r.t, r.from_sat.unwrap(), r.to_sat.unwrap()))
            .collect();
        marks.extend(
            ping_pong_indices(&l, window)
                .into_iter()
                .map(|k| Event::Pingpong(recs[k].clone())),
        );
    }
    log.events.extend(marks);
    log.sort();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeMetrics<T> {
    pub ue_id: UeId,
    pub atr_bps: T,
    pub ho_count: usize,
    pub pingpong_count: usize,
    pub signaling_messages: usize,
    pub outage_fraction: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub ue_count: usize,
    pub samples: usize,
    /// Mean over UEs of the time-averaged rate, bps.
    pub atr_bps: T,
    pub ho_count: usize,
    pub ho_per_ue: T,
    pub pingpong_count: usize,
    pub signaling_messages: usize,
    pub outage_fraction: T,
    pub per_ue: Vec<UeMetrics<T>>,
}

/// Aggregates a time-ordered log into per-UE and overall metrics.
///
/// UEs are `0..ue_count`; every step of the scenario is one rate sample,
/// and a step without a rate record for a UE counts as outage.
pub fn compute_metrics<T: Scalar>(
    log: &EventLog<T>,
    scenario: &Scenario<T>,
) -> Result<MetricsReport<T>, SimError> {
    log.check_order()?;
    let n = scenario.ue_count;
    let samples = scenario.step_count();
    let mut rate_sum = vec![T::zero(); n];
    let mut served = vec![0usize; n];
    let mut signaling = vec![0usize; n];
    let mut ho: BTreeMap<(usize, u8), Vec<(T, SatelliteId, SatelliteId)>> = BTreeMap::new();
    let mut ho_count = vec![0usize; n];
    let idx = |u: UeId| -> Result<usize, SimError> {
        let i = u.0 as usize;
        if i < n {
            Ok(i)
        } else {
            Err(SimError::Invalid(format!(
                "log mentions UE {u} outside 0..{n}"
            )))
        }
    };
    for e in &log.events {
        match e {
            Event::Rate(r) => {
                let i = idx(r.ue_id)?;
                rate_sum[i] = rate_sum[i] + r.rate_bps;
                if !r.links.is_empty() {
                    served[i] += 1;
                }
            }
            Event::Execute(r) => {
                let i = idx(r.ue_id)?;
                ho_count[i] += 1;
                signaling[i] += 1;
                if let (Some(f), Some(to)) = (r.from_sat, r.to_sat) {
                    ho.entry((i, r.link_id)).or_default().push((r.t, f, to));
                }
            }
            Event::Sequence(r) | Event::Prepare(r) | Event::Ack(r) | Event::Complete(r) => {
                signaling[idx(r.ue_id)?] += 1;
            }
            Event::Pingpong(_) | Event::Sc(_) => {}
        }
    }
    let window = scenario.handover.ping_pong_window_s;
    let denom = T::from_usize_lossy(samples.max(1));
    let mut pingpong = vec![0usize; n];
    for (&(i, _), l) in &ho {
        pingpong[i] += detect_ping_pong(l, window);
    }
    let per_ue: Vec<UeMetrics<T>> = (0..n)
        .map(|i| UeMetrics {
            ue_id: UeId(i as u32),
            atr_bps: if samples == 0 {
                T::zero()
            } else {
                rate_sum[i] / denom
            },
            ho_count: ho_count[i],
            pingpong_count: pingpong[i],
            signaling_messages: signaling[i],
            outage_fraction: if samples == 0 {
                T::zero()
            } else {
                T::one() - T::from_usize_lossy(served[i].min(samples)) / denom
            },
        })
        .collect();
    let mean = |f: &dyn Fn(&UeMetrics<T>) -> T| {
        if n == 0 {
            T::zero()
        } else {
            per_ue.iter().map(f).sum::<T>() / T::from_usize_lossy(n)
        }
    };
    let total_ho: usize = ho_count.iter().sum();
    Ok(MetricsReport {
        ue_count: n,
        samples,
        atr_bps: mean(&|u| u.atr_bps),
        ho_count: total_ho,
        ho_per_ue: if n == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(total_ho) / T::from_usize_lossy(n)
        },
        pingpong_count: per_ue.iter().map(|u| u.pingpong_count).sum(),
        signaling_messages: signaling.iter().sum(),
        outage_fraction: mean(&|u| u.outage_fraction),
        per_ue,
    })
}

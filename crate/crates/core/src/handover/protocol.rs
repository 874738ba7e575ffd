use serde::{Deserialize, Serialize};

use super::{HandoverError, HoPath, DEFAULT_EXECUTION_TIME_S, DEFAULT_GUARD_S};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoPhase {
    Connected,
    Preparing,
    Ready,
    Executing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    /// Distribution of the whole pre-configured sequence, once per path.
    Sequence,
    Prepare,
    Ack,
    Execute,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalingMessage<T> {
    pub t: T,
    pub ue_id: UeId,
    pub link_id: u8,
    pub kind: MessageKind,
    pub from_sat: Option<SatelliteId>,
    pub to_sat: Option<SatelliteId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTiming<T> {
    pub rtt: T,
    pub guard: T,
    pub execution_time: T,
}

impl<T: Scalar> ProtocolTiming<T> {
    pub fn with_rtt(rtt: T) -> Self {
        Self {
            rtt,
            guard: T::lit(DEFAULT_GUARD_S),
            execution_time: T::lit(DEFAULT_EXECUTION_TIME_S),
        }
    }

    /// Preparation lead before a planned switch.
    pub fn lead(&self) -> T {
        self.rtt + self.guard
    }
}

/// Conditional-handover state of one UE link following a [`HoPath`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoProtocolState<T> {
    pub ue_id: UeId,
    pub link_id: u8,
    pub phase: HoPhase,
    pub serving: Option<SatelliteId>,
    pub target: Option<SatelliteId>,
    pub planned_exec_time: T,
    /// Index into the path sequence of the current serving entry.
    pub hop: usize,
    phase_since: T,
    last_t: Option<T>,
    sequence_sent: bool,
}

impl<T: Scalar> HoProtocolState<T> {
    pub fn new(ue_id: UeId, link_id: u8) -> Self {
        Self {
            ue_id,
            link_id,
            phase: HoPhase::Connected,
            serving: None,
            target: None,
            planned_exec_time: T::nan(),
            hop: 0,
            phase_since: T::neg_infinity(),
            last_t: None,
            sequence_sent: false,
        }
    }
}

/// Advances the state machine to time `t`, returning every message whose
/// trigger instant is at or before `t`, in time order.
///
/// For each hop: prepare at `switch - rtt - guard`, ack one `rtt` later,
/// execute at `switch`, complete after the execution time.
pub fn ho_protocol_step<T: Scalar>(
    state: &HoProtocolState<T>,
    t: T,
    path: &HoPath<T>,
    timing: &ProtocolTiming<T>,
) -> Result<(HoProtocolState<T>, Vec<SignalingMessage<T>>), HandoverError> {
    if let Some(last) = state.last_t {
        if t < last {
            return Err(HandoverError::TimeRegression {
                last: last.as_f64(),
                t: t.as_f64(),
            });
        }
    }
    let mut s = state.clone();
    s.last_t = Some(t);
    let mut out = Vec::new();
    let mut emit = |s: &HoProtocolState<T>, at: T, kind| {
        out.push(SignalingMessage {
            t: at,
            ue_id: s.ue_id,
            link_id: s.link_id,
            kind,
            from_sat: s.serving,
            to_sat: s.target,
        })
    };
    let Some(&(first, start)) = path.sequence.first() else {
        return Ok((s, out));
    };
    if !s.sequence_sent {
        s.sequence_sent = true;
        s.serving = Some(first);
        s.phase_since = start.min(t);
        if path.handovers() > 0 {
            emit(&s, start.min(t), MessageKind::Sequence);
        }
    }
    loop {
        match s.phase {
            HoPhase::Connected => {
                let Some(&(target, switch)) = path.sequence.get(s.hop + 1) else {
                    break;
                };
                let at = (switch - timing.lead()).max(s.phase_since);
                if at > t {
                    break;
                }
                s.phase = HoPhase::Preparing;
                s.target = Some(target);
                s.planned_exec_time = switch;
                s.phase_since = at;
                emit(&s, at, MessageKind::Prepare);
            }
            HoPhase::Preparing => {
                let at = s.phase_since + timing.rtt;
                if at > t {
                    break;
                }
                s.phase = HoPhase::Ready;
                s.phase_since = at;
                emit(&s, at, MessageKind::Ack);
            }
            HoPhase::Ready => {
                let at = s.planned_exec_time.max(s.phase_since);
                if at > t {
                    break;
                }
                s.phase = HoPhase::Executing;
                s.phase_since = at;
                emit(&s, at, MessageKind::Execute);
            }
            HoPhase::Executing => {
                let at = s.phase_since + timing.execution_time;
                if at > t {
                    break;
                }
                emit(&s, at, MessageKind::Complete);
                s.phase = HoPhase::Connected;
                s.serving = s.target.take();
                s.hop += 1;
                s.phase_since = at;
            }
        }
    }
    Ok((s, out))
}

/// Indices of handovers that return to a satellite left less than
/// `window` seconds earlier. `log` holds `(t, from, to)` in time order.
pub fn ping_pong_indices<T: Scalar>(
    log: &[(T, SatelliteId, SatelliteId)],
    window: T,
) -> Vec<usize> {
    (0..log.len())
        .filter(|&k| {
            let (t, _, to) = log[k];
            log[..k]
                .iter()
                .rev()
                .take_while(|e| e.0 >= t - window)
                .any(|e| e.1 == to)
        })
        .collect()
}

pub fn detect_ping_pong<T: Scalar>(log: &[(T, SatelliteId, SatelliteId)], window: T) -> usize {
    ping_pong_indices(log, window).len()
}

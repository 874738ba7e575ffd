use serde::{Deserialize, Serialize};

use super::{HandoverError, HoMetricWeights, DEFAULT_DELTA_MIN_S, DEFAULT_GUARD_S};
use crate::constellation::CoverageWindow;
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// A coverage window offered to the graph with its link capability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgmCandidate<T> {
    pub window: CoverageWindow<T>,
    pub capability_bps: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgmParams<T> {
    /// Minimum window overlap for a feasible handover, s.
    pub delta_min: T,
    /// Preparation lead added to the start of an overlap, s.
    pub lead: T,
}

impl<T: Scalar> HgmParams<T> {
    pub fn with_rtt(rtt: T) -> Self {
        Self {
            delta_min: T::lit(DEFAULT_DELTA_MIN_S),
            lead: rtt + T::lit(DEFAULT_GUARD_S),
        }
    }
}

/// Normalisers of the two handover metrics over one graph's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitNorm<T> {
    pub cap_max: T,
    pub stay_max: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgmEdge<T> {
    pub from: usize,
    pub to: usize,
    pub switch_time: T,
    /// Handover benefit of the target, in [0, 1].
    pub benefit: T,
    /// Benefit scaled by the fraction of the horizon the target newly covers.
    pub weight: T,
}

/// Directed acyclic graph over one UE's coverage windows.
///
/// Vertex 0 is the source (the UE at `horizon.0`); vertex `i > 0` is
/// `windows[i - 1]`. Windows are ordered by start time, then satellite id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverGraph<T> {
    pub ue_id: UeId,
    pub horizon: (T, T),
    pub windows: Vec<CoverageWindow<T>>,
    pub capabilities: Vec<T>,
    pub norm: BenefitNorm<T>,
    /// Sorted by `(from, to)`.
    pub edges: Vec<HgmEdge<T>>,
}

impl<T: Scalar> HandoverGraph<T> {
    pub fn vertex_count(&self) -> usize {
        self.windows.len() + 1
    }

    /// Window of vertex `v`; `None` for the source.
    pub fn window(&self, v: usize) -> Option<&CoverageWindow<T>> {
        v.checked_sub(1).map(|i| &self.windows[i])
    }

    pub fn satellite(&self, v: usize) -> Option<SatelliteId> {
        self.window(v).map(|w| w.satellite_id)
    }

    pub fn edges_from(&self, v: usize) -> &[HgmEdge<T>] {
        let lo = self.edges.partition_point(|e| e.from < v);
        let hi = self.edges.partition_point(|e| e.from <= v);
        &self.edges[lo..hi]
    }

    /// Whether vertex `v`'s window reaches the end of the horizon.
    pub fn is_sink(&self, v: usize) -> bool {
        self.window(v).is_some_and(|w| w.end >= self.horizon.1)
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut s = format!(
            "digraph hgm_ue{} {{\n  rankdir=LR;\n  v0 [label=\"UE {} @ {}\"];\n",
            self.ue_id, self.ue_id, self.horizon.0
        );
        for (i, w) in self.windows.iter().enumerate() {
            s += &format!(
                "  v{} [label=\"{}\\n[{:.1}, {:.1}]\"{}];\n",
                i + 1,
                w.satellite_id,
                w.start,
                w.end,
                if self.is_sink(i + 1) {
                    ", shape=doublecircle"
                } else {
                    ""
                }
            );
        }
        for e in &self.edges {
            s += &format!("  v{} -> v{} [label=\"{:.4}\"];\n", e.from, e.to, e.weight);
        }
        s + "}\n"
    }
}

/// `alpha * cap_to / cap_max + beta * (end_to - t_switch) / stay_max`,
/// clamped to `[0, 1]`. `w_from` is `None` for the source.
pub fn edge_benefit<T: Scalar>(
    w_from: Option<&CoverageWindow<T>>,
    w_to: &CoverageWindow<T>,
    t_switch: T,
    weights: &HoMetricWeights<T>,
    cap_to: T,
    norm: &BenefitNorm<T>,
) -> Result<T, HandoverError> {
    let in_from = w_from.is_none_or(|w| w.contains(t_switch));
    if !in_from || !w_to.contains(t_switch) {
        return Err(HandoverError::InfeasibleSwitch {
            t: t_switch.as_f64(),
        });
    }
    let ratio = |num: T, den: T| {
        if den > T::zero() {
            num / den
        } else {
            T::zero()
        }
    };
    let b = weights.alpha * ratio(cap_to, norm.cap_max)
        + weights.beta * ratio(w_to.end - t_switch, norm.stay_max);
    Ok(b.max(T::zero()).min(T::one()))
}

/// Builds the handover graph of one UE.
///
/// Windows ending at or before `t0` or starting at or after `t1` are
/// dropped. The source links to every window containing `t0` with switch
/// time `t0`. Window `i` links to a later window `j` when `j` ends later,
/// the two overlap by at least `delta_min`, and `j` starts after `i` (or
/// after `t0`, whichever is later); the switch happens `lead` after the
/// overlap opens.
pub fn build_hgm<T: Scalar>(
    ue_id: UeId,
    candidates: &[HgmCandidate<T>],
    horizon: (T, T),
    weights: &HoMetricWeights<T>,
    params: &HgmParams<T>,
) -> Result<HandoverGraph<T>, HandoverError> {
    weights.validate()?;
    let (t0, t1) = horizon;
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(HandoverError::Invalid(format!("horizon [{t0}, {t1}]")));
    }
    if let Some(c) = candidates
        .iter()
        .find(|c| c.window.ground_point_id != ue_id)
    {
        return Err(HandoverError::Invalid(format!(
            "window of UE {} passed for UE {ue_id}",
            c.window.ground_point_id
        )));
    }
    let mut kept: Vec<HgmCandidate<T>> = candidates
        .iter()
        .filter(|c| c.window.end > t0 && c.window.start < t1 && c.window.start < c.window.end)
        .copied()
        .collect();
    kept.sort_by(|a, b| {
        a.window
            .start
            .partial_cmp(&b.window.start)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.window.satellite_id.cmp(&b.window.satellite_id))
    });
    if !kept.iter().any(|c| c.window.contains(t0)) {
        return Err(HandoverError::NoInitialCoverage { t0: t0.as_f64() });
    }

    let norm = BenefitNorm {
        cap_max: kept
            .iter()
            .map(|c| c.capability_bps)
            .fold(T::zero(), T::max),
        stay_max: kept
            .iter()
            .map(|c| c.window.duration())
            .fold(T::zero(), T::max),
    };
    let span = t1 - t0;
    let mut edges = Vec::new();
    for (j, cj) in kept.iter().enumerate() {
        if cj.window.contains(t0) {
            let b = edge_benefit(None, &cj.window, t0, weights, cj.capability_bps, &norm)?;
            let gain = cj.window.end.min(t1) - t0;
            edges.push(HgmEdge {
                from: 0,
                to: j + 1,
                switch_time: t0,
                benefit: b,
                weight: b * gain / span,
            });
        }
    }
    for (i, ci) in kept.iter().enumerate() {
        let wi = &ci.window;
        for (j, cj) in kept.iter().enumerate().skip(i + 1) {
            let wj = &cj.window;
            if !(wj.end > wi.end)
                || !(wj.start.max(t0) > wi.start.max(t0))
                || wi.overlap(wj) < params.delta_min
            {
                continue;
            }
            let switch = wj.start.max(t0) + params.lead;
            if switch > wi.end.min(wj.end) {
                continue;
            }
            let b = edge_benefit(Some(wi), wj, switch, weights, cj.capability_bps, &norm)?;
            let gain = wj.end.min(t1) - wi.end.min(t1);
            edges.push(HgmEdge {
                from: i + 1,
                to: j + 1,
                switch_time: switch,
                benefit: b,
                weight: b * gain / span,
            });
        }
    }
    edges.sort_by_key(|e| (e.from, e.to));
    Ok(HandoverGraph {
        ue_id,
        horizon,
        capabilities: kept.iter().map(|c| c.capability_bps).collect(),
        windows: kept.into_iter().map(|c| c.window).collect(),
        norm,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn window(slot: u16, start: f64, end: f64) -> CoverageWindow<f64> {
        CoverageWindow {
            satellite_id: SatelliteId::new(0, 0, slot),
            ground_point_id: UeId(0),
            start,
            end,
            peak_elevation_deg: 40.0,
        }
    }

    fn cands(ws: &[(u16, f64, f64)]) -> Vec<HgmCandidate<f64>> {
        ws.iter()
            .map(|&(s, a, b)| HgmCandidate {
                window: window(s, a, b),
                capability_bps: 1e8,
            })
            .collect()
    }

    fn params() -> HgmParams<f64> {
        HgmParams::with_rtt(0.00367)
    }

    #[test]
    fn benefit_arithmetic() {
        let to = window(1, 0.0, 100.0);
        let norm = BenefitNorm {
            cap_max: 1.0,
            stay_max: 100.0,
        };
        let half = HoMetricWeights::default();
        let b = edge_benefit(None, &to, 20.0, &half, 0.6, &norm).unwrap();
        assert!((b - 0.7).abs() < 1e-12);
        let cap_only = HoMetricWeights::new(1.0, 0.0).unwrap();
        assert_eq!(
            edge_benefit(None, &to, 20.0, &cap_only, 0.6, &norm).unwrap(),
            0.6
        );
        let stay_only = HoMetricWeights::new(0.0, 1.0).unwrap();
        assert_eq!(
            edge_benefit(None, &to, 0.0, &stay_only, 0.6, &norm).unwrap(),
            1.0
        );
        let from = window(0, 0.0, 10.0);
        assert!(matches!(
            edge_benefit(Some(&from), &to, 50.0, &half, 0.6, &norm),
            Err(HandoverError::InfeasibleSwitch { .. })
        ));
        assert!(HoMetricWeights::new(0.7, 0.7).is_err());
    }

    #[test]
    fn single_window_graph() {
        let g = build_hgm(
            UeId(0),
            &cands(&[(0, 0.0, 600.0)]),
            (0.0, 600.0),
            &Default::default(),
            &params(),
        )
        .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges.len(), 1);
        assert!(g.is_sink(1));
    }

    #[test]
    fn three_window_chain() {
        let g = build_hgm(
            UeId(0),
            &cands(&[(0, 0.0, 100.0), (1, 60.0, 200.0), (2, 150.0, 300.0)]),
            (0.0, 300.0),
            &Default::default(),
            &params(),
        )
        .unwrap();
        let pairs: Vec<_> = g.edges.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert!((g.edges[1].switch_time - (60.0 + 0.05367)).abs() < 1e-12);
        assert!(g
            .edges
            .iter()
            .all(|e| e.weight >= 0.0 && e.weight.is_finite()));
    }

    #[test]
    fn short_overlap_has_no_edge() {
        let g = build_hgm(
            UeId(0),
            &cands(&[(0, 0.0, 100.0), (1, 99.0, 300.0)]),
            (0.0, 300.0),
            &Default::default(),
            &params(),
        )
        .unwrap();
        assert_eq!(g.edges.len(), 1);
    }

    #[test]
    fn no_initial_coverage() {
        let err = build_hgm(
            UeId(0),
            &cands(&[(0, 10.0, 100.0)]),
            (0.0, 300.0),
            &Default::default(),
            &params(),
        );
        assert_eq!(
            err.unwrap_err(),
            HandoverError::NoInitialCoverage { t0: 0.0 }
        );
    }

    #[test]
    fn dot_output_lists_every_edge() {
        let g = build_hgm(
            UeId(0),
            &cands(&[(0, 0.0, 100.0), (1, 60.0, 200.0)]),
            (0.0, 200.0),
            &Default::default(),
            &params(),
        )
        .unwrap();
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), g.edges.len());
    }
}

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{HandoverError, HandoverGraph, DUAL_PATH_CANDIDATES};
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;

/// A pre-configured handover sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoPath<T> {
    pub ue_id: UeId,
    /// Serving satellite and the instant it takes over; the first entry
    /// starts at the horizon start.
    pub sequence: Vec<(SatelliteId, T)>,
    pub cumulative_benefit: T,
    /// Graph vertices visited, source excluded.
    pub vertices: Vec<usize>,
}

impl<T: Scalar> HoPath<T> {
    pub fn handovers(&self) -> usize {
        self.sequence.len().saturating_sub(1)
    }

    /// Satellite serving at `t` according to the plan.
    pub fn serving_at(&self, t: T) -> Option<SatelliteId> {
        let i = self.sequence.partition_point(|&(_, s)| s <= t);
        i.checked_sub(1).map(|i| self.sequence[i].0)
    }
}

#[derive(Debug, Clone)]
struct Label<T> {
    benefit: T,
    /// Vertices including the source.
    vertices: Vec<usize>,
}

/// Best first: higher benefit, then fewer handovers, then the
/// lexicographically smaller satellite sequence.
fn better<T: Scalar>(g: &HandoverGraph<T>, a: &Label<T>, b: &Label<T>) -> Ordering {
    b.benefit
        .partial_cmp(&a.benefit)
        .unwrap_or(Ordering::Equal)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| {
            let sats = |l: &Label<T>| {
                l.vertices
                    .iter()
                    .skip(1)
                    .map(|&v| g.satellite(v))
                    .collect::<Vec<_>>()
            };
            sats(a).cmp(&sats(b))
        })
}

/// Top-`k` labels per vertex over the vertices with `allowed[v]`.
fn dp<T: Scalar>(g: &HandoverGraph<T>, allowed: &[bool], k: usize) -> Vec<Vec<Label<T>>> {
    let n = g.vertex_count();
    let mut labels: Vec<Vec<Label<T>>> = vec![Vec::new(); n];
    labels[0].push(Label {
        benefit: T::zero(),
        vertices: vec![0],
    });
    for v in 0..n {
        if labels[v].is_empty() {
            continue;
        }
        let here = std::mem::take(&mut labels[v]);
        for e in g.edges_from(v) {
            if !allowed[e.to] {
                continue;
            }
            for l in &here {
                let mut vertices = l.vertices.clone();
                vertices.push(e.to);
                let cand = Label {
                    benefit: l.benefit + e.weight,
                    vertices,
                };
                let slot = &mut labels[e.to];
                let pos = slot.partition_point(|x| better(g, x, &cand) != Ordering::Greater);
                if pos < k {
                    slot.insert(pos, cand);
                    slot.truncate(k);
                }
            }
        }
        labels[v] = here;
    }
    labels
}

fn to_path<T: Scalar>(g: &HandoverGraph<T>, l: &Label<T>) -> HoPath<T> {
    let sequence = l
        .vertices
        .windows(2)
        .map(|w| {
            let edges = g.edges_from(w[0]);
            let e = &edges[edges.partition_point(|e| e.to < w[1])];
            (g.satellite(w[1]).expect("non-source vertex"), e.switch_time)
        })
        .collect();
    HoPath {
        ue_id: g.ue_id,
        sequence,
        cumulative_benefit: l.benefit,
        vertices: l.vertices[1..].to_vec(),
    }
}

fn sink_labels<T: Scalar>(
    g: &HandoverGraph<T>,
    labels: Vec<Vec<Label<T>>>,
    k: usize,
) -> Vec<Label<T>> {
    let mut all: Vec<Label<T>> = labels
        .into_iter()
        .enumerate()
        .filter(|(v, _)| g.is_sink(*v))
        .flat_map(|(_, ls)| ls)
        .collect();
    all.sort_by(|a, b| better(g, a, b));
    all.truncate(k);
    all
}

fn gap_error<T: Scalar>(g: &HandoverGraph<T>, labels: &[Vec<Label<T>>]) -> HandoverError {
    let reach = (1..g.vertex_count())
        .filter(|&v| !labels[v].is_empty())
        .map(|v| g.windows[v - 1].end.min(g.horizon.1))
        .fold(g.horizon.0, T::max);
    HandoverError::CoverageGap {
        first_uncovered: reach.as_f64(),
    }
}

/// Maximum cumulative-benefit path from the source to a window reaching
/// the horizon end.
pub fn best_path<T: Scalar>(g: &HandoverGraph<T>) -> Result<HoPath<T>, HandoverError> {
    best_path_within(g, &vec![true; g.vertex_count()])
}

fn best_path_within<T: Scalar>(
    g: &HandoverGraph<T>,
    allowed: &[bool],
) -> Result<HoPath<T>, HandoverError> {
    let labels = dp(g, allowed, 1);
    let err = gap_error(g, &labels);
    sink_labels(g, labels, 1)
        .first()
        .map(|l| to_path(g, l))
        .ok_or(err)
}

/// The `k` best source-to-sink paths, best first.
pub fn k_best_paths<T: Scalar>(g: &HandoverGraph<T>, k: usize) -> Vec<HoPath<T>> {
    let labels = dp(g, &vec![true; g.vertex_count()], k);
    sink_labels(g, labels, k)
        .iter()
        .map(|l| to_path(g, l))
        .collect()
}

/// Best path to the furthest-reaching window, for horizons with a coverage
/// gap. Equals [`best_path`] when the horizon end is reachable.
pub fn best_partial_path<T: Scalar>(g: &HandoverGraph<T>) -> Option<HoPath<T>> {
    let labels = dp(g, &vec![true; g.vertex_count()], 1);
    let reach = |v: usize| g.windows[v - 1].end.min(g.horizon.1);
    let best_reach = (1..g.vertex_count())
        .filter(|&v| !labels[v].is_empty())
        .map(reach)
        .fold(T::neg_infinity(), T::max);
    let mut ends: Vec<&Label<T>> = (1..g.vertex_count())
        .filter(|&v| !labels[v].is_empty() && reach(v) == best_reach)
        .map(|v| &labels[v][0])
        .collect();
    ends.sort_by(|a, b| better(g, a, b));
    ends.first().map(|l| to_path(g, l))
}

/// Two vertex-disjoint paths with the largest summed benefit.
///
/// Each of the best [`DUAL_PATH_CANDIDATES`] first paths is paired with the
/// best path avoiding its vertices; the best pair wins.
pub fn best_dual_paths<T: Scalar>(
    g: &HandoverGraph<T>,
) -> Result<(HoPath<T>, HoPath<T>), HandoverError> {
    let initial = g.edges_from(0).len();
    if initial < 2 {
        return Err(HandoverError::DualInfeasible(format!(
            "{initial} window(s) cover the horizon start"
        )));
    }
    let mut best: Option<(T, HoPath<T>, HoPath<T>)> = None;
    for first in k_best_paths(g, DUAL_PATH_CANDIDATES) {
        let mut allowed = vec![true; g.vertex_count()];
        for &v in &first.vertices {
            allowed[v] = false;
        }
        if let Ok(second) = best_path_within(g, &allowed) {
            let total = first.cumulative_benefit + second.cumulative_benefit;
            if best.as_ref().is_none_or(|(b, _, _)| total > *b) {
                best = Some((total, first, second));
            }
        }
    }
    best.map(|(_, a, b)| (a, b)).ok_or_else(|| {
        HandoverError::DualInfeasible("no second path avoids any of the best first paths".into())
    })
}

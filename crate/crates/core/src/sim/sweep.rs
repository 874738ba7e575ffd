use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_with, MetricsReport, Scenario, SimContext, SimError, Strategy};
use crate::num::Scalar;

/// One line of the comparison table: statistics over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ue_count: usize,
    pub strategy: Strategy,
    pub atr_mean_bps: f64,
    /// Sample standard deviation across seeds.
    pub atr_std: f64,
    pub ho_per_ue_mean: f64,
    pub ho_per_ue_std: f64,
    pub pingpong_mean: f64,
    pub signaling_mean: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs both strategies for every (UE count, seed) pair of the template.
pub fn sweep<T: Scalar>(
    template: &Scenario<T>,
    ue_counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, SimError> {
    sweep_with(&SimContext::new(template)?, template, ue_counts, seeds)
}

/// [`sweep`] with a prebuilt geometry context. Rows are ordered by UE
/// count, then strategy.
pub fn sweep_with<T: Scalar>(
    ctx: &SimContext<T>,
    template: &Scenario<T>,
    ue_counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, SimError> {
    if ue_counts.is_empty() || seeds.is_empty() {
        return Err(SimError::Invalid(
            "sweep needs at least one UE count and one seed".into(),
        ));
    }
    let cells: Vec<(usize, Strategy, u64)> = ue_counts
        .iter()
        .flat_map(|&n| {
            Strategy::ALL
                .into_iter()
                .flat_map(move |s| seeds.iter().map(move |&seed| (n, s, seed)))
        })
        .collect();
    let reports: Vec<MetricsReport<T>> = cells
        .par_iter()
        .map(|&(n, strategy, seed)| {
            let mut sc = template.clone();
            sc.ue_count = n;
            sc.seed = seed;
            run_with(ctx, &sc, strategy).map(|(r, _)| r)
        })
        .collect::<Result<_, _>>()?;
    Ok(cells
        .chunks(seeds.len())
        .zip(reports.chunks(seeds.len()))
        .map(|(cell, reps)| {
            let col =
                |f: &dyn Fn(&MetricsReport<T>) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
            let (atr_mean_bps, atr_std) = mean_std(&col(&|r| r.atr_bps.as_f64()));
            let (ho_per_ue_mean, ho_per_ue_std) = mean_std(&col(&|r| r.ho_per_ue.as_f64()));
            SweepRow {
                ue_count: cell[0].0,
                strategy: cell[0].1,
                atr_mean_bps,
                atr_std,
                ho_per_ue_mean,
                ho_per_ue_std,
                pingpong_mean: mean_std(&col(&|r| r.pingpong_count as f64)).0,
                signaling_mean: mean_std(&col(&|r| r.signaling_messages as f64)).0,
            }
        })
        .collect())
}

//! Beam pointing and interference-aware power allocation.
//!
//! The allocator maximises the proportional-fair utility
//! `sum_u ln(rate_u + eps)` by best response: each beam in turn picks the
//! power from a logarithmic grid inside its satellite's residual budget that
//! maximises the utility with every other beam held fixed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{rate_from_linear, LinkParams};
use crate::constellation::GroundPoint;
use crate::ids::{SatelliteId, UeId};
use crate::num::Scalar;
use crate::prediction::{InterferenceMatrix, Transmitter};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeamformingError {
    #[error("unknown UE {0}")]
    UnknownUe(UeId),
    #[error("no power budget for satellite {0}")]
    MissingBudget(SatelliteId),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub struct BeamAssignment<T> {
    pub ue_id: UeId,
    pub satellite_id: SatelliteId,
    pub boresight: GroundPoint<T>,
    pub bandwidth_share: T,
}

/// Points one beam at each assigned UE with full-band reuse.
pub fn point_beams<T: Scalar>(
    assignments: &[(UeId, SatelliteId)],
    ue_positions: &BTreeMap<UeId, GroundPoint<T>>,
) -> Result<Vec<BeamAssignment<T>>, BeamformingError> {
    assignments
        .iter()
        .map(|&(ue_id, satellite_id)| {
            let boresight = *ue_positions
                .get(&ue_id)
                .ok_or(BeamformingError::UnknownUe(ue_id))?;
            Ok(BeamAssignment {
                ue_id,
                satellite_id,
                boresight,
                bandwidth_share: T::one(),
            })
        })
        .collect()
}

/// Transmit power per beam, indexed like the interference matrix columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation<T> {
    pub tx_ids: Vec<Transmitter>,
    pub power_w: Vec<T>,
}

impl<T: Scalar> PowerAllocation<T> {
    pub fn empty() -> Self {
        Self {
            tx_ids: Vec::new(),
            power_w: Vec::new(),
        }
    }

    /// Equal split of every satellite's budget across its beams.
    pub fn equal_split(
        tx_ids: &[Transmitter],
        budgets: &BTreeMap<SatelliteId, T>,
    ) -> Result<Self, BeamformingError> {
        let mut beams: BTreeMap<SatelliteId, usize> = BTreeMap::new();
        for tx in tx_ids {
            *beams.entry(tx.satellite_id).or_default() += 1;
        }
        let power_w = tx_ids
            .iter()
            .map(|tx| {
                let budget = checked_budget(budgets, tx.satellite_id)?;
                Ok(budget / T::from_usize_lossy(beams[&tx.satellite_id]))
            })
            .collect::<Result<_, BeamformingError>>()?;
        Ok(Self {
            tx_ids: tx_ids.to_vec(),
            power_w,
        })
    }

    pub fn per_satellite(&self) -> BTreeMap<SatelliteId, T> {
        let mut out = BTreeMap::new();
        for (tx, &p) in self.tx_ids.iter().zip(&self.power_w) {
            let e = out.entry(tx.satellite_id).or_insert_with(T::zero);
            *e = *e + p;
        }
        out
    }

    /// Largest ratio of used power to budget over all satellites.
    pub fn max_budget_ratio(&self, budgets: &BTreeMap<SatelliteId, T>) -> T {
        self.per_satellite()
            .into_iter()
            .map(|(s, used)| budgets.get(&s).map_or(T::infinity(), |&b| used / b))
            .fold(T::zero(), T::max)
    }
}

fn checked_budget<T: Scalar>(
    budgets: &BTreeMap<SatelliteId, T>,
    sat: SatelliteId,
) -> Result<T, BeamformingError> {
    let b = *budgets
        .get(&sat)
        .ok_or(BeamformingError::MissingBudget(sat))?;
    if !(b > T::zero()) || !b.is_finite() {
        return Err(BeamformingError::Domain(format!(
            "budget of satellite {sat} must be positive, got {b}"
        )));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationOptions<T> {
    pub max_sweeps: usize,
    pub relative_tolerance: T,
    pub grid_points: usize,
    /// Lowest non-zero grid point as a fraction of the residual budget.
    pub grid_floor: T,
    /// Rate offset inside the logarithm, bps.
    pub epsilon_bps: T,
}

impl<T: Scalar> Default for AllocationOptions<T> {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            relative_tolerance: T::lit(1e-6),
            grid_points: 32,
            grid_floor: T::lit(1e-6),
            epsilon_bps: T::one(),
        }
    }
}

/// State after one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub utility: T,
    pub max_budget_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationOutcome<T> {
    pub allocation: PowerAllocation<T>,
    /// Entry 0 is the equal split, then one entry per sweep.
    pub trace: Vec<SweepRecord<T>>,
}

impl<T: Scalar> AllocationOutcome<T> {
    pub fn utility(&self) -> T {
        self.trace.last().map_or(T::zero(), |r| r.utility)
    }
}

/// Row bookkeeping shared by rate evaluation and the allocator.
struct Rows<T> {
    /// UE index of each row.
    ue_of_row: Vec<usize>,
    ues: Vec<UeId>,
    signal: Vec<T>,
    interference: Vec<T>,
    noise: T,
}

impl<T: Scalar> Rows<T> {
    fn new(m: &InterferenceMatrix<T>, power: &[T], params: &LinkParams<T>) -> Self {
        let mut ues: Vec<UeId> = m.ue_ids.clone();
        ues.sort();
        ues.dedup();
        let ue_of_row = m
            .ue_ids
            .iter()
            .map(|u| ues.binary_search(u).unwrap())
            .collect();
        let n = m.rows();
        let mut signal = vec![T::zero(); n];
        let mut interference = m.background_w.clone();
        for r in 0..n {
            for (c, &p) in power.iter().enumerate() {
                if r == c {
                    signal[r] = p * m.get(r, c);
                } else if !m.is_own(r, c) {
                    interference[r] = interference[r] + p * m.get(r, c);
                }
            }
        }
        Self {
            ue_of_row,
            ues,
            signal,
            interference,
            noise: params.noise_power_w(),
        }
    }

    fn row_rate(&self, signal: T, interference: T, params: &LinkParams<T>) -> T {
        rate_from_linear(signal / (self.noise + interference), params)
    }

    fn ue_rates(&self, params: &LinkParams<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.ues.len()];
        for r in 0..self.signal.len() {
            let u = self.ue_of_row[r];
            out[u] = out[u] + self.row_rate(self.signal[r], self.interference[r], params);
        }
        out
    }
}

fn check_shape<T: Scalar>(
    m: &InterferenceMatrix<T>,
    n_power: usize,
) -> Result<(), BeamformingError> {
    m.check()
        .map_err(|e| BeamformingError::Shape(e.to_string()))?;
    if n_power != m.cols() {
        return Err(BeamformingError::Shape(format!(
            "{} powers for {} transmitters",
            n_power,
            m.cols()
        )));
    }
    Ok(())
}

/// Achievable rate of each receive link (matrix row), bps.
pub fn evaluate_link_rates<T: Scalar>(
    alloc: &PowerAllocation<T>,
    m: &InterferenceMatrix<T>,
    params: &LinkParams<T>,
) -> Result<Vec<T>, BeamformingError> {
    check_shape(m, alloc.power_w.len())?;
    let rows = Rows::new(m, &alloc.power_w, params);
    Ok((0..m.rows())
        .map(|r| rows.row_rate(rows.signal[r], rows.interference[r], params))
        .collect())
}

/// Linear SINR of each receive link (matrix row).
pub fn evaluate_link_sinr<T: Scalar>(
    alloc: &PowerAllocation<T>,
    m: &InterferenceMatrix<T>,
    params: &LinkParams<T>,
) -> Result<Vec<T>, BeamformingError> {
    check_shape(m, alloc.power_w.len())?;
    let rows = Rows::new(m, &alloc.power_w, params);
    Ok((0..m.rows())
        .map(|r| rows.signal[r] / (rows.noise + rows.interference[r]))
        .collect())
}

/// Achievable rate per UE, summing the links of dual-connected UEs, bps.
pub fn evaluate_rates<T: Scalar>(
    alloc: &PowerAllocation<T>,
    m: &InterferenceMatrix<T>,
    params: &LinkParams<T>,
) -> Result<BTreeMap<UeId, T>, BeamformingError> {
    check_shape(m, alloc.power_w.len())?;
    let rows = Rows::new(m, &alloc.power_w, params);
    Ok(rows
        .ues
        .iter()
        .copied()
        .zip(rows.ue_rates(params))
        .collect())
}

/// Proportional-fair utility of an allocation.
pub fn utility<T: Scalar>(
    alloc: &PowerAllocation<T>,
    m: &InterferenceMatrix<T>,
    params: &LinkParams<T>,
    epsilon_bps: T,
) -> Result<T, BeamformingError> {
    Ok(evaluate_rates(alloc, m, params)?
        .values()
        .map(|&r| (r + epsilon_bps).ln())
        .sum())
}

/// Best-response power allocation with default options.
pub fn allocate_power<T: Scalar>(
    m: &InterferenceMatrix<T>,
    budgets: &BTreeMap<SatelliteId, T>,
    params: &LinkParams<T>,
) -> Result<AllocationOutcome<T>, BeamformingError> {
    allocate_power_with(m, budgets, params, &AllocationOptions::default())
}

pub fn allocate_power_with<T: Scalar>(
    m: &InterferenceMatrix<T>,
    budgets: &BTreeMap<SatelliteId, T>,
    params: &LinkParams<T>,
    opts: &AllocationOptions<T>,
) -> Result<AllocationOutcome<T>, BeamformingError> {
    check_shape(m, m.cols())?;
    let mut alloc = PowerAllocation::equal_split(&m.tx_ids, budgets)?;
    let n = m.cols();
    let eps = opts.epsilon_bps;

    // columns grouped by satellite, for residual budgets
    let mut sat_cols: BTreeMap<SatelliteId, Vec<usize>> = BTreeMap::new();
    for (c, tx) in m.tx_ids.iter().enumerate() {
        sat_cols.entry(tx.satellite_id).or_default().push(c);
    }
    let group_of: Vec<&Vec<usize>> = m
        .tx_ids
        .iter()
        .map(|tx| &sat_cols[&tx.satellite_id])
        .collect();

    let mut rows = Rows::new(m, &alloc.power_w, params);
    let mut row_rate: Vec<T> = (0..n)
        .map(|r| rows.row_rate(rows.signal[r], rows.interference[r], params))
        .collect();
    let mut ue_rate = rows.ue_rates(params);
    let total = |ue_rate: &[T]| ue_rate.iter().map(|&r| (r + eps).ln()).sum::<T>();
    let mut current = total(&ue_rate);
    let mut trace = vec![SweepRecord {
        utility: current,
        max_budget_ratio: alloc.max_budget_ratio(budgets),
    }];

    let mut new_row_rate = vec![T::zero(); n];
    let mut ue_delta = vec![T::zero(); rows.ues.len()];
    let mut candidates = Vec::with_capacity(opts.grid_points + 2);
    for _ in 0..opts.max_sweeps {
        let start = current;
        for c in 0..n {
            let budget = budgets[&m.tx_ids[c].satellite_id];
            let others: T = group_of[c]
                .iter()
                .filter(|&&k| k != c)
                .map(|&k| alloc.power_w[k])
                .sum();
            let residual = (budget - others).max(T::zero());
            let p_now = alloc.power_w[c];
            candidates.clear();
            candidates.push(T::zero());
            if residual > T::zero() {
                let lo = residual * opts.grid_floor;
                let steps = T::from_usize_lossy(opts.grid_points.max(2) - 1);
                for k in 0..opts.grid_points {
                    let f = T::from_usize_lossy(k) / steps;
                    candidates.push(lo * (residual / lo).powf(f));
                }
            }

            // utility gain of moving column c from p_now to x
            let mut gain_of = |x: T, commit: bool| -> T {
                let d = x - p_now;
                ue_delta.iter_mut().for_each(|v| *v = T::zero());
                for r in 0..n {
                    let (mut s, mut i) = (rows.signal[r], rows.interference[r]);
                    if r == c {
                        s = x * m.get(r, c);
                    } else if !m.is_own(r, c) {
                        i = i + d * m.get(r, c);
                    } else {
                        new_row_rate[r] = row_rate[r];
                        continue;
                    }
                    let nr = rows.row_rate(s, i, params);
                    new_row_rate[r] = nr;
                    let u = rows.ue_of_row[r];
                    ue_delta[u] = ue_delta[u] + (nr - row_rate[r]);
                    if commit {
                        rows.signal[r] = s;
                        rows.interference[r] = i;
                    }
                }
                let mut g = T::zero();
                for (u, &dl) in ue_delta.iter().enumerate() {
                    if dl != T::zero() {
                        g = g + ((ue_rate[u] + dl + eps).ln() - (ue_rate[u] + eps).ln());
                    }
                }
                g
            };

            let mut best = (T::zero(), p_now);
            for &x in &candidates {
                if x == p_now {
                    continue;
                }
                let g = gain_of(x, false);
                if g > best.0 {
                    best = (g, x);
                }
            }
            if best.1 != p_now {
                gain_of(best.1, true);
                for (u, &dl) in ue_delta.iter().enumerate() {
                    ue_rate[u] = ue_rate[u] + dl;
                }
                row_rate.copy_from_slice(&new_row_rate);
                alloc.power_w[c] = best.1;
                // recompute exactly to avoid drift of the running sums
                current = total(&ue_rate);
            }
        }
        trace.push(SweepRecord {
            utility: current,
            max_budget_ratio: alloc.max_budget_ratio(budgets),
        });
        let improvement = current - start;
        if !(improvement > opts.relative_tolerance * start.abs().max(T::min_positive_value())) {
            break;
        }
    }
    Ok(AllocationOutcome {
        allocation: alloc,
        trace,
    })
}

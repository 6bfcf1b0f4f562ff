//! Fairness and throughput metrics: Gini index, long-term rates, cell-edge
//! throughput, rate latency, service utility, per-class reports and the
//! empirical scheduling-probability / weighted-rate ratio checks.

use crate::num::Real;
use crate::sched::{AllocationResult, ServiceClass};
use crate::{Error, Result};

/// Gini fairness index of a nonnegative rate vector:
///
///   G = 1 / (2 K^2 rbar) * sum_x sum_y |r_x - r_y|
///
/// 0 is perfectly fair, values near 1 highly unfair.
pub fn gini<R: Real>(rates: &[R]) -> Result<R> {
    if rates.is_empty() {
        return Err(Error::Invalid("gini of an empty vector".into()));
    }
    let mut total = R::zero();
    for &r in rates {
        if r < R::zero() || !r.is_finite() {
            return Err(Error::Invalid(format!(
                "gini requires finite rates >= 0, got {r}"
            )));
        }
        total += r;
    }
    if total == R::zero() {
        return Err(Error::Invalid(
            "gini undefined for an all-zero vector".into(),
        ));
    }
    let k = R::of(rates.len() as f64);
    let mean = total / k;
    let mut diff_sum = R::zero();
    for &x in rates {
        for &y in rates {
            diff_sum += (x - y).abs();
        }
    }
    Ok(diff_sum / (R::of(2.0) * k * k * mean))
}

/// Per-user rate averaged over the fairness window: the first `t_c` slots of
/// the log (or all slots if fewer were run). `slot_rates[t][k]`.
pub fn long_term_rates<R: Real>(slot_rates: &[Vec<R>], t_c: usize) -> Vec<R> {
    let window = slot_rates.len().min(t_c);
    assert!(window > 0, "need at least one completed slot");
    let num_users = slot_rates[0].len();
    let mut out = vec![R::zero(); num_users];
    for slot in &slot_rates[..window] {
        for (acc, &r) in out.iter_mut().zip(slot) {
            *acc += r;
        }
    }
    let w = R::of(window as f64);
    for acc in &mut out {
        *acc /= w;
    }
    out
}

/// Low-percentile user throughput over pooled per-user long-term rates,
/// with linear interpolation between order statistics.
pub fn cell_edge<R: Real>(long_rates: &[R], percentile: f64) -> Result<R> {
    if long_rates.is_empty() {
        return Err(Error::Invalid("cell-edge of an empty sample".into()));
    }
    let mut sorted = long_rates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    let rank = percentile / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = R::of(rank - lo as f64);
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// First slot (1-based) in which each user saw a nonzero rate; `None` if it
/// was never served.
pub fn rate_latency<R: Real>(slot_rates: &[Vec<R>]) -> Vec<Option<usize>> {
    if slot_rates.is_empty() {
        return Vec::new();
    }
    let num_users = slot_rates[0].len();
    (0..num_users)
        .map(|k| {
            slot_rates
                .iter()
                .position(|slot| slot[k] > R::zero())
                .map(|t| t + 1)
        })
        .collect()
}

/// Sum of log historical rates, the PF service-utility objective. Rates are
/// floored at `eps` so unserved users contribute a large negative term
/// instead of -inf.
pub fn service_utility<R: Real>(hist: &[R], eps: R) -> R {
    hist.iter().fold(R::zero(), |acc, &t| acc + t.max(eps).ln())
}

/// Per-service-class outcome over one drop.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupStats<R: Real> {
    pub name: String,
    /// Sum of member long-term rates.
    pub group_rate_bps: R,
    pub gini: R,
    /// All members at or above the class target.
    pub success: bool,
}

pub fn service_report<R: Real>(
    long_rates: &[R],
    classes: &[ServiceClass<R>],
) -> Result<Vec<GroupStats<R>>> {
    classes
        .iter()
        .map(|class| {
            let rates: Vec<R> = class.members.iter().map(|&k| long_rates[k]).collect();
            Ok(GroupStats {
                name: class.name.clone(),
                group_rate_bps: rates.iter().fold(R::zero(), |a, &r| a + r),
                gini: gini(&rates)?,
                success: rates.iter().all(|&r| r >= class.target_rate_bps),
            })
        })
        .collect()
}

/// Per-user tallies of scheduling events for one run, pooled across drops.
/// Feeds the empirical Proposition-1 ratio checks.
#[derive(Clone, Debug, Default)]
pub struct ScheduleAccumulator {
    pub total_slots: u64,
    /// Slots in which the user was scheduled on at least one subband.
    pub slots_scheduled: Vec<u64>,
    /// Sum and count of per-(slot, subband) rates of events where the user
    /// was in the chosen set.
    pub rate_sum: Vec<f64>,
    pub rate_events: Vec<u64>,
    /// Sum and count of the chosen set's weight share relative to the
    /// uniform-weight share, over decisions that picked a set containing the
    /// user. Only populated by weighted kinds.
    pub relweight_sum: Vec<f64>,
    pub relweight_events: Vec<u64>,
}

impl ScheduleAccumulator {
    pub fn new(num_users: usize) -> Self {
        ScheduleAccumulator {
            total_slots: 0,
            slots_scheduled: vec![0; num_users],
            rate_sum: vec![0.0; num_users],
            rate_events: vec![0; num_users],
            relweight_sum: vec![0.0; num_users],
            relweight_events: vec![0; num_users],
        }
    }

    /// Folds one scheduled slot into the tallies.
    pub fn absorb<R: Real>(&mut self, alloc: &AllocationResult<R>) {
        self.total_slots += 1;
        let mut seen = vec![false; self.slots_scheduled.len()];
        for a in &alloc.assignments {
            for (i, &k) in a.users.iter().enumerate() {
                seen[k] = true;
                self.rate_sum[k] += a.rates_bps[i].as_f64();
                self.rate_events[k] += 1;
                if let Some(ws) = a.weight_share {
                    let uniform = ws.uniform_share.as_f64();
                    if uniform > 0.0 {
                        self.relweight_sum[k] += ws.share.as_f64() / uniform;
                        self.relweight_events[k] += 1;
                    }
                }
            }
        }
        for (slots, &s) in self.slots_scheduled.iter_mut().zip(&seen) {
            if s {
                *slots += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ScheduleAccumulator) {
        self.total_slots += other.total_slots;
        for k in 0..self.slots_scheduled.len() {
            self.slots_scheduled[k] += other.slots_scheduled[k];
            self.rate_sum[k] += other.rate_sum[k];
            self.rate_events[k] += other.rate_events[k];
            self.relweight_sum[k] += other.relweight_sum[k];
            self.relweight_events[k] += other.relweight_events[k];
        }
    }
}

/// The two empirical ratios of the service-utility proposition.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RatioReport {
    /// Geometric mean over users of Pr_k / Pr'_k, the per-slot scheduling
    /// probability under the weighted vs the conventional metric.
    pub ratio1: f64,
    /// prod_k E[relative weight share of U_k] * prod_k E[R(s,k)]
    /// / prod_k E[R'(s,k)], products in log space. The weight-share factor
    /// is normalized by the uniform-weight share so a constant-weight
    /// self-comparison is exactly 1.
    pub ratio2: f64,
    /// Users never scheduled in one of the runs, excluded from the products.
    pub excluded_users: Vec<usize>,
    pub per_user_pr_ratio: Vec<Option<f64>>,
}

/// Empirical Proposition-1 check between a weighted run and a conventional
/// run over identical seeds. `weighted` must carry weight shares.
pub fn proposition_ratios(
    weighted: &ScheduleAccumulator,
    conventional: &ScheduleAccumulator,
) -> Result<RatioReport> {
    let num_users = weighted.slots_scheduled.len();
    if conventional.slots_scheduled.len() != num_users {
        return Err(Error::Invalid("accumulator user counts differ".into()));
    }
    let mut excluded = Vec::new();
    let mut per_user_pr_ratio = vec![None; num_users];
    let mut log_ratio1 = 0.0;
    let mut log_ratio2 = 0.0;
    let mut included = 0usize;

    for k in 0..num_users {
        let usable = weighted.slots_scheduled[k] > 0
            && conventional.slots_scheduled[k] > 0
            && weighted.rate_events[k] > 0
            && conventional.rate_events[k] > 0;
        if !usable {
            excluded.push(k);
            continue;
        }
        let pr_w = weighted.slots_scheduled[k] as f64 / weighted.total_slots as f64;
        let pr_c = conventional.slots_scheduled[k] as f64 / conventional.total_slots as f64;
        per_user_pr_ratio[k] = Some(pr_w / pr_c);
        log_ratio1 += (pr_w / pr_c).ln();

        let mean_rate_w = weighted.rate_sum[k] / weighted.rate_events[k] as f64;
        let mean_rate_c = conventional.rate_sum[k] / conventional.rate_events[k] as f64;
        let mean_relweight = if weighted.relweight_events[k] > 0 {
            weighted.relweight_sum[k] / weighted.relweight_events[k] as f64
        } else {
            // degenerate comparison without weight bookkeeping
            1.0
        };
        log_ratio2 += mean_relweight.ln() + mean_rate_w.ln() - mean_rate_c.ln();
        included += 1;
    }

    if included == 0 {
        return Err(Error::Invalid(
            "no user scheduled in both runs; ratios undefined".into(),
        ));
    }
    Ok(RatioReport {
        ratio1: (log_ratio1 / included as f64).exp(),
        ratio2: log_ratio2.exp(),
        excluded_users: excluded,
        per_user_pr_ratio,
    })
}

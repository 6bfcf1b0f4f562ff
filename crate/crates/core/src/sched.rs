//! Candidate enumeration, the six scheduling metrics, the first-slot rule,
//! premium-service weights and per-slot state updates.
//!
//! Scheduling walks the subbands of one slot in order. For every subband all
//! candidate user sets are scored with the active metric; the argmax set gets
//! the subband, and the current-slot achieved rates feed back into the scores
//! of the remaining subbands.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::channel::{CellGeometry, ChannelRealization};
use crate::num::Real;
use crate::{power, rate, Error, Result};

/// Maximum users multiplexed per subband supported by the scratch buffers.
pub const MAX_PER_SUBBAND: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "PF_NOMA")]
    PfNoma,
    #[serde(rename = "WNOPF")]
    Wnopf,
    #[serde(rename = "J_WNOPF")]
    JWnopf,
    #[serde(rename = "PF_MODIFIED")]
    PfModified,
    #[serde(rename = "PF_OMA")]
    PfOma,
    #[serde(rename = "WOPF")]
    Wopf,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::PfNoma,
        SchedulerKind::Wnopf,
        SchedulerKind::JWnopf,
        SchedulerKind::PfModified,
        SchedulerKind::PfOma,
        SchedulerKind::Wopf,
    ];

    /// OMA kinds schedule exactly one user per subband.
    pub fn is_oma(self) -> bool {
        matches!(self, SchedulerKind::PfOma | SchedulerKind::Wopf)
    }

    /// Kinds that use rate-distance weights. These are also the kinds the
    /// dedicated first-slot rule applies to; the conventional metrics run
    /// their own formula from slot one.
    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            SchedulerKind::Wnopf | SchedulerKind::JWnopf | SchedulerKind::Wopf
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::PfNoma => "PF_NOMA",
            SchedulerKind::Wnopf => "WNOPF",
            SchedulerKind::JWnopf => "J_WNOPF",
            SchedulerKind::PfModified => "PF_MODIFIED",
            SchedulerKind::PfOma => "PF_OMA",
            SchedulerKind::Wopf => "WOPF",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config {
                key: "scheduler".into(),
                msg: format!("unknown scheduler `{s}`"),
            })
    }
}

/// One service level: a rate target and the users subscribed to it.
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceClass<R: Real> {
    pub name: String,
    pub target_rate_bps: R,
    pub members: Vec<usize>,
}

/// Resolves service classes into a per-user target vector, rejecting users
/// with no class or more than one.
pub fn service_targets<R: Real>(classes: &[ServiceClass<R>], num_users: usize) -> Result<Vec<R>> {
    let mut targets = vec![None; num_users];
    for class in classes {
        if !(class.target_rate_bps > R::zero()) {
            return Err(Error::Config {
                key: format!("services.{}.target_rate_bps", class.name),
                msg: "target rate must be positive".into(),
            });
        }
        for &m in &class.members {
            if m >= num_users {
                return Err(Error::Config {
                    key: format!("services.{}.users", class.name),
                    msg: format!("user {m} out of range for {num_users} users"),
                });
            }
            if targets[m].replace(class.target_rate_bps).is_some() {
                return Err(Error::Config {
                    key: format!("services.{}.users", class.name),
                    msg: format!("user {m} assigned to more than one service class"),
                });
            }
        }
    }
    targets
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            t.ok_or_else(|| Error::Config {
                key: "services".into(),
                msg: format!("user {k} has no service class"),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchedulerParams<R: Real> {
    /// PF averaging window, slots.
    pub t_c: usize,
    /// Expected-rate factor b of the weight target.
    pub b: R,
    /// Floor for historical/current rate denominators, bps.
    pub epsilon_rate: R,
    /// Floor applied to weights when clamping is on.
    pub weight_floor: R,
    /// Clamp negative weights (met target contributes no priority).
    pub clamp_weights: bool,
}

impl<R: Real> Default for SchedulerParams<R> {
    fn default() -> Self {
        SchedulerParams {
            t_c: 100,
            b: R::of(1.5),
            epsilon_rate: R::of(1e-3),
            weight_floor: R::zero(),
            clamp_weights: true,
        }
    }
}

/// Per-drop scheduler state: historical rates, current-slot achieved rates
/// and subband assignments, the previous slot's cell-average rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SchedulerState<R: Real> {
    /// 1-based index of the slot being scheduled.
    pub slot: usize,
    /// Historical rate T_k, bps.
    pub hist: Vec<R>,
    /// Rate achieved so far in the current slot, R_k(t), bps.
    pub cur: Vec<R>,
    /// Subbands allocated to each user this slot.
    pub subbands_of: Vec<Vec<usize>>,
    /// Cell-average per-user rate of the previous slot, R_avg(t-1).
    pub r_avg_prev: R,
    pub params: SchedulerParams<R>,
    /// Per-user premium rate targets; `None` means standard mode.
    pub service_target: Option<Vec<R>>,
}

impl<R: Real> SchedulerState<R> {
    pub fn new(
        num_users: usize,
        params: SchedulerParams<R>,
        service_target: Option<Vec<R>>,
    ) -> Self {
        if let Some(t) = &service_target {
            assert_eq!(t.len(), num_users);
        }
        SchedulerState {
            slot: 1,
            hist: vec![R::zero(); num_users],
            cur: vec![R::zero(); num_users],
            subbands_of: vec![Vec::new(); num_users],
            r_avg_prev: R::zero(),
            params,
            service_target,
        }
    }

    pub fn num_users(&self) -> usize {
        self.hist.len()
    }
}

/// All candidate user sets of sizes 1..=max_per_subband, sizes ascending,
/// lexicographic within a size.
pub fn enumerate_candidates(num_users: usize, max_per_subband: usize) -> Result<Vec<Vec<usize>>> {
    if max_per_subband == 0 || max_per_subband > num_users {
        return Err(Error::Invalid(format!(
            "max users per subband must be in 1..={num_users}, got {max_per_subband}"
        )));
    }
    if max_per_subband > MAX_PER_SUBBAND {
        return Err(Error::Invalid(format!(
            "at most {MAX_PER_SUBBAND} users per subband are supported"
        )));
    }
    let mut sets = Vec::new();
    for m in 1..=max_per_subband {
        sets.extend((0..num_users).combinations(m));
    }
    Ok(sets)
}

/// Conventional PF score: sum over the set of R(s,k)/max(T_k, eps).
pub fn pf_metric<R: Real>(users: &[usize], rates: &[R], state: &SchedulerState<R>) -> R {
    let eps = state.params.epsilon_rate;
    users
        .iter()
        .zip(rates)
        .fold(R::zero(), |acc, (&k, &r)| acc + r / state.hist[k].max(eps))
}

/// Rate-distance weight of one user: distance from its target rate (premium
/// target, or b times the previous slot's cell average), optionally clamped.
pub fn weight_user<R: Real>(user: usize, state: &SchedulerState<R>) -> R {
    let target = match &state.service_target {
        Some(targets) => targets[user],
        None => state.params.b * state.r_avg_prev,
    };
    let w = target - state.cur[user];
    if state.params.clamp_weights {
        w.max(state.params.weight_floor)
    } else {
        w
    }
}

fn weight_sum<R: Real>(users: &[usize], state: &SchedulerState<R>) -> R {
    users
        .iter()
        .fold(R::zero(), |acc, &k| acc + weight_user(k, state))
}

/// Weighted NOMA PF score: PF(U) x W(U), with W(U) the summed user weights.
pub fn wnopf_metric<R: Real>(users: &[usize], rates: &[R], state: &SchedulerState<R>) -> R {
    pf_metric(users, rates, state) * weight_sum(users, state)
}

/// Joint incorporation of weights: per-user PF term times that user's own
/// weight, no cross terms.
pub fn jwnopf_metric<R: Real>(users: &[usize], rates: &[R], state: &SchedulerState<R>) -> R {
    let eps = state.params.epsilon_rate;
    users.iter().zip(rates).fold(R::zero(), |acc, (&k, &r)| {
        acc + r / state.hist[k].max(eps) * weight_user(k, state)
    })
}

/// Modified PF: the rate already assigned this slot is added to the
/// historical rate in the denominator.
pub fn pf_modified_metric<R: Real>(users: &[usize], rates: &[R], state: &SchedulerState<R>) -> R {
    let eps = state.params.epsilon_rate;
    users.iter().zip(rates).fold(R::zero(), |acc, (&k, &r)| {
        acc + r / (state.hist[k] + state.cur[k]).max(eps)
    })
}

/// First-slot rule: scores against the rate already achieved in this slot so
/// unserved users dominate (the eps floor makes any zero-rate user outrank
/// any served one).
pub fn first_slot_metric<R: Real>(
    users: &[usize],
    rates: &[R],
    state: &SchedulerState<R>,
) -> Result<R> {
    if state.slot != 1 {
        return Err(Error::Invalid(format!(
            "first-slot metric called at slot {}",
            state.slot
        )));
    }
    let eps = state.params.epsilon_rate;
    Ok(users
        .iter()
        .zip(rates)
        .fold(R::zero(), |acc, (&k, &r)| acc + r / state.cur[k].max(eps)))
}

/// Normalized weight bookkeeping of one subband decision, used by the
/// Proposition-1 empirical checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightShare<R: Real> {
    /// W(U*) / sum_U W(U) over all candidate sets of this decision.
    pub share: R,
    /// |U*| / sum_U |U|: the same share under uniform user weights.
    pub uniform_share: R,
}

/// One subband's assignment: the chosen set with its powers and rates.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandAssignment<R: Real> {
    pub users: Vec<usize>,
    pub powers_mw: Vec<R>,
    pub rates_bps: Vec<R>,
    /// Present for weighted kinds after the first slot.
    pub weight_share: Option<WeightShare<R>>,
}

/// Complete record of one scheduled slot, indexed by subband.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationResult<R: Real> {
    pub slot: usize,
    pub assignments: Vec<SubbandAssignment<R>>,
}

/// Schedules one slot subband by subband, updating `state.cur` and
/// `state.subbands_of` as it goes so later subbands see the running totals.
///
/// `candidates` must contain only singletons for OMA kinds; `order` is the
/// subband visit sequence (a permutation of 0..S).
pub fn allocate_slot<R: Real>(
    realization: &ChannelRealization<R>,
    state: &mut SchedulerState<R>,
    kind: SchedulerKind,
    geometry: &CellGeometry<R>,
    ftpa_alpha: R,
    candidates: &[Vec<usize>],
    order: &[usize],
) -> AllocationResult<R> {
    let num_subbands = realization.num_subbands();
    let num_users = state.num_users();
    debug_assert_eq!(order.len(), num_subbands);
    debug_assert!(!kind.is_oma() || candidates.iter().all(|c| c.len() == 1));

    let subband_hz = geometry.subband_hz();
    let p_subband = power::equal_subband_power(geometry);
    let noise = realization.noise_mw(0, 0);
    let first_slot = state.slot == 1 && kind.is_weighted();
    let eps = state.params.epsilon_rate;

    // Denominators over T_k are constant within the slot.
    let pf_den: Vec<R> = state.hist.iter().map(|&t| t.max(eps)).collect();
    let size_total: usize = candidates.iter().map(Vec::len).sum();

    let mut ftpa_w = vec![R::zero(); num_users];
    let mut weights = vec![R::zero(); num_users];
    let mut assignments: Vec<Option<SubbandAssignment<R>>> = vec![None; num_subbands];

    for &s in order {
        let gains = &realization.gain2[s];
        for k in 0..num_users {
            ftpa_w[k] = (gains[k] / noise).powf(-ftpa_alpha);
        }
        let use_weights = kind.is_weighted() && !first_slot;
        if use_weights {
            for k in 0..num_users {
                weights[k] = weight_user(k, state);
            }
        }

        let mut best_idx = 0usize;
        let mut best_score = R::neg_infinity();
        let mut best_powers = [R::zero(); MAX_PER_SUBBAND];
        let mut best_rates = [R::zero(); MAX_PER_SUBBAND];
        let mut best_wsum = R::zero();
        let mut wsum_total = R::zero();

        let mut powers = [R::zero(); MAX_PER_SUBBAND];
        let mut rates = [R::zero(); MAX_PER_SUBBAND];
        let mut gain2 = [R::zero(); MAX_PER_SUBBAND];

        for (idx, cand) in candidates.iter().enumerate() {
            let m = cand.len();
            // FTPA from the precomputed per-user powf values
            let mut fsum = R::zero();
            for (i, &k) in cand.iter().enumerate() {
                gain2[i] = gains[k];
                powers[i] = ftpa_w[k];
                fsum += ftpa_w[k];
            }
            for p in powers.iter_mut().take(m) {
                *p = *p / fsum * p_subband;
            }
            rate::user_rates_into(
                cand,
                &powers[..m],
                &gain2[..m],
                noise,
                subband_hz,
                &mut rates,
            );

            let wsum = if use_weights {
                let w = cand.iter().fold(R::zero(), |a, &k| a + weights[k]);
                wsum_total += w;
                w
            } else {
                R::zero()
            };

            let score = if first_slot {
                cand.iter()
                    .zip(&rates)
                    .fold(R::zero(), |a, (&k, &r)| a + r / state.cur[k].max(eps))
            } else {
                match kind {
                    SchedulerKind::PfNoma | SchedulerKind::PfOma => cand
                        .iter()
                        .zip(&rates)
                        .fold(R::zero(), |a, (&k, &r)| a + r / pf_den[k]),
                    SchedulerKind::Wnopf | SchedulerKind::Wopf => {
                        let pf = cand
                            .iter()
                            .zip(&rates)
                            .fold(R::zero(), |a, (&k, &r)| a + r / pf_den[k]);
                        pf * wsum
                    }
                    SchedulerKind::JWnopf => cand
                        .iter()
                        .zip(&rates)
                        .fold(R::zero(), |a, (&k, &r)| a + r / pf_den[k] * weights[k]),
                    SchedulerKind::PfModified => {
                        cand.iter().zip(&rates).fold(R::zero(), |a, (&k, &r)| {
                            a + r / (state.hist[k] + state.cur[k]).max(eps)
                        })
                    }
                }
            };

            let better = score > best_score
                || (score == best_score && cand.as_slice() < candidates[best_idx].as_slice());
            if better || idx == 0 {
                best_idx = idx;
                best_score = score;
                best_powers[..m].copy_from_slice(&powers[..m]);
                best_rates[..m].copy_from_slice(&rates[..m]);
                best_wsum = wsum;
            }
        }

        let chosen = &candidates[best_idx];
        let m = chosen.len();
        let weight_share = if use_weights && wsum_total > R::zero() {
            Some(WeightShare {
                share: best_wsum / wsum_total,
                uniform_share: R::of(m as f64) / R::of(size_total as f64),
            })
        } else {
            None
        };
        for (i, &k) in chosen.iter().enumerate() {
            state.cur[k] += best_rates[i];
            state.subbands_of[k].push(s);
        }
        assignments[s] = Some(SubbandAssignment {
            users: chosen.clone(),
            powers_mw: best_powers[..m].to_vec(),
            rates_bps: best_rates[..m].to_vec(),
            weight_share,
        });
    }

    AllocationResult {
        slot: state.slot,
        assignments: assignments.into_iter().map(Option::unwrap).collect(),
    }
}

/// End-of-slot bookkeeping: exponential update of the historical rates, the
/// cell-average rate for the next slot's weight targets, and a clean
/// current-slot ledger.
pub fn end_slot_update<R: Real>(state: &mut SchedulerState<R>) {
    let t_c = R::of(state.params.t_c as f64);
    let keep = R::one() - R::one() / t_c;
    for (t, &r) in state.hist.iter_mut().zip(&state.cur) {
        *t = keep * *t + r / t_c;
    }
    let k = R::of(state.num_users() as f64);
    state.r_avg_prev = state.cur.iter().fold(R::zero(), |a, &r| a + r) / k;
    for r in &mut state.cur {
        *r = R::zero();
    }
    for s in &mut state.subbands_of {
        s.clear();
    }
    state.slot += 1;
}

//! Monte-Carlo orchestration: seeded drops, the slot loop, metric logging
//! and cross-drop aggregation.
//!
//! Seeding contract: drop `d` of an experiment with base seed `s` derives
//! its child seeds by splitmix64-mixing `s` with `d`. The channel stream
//! depends only on `(s, d)`, never on the scheduler kind, so runs of two
//! kinds under one config are paired realization-for-realization.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    doppler_hz, place_users, ChannelRealization, FadingProcess, PowerDelayProfile, UserPlacement,
};
use crate::config::{ExperimentConfig, SubbandOrder};
use crate::metrics::{self, GroupStats, RatioReport, ScheduleAccumulator};
use crate::num::Real;
use crate::sched::{
    allocate_slot, end_slot_update, enumerate_candidates, AllocationResult, SchedulerKind,
    SchedulerState,
};
use crate::{Error, Result};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for one named stream of one drop.
fn child_seed(base_seed: u64, drop_index: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(drop_index)) ^ stream)
}

const STREAM_PLACEMENT: u64 = 1;
const STREAM_FADING: u64 = 2;
const STREAM_SUBBAND_ORDER: u64 = 3;

/// Metrics of one completed drop.
#[derive(Clone, Debug, Serialize)]
pub struct DropMetrics {
    pub drop_index: u64,
    /// Sum over users of window-averaged rates, bps.
    pub system_throughput_bps: f64,
    pub gini_long: f64,
    /// Short-term Gini of each slot's achieved rates.
    pub gini_short_per_slot: Vec<f64>,
    pub long_rates_bps: Vec<f64>,
    /// First slot with nonzero rate per user; `None` = never served.
    pub rate_latency_slots: Vec<Option<usize>>,
    /// Sum of log historical rates at window end.
    pub service_utility: f64,
    pub per_group: Option<Vec<GroupReport>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupReport {
    pub name: String,
    pub group_rate_bps: f64,
    pub gini: f64,
    pub success: bool,
}

impl GroupReport {
    fn from_stats<R: Real>(s: &GroupStats<R>) -> Self {
        GroupReport {
            name: s.name.clone(),
            group_rate_bps: s.group_rate_bps.as_f64(),
            gini: s.gini.as_f64(),
            success: s.success,
        }
    }
}

/// Everything retained from one drop of one scheduler kind.
pub struct DropOutcome {
    pub metrics: DropMetrics,
    pub accumulator: ScheduleAccumulator,
    pub channel_hash: u64,
    /// `slot_rates[t][k]`, bps.
    pub slot_rates: Vec<Vec<f64>>,
}

/// Aggregate report over the drops of one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    /// Mean over drops of the per-drop system throughput.
    pub system_throughput_bps: f64,
    /// Mean over drops of the long-term Gini.
    pub gini_long: f64,
    /// Per-slot mean over drops of the short-term Gini.
    pub gini_short_per_slot: Vec<f64>,
    /// Low-percentile user throughput over the pooled per-user rates.
    pub cell_edge_bps: f64,
    /// Mean over drops, per user index; never-served counts as slots+1.
    pub rate_latency_slots: Vec<f64>,
    /// Mean over drops of the service utility.
    pub service_utility: f64,
    pub per_group: Option<Vec<GroupAggregate>>,
    pub ratio1: Option<f64>,
    pub ratio2: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupAggregate {
    pub name: String,
    pub mean_group_rate_bps: f64,
    pub mean_gini: f64,
    pub success_drops: usize,
    pub gini_within_drops: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub scheduler: String,
    pub num_users: usize,
    pub num_subbands: usize,
    pub num_slots: usize,
    pub num_drops: usize,
    pub aggregate: MetricsReport,
    pub per_drop: Vec<DropMetrics>,
}

/// One experiment: the aggregate report plus per-drop raw material.
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub drops: Vec<DropOutcome>,
}

#[derive(Serialize)]
pub struct ComparisonReport {
    pub kind_a: String,
    pub kind_b: String,
    pub a: ExperimentReport,
    pub b: ExperimentReport,
    pub ratios: RatioReport,
}

fn hash_realizations<R: Real>(realizations: &[ChannelRealization<R>]) -> u64 {
    // FNV-1a over the bit patterns of the gains
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for rz in realizations {
        for row in &rz.gain2 {
            for &g in row {
                h ^= g.as_f64().to_bits();
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        }
    }
    h
}

/// Generates the placement and the full fading stream of one drop. Depends
/// only on (seed, drop_index) so scheduler kinds can be compared paired.
pub fn channel_for_drop<R: Real>(
    cfg: &ExperimentConfig,
    drop_index: u64,
) -> Result<(Vec<UserPlacement<R>>, Vec<ChannelRealization<R>>)> {
    let geometry = cfg.geometry::<R>();
    let mut placement_rng =
        ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, drop_index, STREAM_PLACEMENT));
    let placements = place_users(
        cfg.num_users,
        &geometry,
        R::of(cfg.min_distance_m),
        &mut placement_rng,
    )?;
    let mut fading = FadingProcess::new(
        child_seed(cfg.seed, drop_index, STREAM_FADING),
        cfg.num_users,
        &geometry,
        PowerDelayProfile::etu(),
        doppler_hz(cfg.velocity_kmh, cfg.carrier_hz),
        cfg.fading_model,
    );
    let realizations = (0..cfg.num_slots)
        .map(|_| fading.next_realization(&placements))
        .collect();
    Ok((placements, realizations))
}

/// Runs one scheduler kind over a pre-generated channel stream.
pub fn run_drop_on_channel<R: Real>(
    cfg: &ExperimentConfig,
    kind: SchedulerKind,
    drop_index: u64,
    realizations: &[ChannelRealization<R>],
) -> Result<DropOutcome> {
    let geometry = cfg.geometry::<R>();
    let max_per_subband = if kind.is_oma() {
        1
    } else {
        cfg.max_users_per_subband.min(cfg.num_users)
    };
    let candidates = enumerate_candidates(cfg.num_users, max_per_subband)?;
    let mut state = SchedulerState::new(
        cfg.num_users,
        cfg.scheduler_params::<R>(),
        cfg.service_targets::<R>()?,
    );
    let mut order_rng =
        ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, drop_index, STREAM_SUBBAND_ORDER));
    let mut order: Vec<usize> = (0..cfg.num_subbands).collect();
    let alpha = R::of(cfg.ftpa_alpha);

    let mut slot_rates: Vec<Vec<f64>> = Vec::with_capacity(cfg.num_slots);
    let mut accumulator = ScheduleAccumulator::new(cfg.num_users);
    let mut allocations: Vec<AllocationResult<R>> = Vec::with_capacity(cfg.num_slots);

    for rz in realizations {
        if cfg.subband_order == SubbandOrder::Random {
            order.shuffle(&mut order_rng);
        }
        let alloc = allocate_slot(rz, &mut state, kind, &geometry, alpha, &candidates, &order);
        // no subband left unassigned
        debug_assert_eq!(alloc.assignments.len(), cfg.num_subbands);
        slot_rates.push(state.cur.iter().map(|r| r.as_f64()).collect());
        accumulator.absorb(&alloc);
        allocations.push(alloc);
        end_slot_update(&mut state);
    }

    let long_rates = metrics::long_term_rates(&slot_rates, cfg.t_c);
    let eps = cfg.epsilon_rate;
    let classes = cfg.service_classes::<f64>()?;
    let per_group = if classes.is_empty() {
        None
    } else {
        Some(
            metrics::service_report(&long_rates, &classes)?
                .iter()
                .map(GroupReport::from_stats)
                .collect(),
        )
    };
    let hist: Vec<f64> = state.hist.iter().map(|t| t.as_f64()).collect();
    let metrics = DropMetrics {
        drop_index,
        system_throughput_bps: long_rates.iter().sum(),
        gini_long: metrics::gini(&long_rates)?,
        gini_short_per_slot: slot_rates
            .iter()
            .map(|r| metrics::gini(r).unwrap_or(f64::NAN))
            .collect(),
        long_rates_bps: long_rates,
        rate_latency_slots: metrics::rate_latency(&slot_rates),
        service_utility: metrics::service_utility(&hist, eps),
        per_group,
    };
    Ok(DropOutcome {
        metrics,
        accumulator,
        channel_hash: hash_realizations(realizations),
        slot_rates,
    })
}

/// Generates the channel for one drop and schedules it with one kind.
pub fn run_drop<R: Real>(
    cfg: &ExperimentConfig,
    kind: SchedulerKind,
    drop_index: u64,
) -> Result<DropOutcome> {
    let (_placements, realizations) = channel_for_drop::<R>(cfg, drop_index)?;
    run_drop_on_channel(cfg, kind, drop_index, &realizations)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Order-insensitive aggregation of per-drop outcomes.
fn aggregate(cfg: &ExperimentConfig, drops: &[DropOutcome]) -> MetricsReport {
    let num_drops = drops.len();
    let pooled: Vec<f64> = drops
        .iter()
        .flat_map(|d| d.metrics.long_rates_bps.iter().copied())
        .collect();
    let gini_short_per_slot = (0..cfg.num_slots)
        .map(|t| mean(drops.iter().map(|d| d.metrics.gini_short_per_slot[t])))
        .collect();
    let rate_latency_slots = (0..cfg.num_users)
        .map(|k| {
            mean(
                drops
                    .iter()
                    .map(|d| d.metrics.rate_latency_slots[k].unwrap_or(cfg.num_slots + 1) as f64),
            )
        })
        .collect();
    let per_group = drops[0].metrics.per_group.as_ref().map(|groups| {
        groups
            .iter()
            .enumerate()
            .map(|(g, group)| GroupAggregate {
                name: group.name.clone(),
                mean_group_rate_bps: mean(
                    drops
                        .iter()
                        .map(|d| d.metrics.per_group.as_ref().unwrap()[g].group_rate_bps),
                ),
                mean_gini: mean(
                    drops
                        .iter()
                        .map(|d| d.metrics.per_group.as_ref().unwrap()[g].gini),
                ),
                success_drops: drops
                    .iter()
                    .filter(|d| d.metrics.per_group.as_ref().unwrap()[g].success)
                    .count(),
                gini_within_drops: drops
                    .iter()
                    .filter(|d| d.metrics.per_group.as_ref().unwrap()[g].gini <= 0.1)
                    .count(),
            })
            .collect()
    });
    let _ = num_drops;
    MetricsReport {
        system_throughput_bps: mean(drops.iter().map(|d| d.metrics.system_throughput_bps)),
        gini_long: mean(drops.iter().map(|d| d.metrics.gini_long)),
        gini_short_per_slot,
        cell_edge_bps: metrics::cell_edge(&pooled, cfg.cell_edge_percentile)
            .expect("pooled rates nonempty"),
        rate_latency_slots,
        service_utility: mean(drops.iter().map(|d| d.metrics.service_utility)),
        per_group,
        ratio1: None,
        ratio2: None,
    }
}

fn report_for(
    cfg: &ExperimentConfig,
    kind: SchedulerKind,
    drops: Vec<DropOutcome>,
) -> ExperimentRun {
    let aggregate = aggregate(cfg, &drops);
    ExperimentRun {
        report: ExperimentReport {
            scheduler: kind.name().into(),
            num_users: cfg.num_users,
            num_subbands: cfg.num_subbands,
            num_slots: cfg.num_slots,
            num_drops: cfg.num_drops,
            aggregate,
            per_drop: drops.iter().map(|d| d.metrics.clone()).collect(),
        },
        drops,
    }
}

/// Runs `num_drops` independent drops of one scheduler kind and aggregates.
pub fn run_experiment<R: Real>(
    cfg: &ExperimentConfig,
    kind: SchedulerKind,
) -> Result<ExperimentRun> {
    cfg.validate()?;
    let drops: Vec<DropOutcome> = (0..cfg.num_drops as u64)
        .into_par_iter()
        .map(|d| {
            run_drop::<R>(cfg, kind, d).map_err(|e| Error::Drop {
                drop_index: d,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(report_for(cfg, kind, drops))
}

/// Runs two kinds over identical placements and fading per drop and emits
/// both reports plus the empirical Proposition-1 ratios.
pub fn run_comparison<R: Real>(
    cfg: &ExperimentConfig,
    kind_a: SchedulerKind,
    kind_b: SchedulerKind,
) -> Result<(ComparisonReport, ExperimentRun, ExperimentRun)> {
    cfg.validate()?;
    let pairs: Vec<(DropOutcome, DropOutcome)> = (0..cfg.num_drops as u64)
        .into_par_iter()
        .map(|d| -> Result<_> {
            let (_placements, realizations) = channel_for_drop::<R>(cfg, d)?;
            let a = run_drop_on_channel(cfg, kind_a, d, &realizations)?;
            let b = run_drop_on_channel(cfg, kind_b, d, &realizations)?;
            // both sides consumed the same channel stream
            assert_eq!(a.channel_hash, b.channel_hash);
            Ok((a, b))
        })
        .collect::<Result<_>>()?;

    let (drops_a, drops_b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let mut acc_a = ScheduleAccumulator::new(cfg.num_users);
    let mut acc_b = ScheduleAccumulator::new(cfg.num_users);
    for d in &drops_a {
        acc_a.merge(&d.accumulator);
    }
    for d in &drops_b {
        acc_b.merge(&d.accumulator);
    }
    let ratios = metrics::proposition_ratios(&acc_a, &acc_b)?;

    let run_a = report_for(cfg, kind_a, drops_a);
    let run_b = report_for(cfg, kind_b, drops_b);
    let mut a_report = run_a.report.clone();
    let mut b_report = run_b.report.clone();
    a_report.aggregate.ratio1 = Some(ratios.ratio1);
    a_report.aggregate.ratio2 = Some(ratios.ratio2);
    b_report.aggregate.ratio1 = Some(ratios.ratio1);
    b_report.aggregate.ratio2 = Some(ratios.ratio2);
    let comparison = ComparisonReport {
        kind_a: kind_a.name().into(),
        kind_b: kind_b.name().into(),
        a: a_report,
        b: b_report,
        ratios,
    };
    Ok((comparison, run_a, run_b))
}

//! Desk-scale acceptance checks: exact small oracles plus directional
//! reproductions at S = 128, 100 slots, 20 drops. Experiments are cached and
//! shared between criteria since they all draw from the same seed ladder.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use noma_sim::config::{ExperimentConfig, ServiceSpec};
use noma_sim::engine::{run_comparison, run_experiment, ComparisonReport, ExperimentRun};
use noma_sim::metrics;
use noma_sim::SchedulerKind::{self, *};

fn base_config(k: usize) -> ExperimentConfig {
    ExperimentConfig {
        num_users: k,
        ..Default::default()
    }
}

fn premium_config(targets: [f64; 3]) -> ExperimentConfig {
    let services = vec![
        ServiceSpec {
            name: "basic".into(),
            target_rate_bps: targets[0],
            users: (0..5).collect(),
        },
        ServiceSpec {
            name: "silver".into(),
            target_rate_bps: targets[1],
            users: (5..10).collect(),
        },
        ServiceSpec {
            name: "gold".into(),
            target_rate_bps: targets[2],
            users: (10..15).collect(),
        },
    ];
    ExperimentConfig {
        services,
        ..base_config(15)
    }
}

type ExpKey = (SchedulerKind, usize, Option<[u64; 3]>);

fn experiment(kind: SchedulerKind, k: usize, targets: Option<[f64; 3]>) -> Arc<ExperimentRun> {
    static CACHE: OnceLock<Mutex<HashMap<ExpKey, Arc<ExperimentRun>>>> = OnceLock::new();
    let key = (kind, k, targets.map(|t| t.map(|v| v as u64)));
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let cfg = match targets {
        Some(t) => premium_config(t),
        None => base_config(k),
    };
    let run = Arc::new(run_experiment::<f64>(&cfg, kind).unwrap());
    cache.lock().unwrap().insert(key, run.clone());
    run
}

fn comparison(a: SchedulerKind, b: SchedulerKind, k: usize) -> Arc<ComparisonReport> {
    static CACHE: OnceLock<
        Mutex<HashMap<(SchedulerKind, SchedulerKind, usize), Arc<ComparisonReport>>>,
    > = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(a, b, k)) {
        return hit.clone();
    }
    let (cmp, _, _) = run_comparison::<f64>(&base_config(k), a, b).unwrap();
    let cmp = Arc::new(cmp);
    cache.lock().unwrap().insert((a, b, k), cmp.clone());
    cmp
}

/// Standard error of the mean of paired per-drop differences.
fn paired_se(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

fn per_drop_throughput(kind: SchedulerKind, k: usize) -> Vec<f64> {
    experiment(kind, k, None)
        .report
        .per_drop
        .iter()
        .map(|d| d.system_throughput_bps)
        .collect()
}

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_01_gini_oracle() {
    use rand::Rng;
    use rand::SeedableRng;
    // independent oracle over sorted values:
    // G = 2 sum(i x_(i)) / (n sum x) - (n+1)/n
    fn gini_oracle(x: &[f64]) -> f64 {
        let mut v = x.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len() as f64;
        let s: f64 = v.iter().sum();
        let w: f64 = v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
        2.0 * w / (n * s) - (n + 1.0) / n
    }
    let mut ok = (metrics::gini(&[1.0f64, 0.0]).unwrap() - 0.5).abs() < 1e-15;
    ok &= (metrics::gini(&[1.0f64, 1.0, 1.0, 0.0]).unwrap() - 0.25).abs() < 1e-15;
    ok &= metrics::gini(&[3.0f64; 7]).unwrap() == 0.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let n = rng.random_range(2..40);
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 + 1e-6).collect();
        let g = metrics::gini(&v).unwrap();
        ok &= (g - gini_oracle(&v)).abs() < 1e-12;
        // scale invariance
        let s: Vec<f64> = v.iter().map(|x| x * 137.0).collect();
        ok &= (metrics::gini(&s).unwrap() - g).abs() < 1e-12;
        // permutation invariance
        let mut p = v.clone();
        p.reverse();
        p.swap(0, n / 2);
        ok &= (metrics::gini(&p).unwrap() - g).abs() < 1e-12;
    }
    report(1, ok, "Gini hand values and invariances at 1e-12");
    assert!(ok);
}

#[test]
fn criterion_02_rate_oracle() {
    use rand::Rng;
    use rand::SeedableRng;
    let bw = 78125.0f64;
    let noise = 3.125e-10;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let mut ok = true;
    for _ in 0..100 {
        let gain2 = [
            10f64.powf(rng.random::<f64>() * 4.0 - 13.0),
            10f64.powf(rng.random::<f64>() * 4.0 - 13.0),
        ];
        let powers = [
            rng.random::<f64>() * 300.0 + 1.0,
            rng.random::<f64>() * 300.0 + 1.0,
        ];
        let got = noma_sim::rate::user_rates(&[0, 1], &powers, &gain2, noise, bw);
        // scalar oracle, coded independently
        let strong = if gain2[0] > gain2[1] { 0 } else { 1 };
        let weak = 1 - strong;
        let want_strong = bw * (1.0 + gain2[strong] * powers[strong] / noise).log2();
        let want_weak =
            bw * (1.0 + gain2[weak] * powers[weak] / (gain2[weak] * powers[strong] + noise)).log2();
        ok &= ((got[strong] - want_strong) / want_strong).abs() < 1e-12;
        ok &= ((got[weak] - want_weak) / want_weak).abs() < 1e-12;
        // higher-gain user sees zero interference: matches the
        // interference-free expression exactly
        ok &= got[strong] == want_strong;
    }
    report(
        2,
        ok,
        "two-user SIC rates match scalar oracle at 1e-12 relative",
    );
    assert!(ok);
}

#[test]
fn criterion_03_candidate_count() {
    fn binomial(n: usize, m: usize) -> usize {
        (0..m).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    let mut ok = noma_sim::sched::enumerate_candidates(15, 2).unwrap().len() == 120;
    for k in 1..=20 {
        for n_s in 1..=3.min(k) {
            let expect: usize = (1..=n_s).map(|m| binomial(k, m)).sum();
            ok &= noma_sim::sched::enumerate_candidates(k, n_s).unwrap().len() == expect;
        }
    }
    report(
        3,
        ok,
        "candidate set counts match sum of binomials up to K=20",
    );
    assert!(ok);
}

#[test]
fn criterion_04_throughput_ordering() {
    let mut ok = true;
    let mut details = Vec::new();
    for (a, b) in [
        (Wnopf, PfNoma),
        (Wopf, PfOma),
        (Wnopf, Wopf),
        (JWnopf, Wopf),
    ] {
        let (ta, tb) = (per_drop_throughput(a, 15), per_drop_throughput(b, 15));
        let d: Vec<f64> = ta.iter().zip(&tb).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let se = paired_se(&d);
        let this = mean > se;
        ok &= this;
        details.push(format!(
            "{} - {} = {:+.2} Mbps (SE {:.2})",
            a.name(),
            b.name(),
            mean / 1e6,
            se / 1e6
        ));
    }
    report(4, ok, &details.join(", "));
    assert!(
        ok,
        "throughput orderings by > 1 paired SE: {}",
        details.join(", ")
    );
}

#[test]
fn criterion_05_multi_user_diversity() {
    let ks = [5usize, 10, 15, 20];
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for kind in SchedulerKind::ALL {
        let thr: Vec<Vec<f64>> = ks.iter().map(|&k| per_drop_throughput(kind, k)).collect();
        for w in thr.windows(2) {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(x, y)| x - y).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let se = paired_se(&d);
            let slack = mean + se;
            worst = worst.min(slack / 1e6);
            ok &= slack >= 0.0;
        }
    }
    report(
        5,
        ok,
        &format!("throughput non-decreasing in K within 1 SE, worst slack {worst:.2} Mbps"),
    );
    assert!(ok);
}

#[test]
fn criterion_06_long_term_fairness() {
    let gini_series = |kind: SchedulerKind| -> Vec<f64> {
        experiment(kind, 15, None)
            .report
            .per_drop
            .iter()
            .map(|d| d.gini_long)
            .collect()
    };
    let mut ok = true;
    let mut details = Vec::new();
    for (a, b) in [(Wnopf, PfNoma), (Wopf, PfOma)] {
        let (ga, gb) = (gini_series(a), gini_series(b));
        let d: Vec<f64> = gb.iter().zip(&ga).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let se = paired_se(&d);
        ok &= mean > se;
        details.push(format!(
            "{} below {} by {:.4} (SE {:.4})",
            a.name(),
            b.name(),
            mean,
            se
        ));
    }
    report(6, ok, &details.join(", "));
    assert!(ok, "{}", details.join(", "));
}

#[test]
fn criterion_07_short_term_convergence() {
    let wnopf = experiment(Wnopf, 15, None);
    let pf = experiment(PfNoma, 15, None);
    let slot5 = wnopf.report.aggregate.gini_short_per_slot[4];
    let long = wnopf.report.aggregate.gini_long;
    let slot1_w = wnopf.report.aggregate.gini_short_per_slot[0];
    let slot1_p = pf.report.aggregate.gini_short_per_slot[0];
    let ok = slot5 <= 0.05 && long <= 0.01 && slot1_p > slot1_w;
    report(
        7,
        ok,
        &format!(
            "WNOPF slot-5 Gini {slot5:.4} (<=0.05), long-term {long:.4} (<=0.01), \
             slot-1 {slot1_w:.4} vs PF {slot1_p:.4}"
        ),
    );
    assert!(
        ok,
        "slot5 {slot5}, long {long}, slot1 {slot1_w} vs {slot1_p}"
    );
}

#[test]
fn criterion_08_zero_rate_elimination() {
    let wnopf = experiment(Wnopf, 15, None);
    let all_first_slot = wnopf
        .report
        .per_drop
        .iter()
        .all(|d| d.rate_latency_slots.iter().all(|l| *l == Some(1)));
    let pf = experiment(PfNoma, 15, None);
    let pf_late = pf.report.per_drop.iter().any(|d| {
        d.rate_latency_slots
            .iter()
            .any(|l| l.map_or(true, |x| x > 1))
    });
    let ok = all_first_slot && pf_late;
    report(
        8,
        ok,
        &format!(
            "WNOPF all users served in slot 1: {all_first_slot}, PF late user exists: {pf_late}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_proposition_ratios() {
    let mut ok = true;
    let mut details = Vec::new();
    for k in [6usize, 10, 14] {
        for (a, b) in [(Wnopf, PfNoma), (Wopf, PfOma)] {
            let cmp = comparison(a, b, k);
            let (r1, r2) = (cmp.ratios.ratio1, cmp.ratios.ratio2);
            ok &= (0.9..=1.1).contains(&r1) && r2 >= 1.0;
            details.push(format!(
                "K={k} {}/{}: r1={r1:.3} r2={r2:.3}",
                a.name(),
                b.name()
            ));
        }
    }
    report(9, ok, &details.join(", "));
    assert!(ok, "{}", details.join(", "));
}

#[test]
fn criterion_10_premium_services() {
    // reference in-group Gini levels from the source evaluation: basic
    // 0.0491, silver 0.0724, gold 0.0042 (not asserted)
    let s1 = experiment(JWnopf, 15, Some([5e6, 10e6, 15e6]));
    let s2 = experiment(JWnopf, 15, Some([10e6, 20e6, 30e6]));
    let mut ok = true;
    let mut details = Vec::new();
    for g in s1.report.aggregate.per_group.as_ref().unwrap() {
        ok &= g.success_drops == 20 && g.gini_within_drops >= 18;
        details.push(format!(
            "s1 {} {:.1} Mbps success {}/20 gini<=0.1 {}/20",
            g.name,
            g.mean_group_rate_bps / 1e6,
            g.success_drops,
            g.gini_within_drops
        ));
    }
    for g in s2.report.aggregate.per_group.as_ref().unwrap() {
        ok &= g.gini_within_drops >= 18;
        details.push(format!(
            "s2 {} {:.1} Mbps gini<=0.1 {}/20",
            g.name,
            g.mean_group_rate_bps / 1e6,
            g.gini_within_drops
        ));
    }
    report(10, ok, &details.join(", "));
    assert!(ok, "{}", details.join(", "));
}

#[test]
fn criterion_11_service_utility() {
    let util = |kind: SchedulerKind| -> Vec<f64> {
        experiment(kind, 15, None)
            .report
            .per_drop
            .iter()
            .map(|d| d.service_utility)
            .collect()
    };
    let (uw, up) = (util(Wnopf), util(PfNoma));
    let wins = uw.iter().zip(&up).filter(|(a, b)| a > b).count();
    let ok = wins >= 16;
    report(
        11,
        ok,
        &format!("WNOPF utility above PF_NOMA in {wins}/20 paired drops"),
    );
    assert!(ok, "wins {wins}/20");
}

#[test]
fn criterion_12_determinism() {
    let cfg = ExperimentConfig {
        num_users: 6,
        num_subbands: 32,
        num_slots: 20,
        num_drops: 3,
        ..Default::default()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let r1 = run_experiment::<f64>(&cfg, Wnopf).unwrap();
    let r2 = run_experiment::<f64>(&cfg, Wnopf).unwrap();
    noma_sim::output::write_run(d1.path(), "det", &r1).unwrap();
    noma_sim::output::write_run(d2.path(), "det", &r2).unwrap();
    let mut ok = true;
    for name in [
        "metrics.csv",
        "summary.json",
        "user_rates.csv",
        "rate_series.csv",
    ] {
        ok &= std::fs::read(d1.path().join(name)).unwrap()
            == std::fs::read(d2.path().join(name)).unwrap();
    }
    report(12, ok, "re-run artifacts byte-identical (CSV and JSON)");
    assert!(ok);
}

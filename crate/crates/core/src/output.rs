//! On-disk artifacts: a long-format CSV of scalar metrics, a JSON summary,
//! and a per-user rate matrix. All floats are written with 17 significant
//! digits so re-runs can be compared byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::engine::{ComparisonReport, ExperimentReport, ExperimentRun};
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.17e}")
    }
}

/// One row of the long-format metrics CSV.
pub struct MetricRow<'a> {
    pub experiment: &'a str,
    pub scheduler: &'a str,
    pub metric: String,
    pub value: f64,
    pub unit: &'a str,
}

fn write_rows(path: &Path, experiment: &str, reports: &[&ExperimentReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "experiment",
        "scheduler",
        "num_users",
        "num_subbands",
        "num_drops",
        "metric",
        "value",
        "unit",
    ])
    .map_err(|e| crate::Error::Parse(e.to_string()))?;
    for report in reports {
        let mut rows: Vec<MetricRow> = vec![
            MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "system_throughput".into(),
                value: report.aggregate.system_throughput_bps,
                unit: "bps",
            },
            MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "gini_long".into(),
                value: report.aggregate.gini_long,
                unit: "1",
            },
            MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "cell_edge".into(),
                value: report.aggregate.cell_edge_bps,
                unit: "bps",
            },
            MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "service_utility".into(),
                value: report.aggregate.service_utility,
                unit: "1",
            },
        ];
        if let Some(groups) = &report.aggregate.per_group {
            for g in groups {
                rows.push(MetricRow {
                    experiment,
                    scheduler: &report.scheduler,
                    metric: format!("group_rate[{}]", g.name),
                    value: g.mean_group_rate_bps,
                    unit: "bps",
                });
                rows.push(MetricRow {
                    experiment,
                    scheduler: &report.scheduler,
                    metric: format!("group_gini[{}]", g.name),
                    value: g.mean_gini,
                    unit: "1",
                });
            }
        }
        if let Some(r1) = report.aggregate.ratio1 {
            rows.push(MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "ratio1".into(),
                value: r1,
                unit: "1",
            });
        }
        if let Some(r2) = report.aggregate.ratio2 {
            rows.push(MetricRow {
                experiment,
                scheduler: &report.scheduler,
                metric: "ratio2".into(),
                value: r2,
                unit: "1",
            });
        }
        for row in rows {
            w.write_record([
                row.experiment,
                row.scheduler,
                &report.num_users.to_string(),
                &report.num_subbands.to_string(),
                &report.num_drops.to_string(),
                &row.metric,
                &fmt_float(row.value),
                row.unit,
            ])
            .map_err(|e| crate::Error::Parse(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema_version: u32,
        #[serde(flatten)]
        payload: &'a T,
    }
    let body = serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        payload,
    })
    .map_err(|e| crate::Error::Parse(e.to_string()))?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(body.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Per-drop long-term user rates, one row per (drop, user).
fn write_user_rates(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "scheduler",
        "drop",
        "user",
        "long_rate_bps",
        "latency_slots",
    ])
    .map_err(|e| crate::Error::Parse(e.to_string()))?;
    for d in &report.per_drop {
        for (k, &r) in d.long_rates_bps.iter().enumerate() {
            let latency = d.rate_latency_slots[k]
                .map(|l| l.to_string())
                .unwrap_or_else(|| "never".into());
            w.write_record([
                report.scheduler.as_str(),
                &d.drop_index.to_string(),
                &k.to_string(),
                &fmt_float(r),
                &latency,
            ])
            .map_err(|e| crate::Error::Parse(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-slot user rates, `num_slots` rows per (drop, user). This is the series
/// behind the latency plots, so the instantaneous rate of every slot is kept.
fn write_rate_series(path: &Path, run: &ExperimentRun) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["scheduler", "drop", "slot", "user", "rate_bps"])
        .map_err(|e| crate::Error::Parse(e.to_string()))?;
    let scheduler = run.report.scheduler.as_str();
    for outcome in &run.drops {
        for (t, rates) in outcome.slot_rates.iter().enumerate() {
            for (k, &r) in rates.iter().enumerate() {
                w.write_record([
                    scheduler,
                    &outcome.metrics.drop_index.to_string(),
                    &t.to_string(),
                    &k.to_string(),
                    &fmt_float(r),
                ])
                .map_err(|e| crate::Error::Parse(e.to_string()))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the artifacts of a single `run` invocation into `out`.
pub fn write_run(out: &Path, experiment: &str, run: &ExperimentRun) -> Result<()> {
    fs::create_dir_all(out)?;
    write_rows(&out.join("metrics.csv"), experiment, &[&run.report])?;
    write_json(&out.join("summary.json"), &run.report)?;
    write_user_rates(&out.join("user_rates.csv"), &run.report)?;
    write_rate_series(&out.join("rate_series.csv"), run)?;
    Ok(())
}

/// Writes one sweep point into `out/<label>/` and appends nothing global;
/// the caller collects all points into a combined CSV.
pub fn write_sweep(out: &Path, experiment: &str, points: &[(String, ExperimentRun)]) -> Result<()> {
    fs::create_dir_all(out)?;
    for (label, run) in points {
        let dir = out.join(label);
        fs::create_dir_all(&dir)?;
        write_run(&dir, &format!("{experiment}/{label}"), run)?;
    }
    let refs: Vec<&ExperimentReport> = points.iter().map(|(_, r)| &r.report).collect();
    write_rows(&out.join("metrics.csv"), experiment, &refs)?;
    Ok(())
}

/// Writes the artifacts of a `compare` invocation.
pub fn write_comparison(
    out: &Path,
    experiment: &str,
    cmp: &ComparisonReport,
    run_a: &ExperimentRun,
    run_b: &ExperimentRun,
) -> Result<()> {
    fs::create_dir_all(out)?;
    write_rows(&out.join("metrics.csv"), experiment, &[&cmp.a, &cmp.b])?;
    write_json(&out.join("summary.json"), cmp)?;
    write_user_rates(&out.join(format!("user_rates_{}.csv", cmp.kind_a)), &cmp.a)?;
    write_user_rates(&out.join(format!("user_rates_{}.csv", cmp.kind_b)), &cmp.b)?;
    write_rate_series(&out.join(format!("rate_series_{}.csv", cmp.kind_a)), run_a)?;
    write_rate_series(&out.join(format!("rate_series_{}.csv", cmp.kind_b)), run_b)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::engine::run_experiment;
    use crate::sched::SchedulerKind;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_users: 3,
            num_subbands: 8,
            num_slots: 4,
            num_drops: 2,
            ..Default::default()
        }
    }

    #[test]
    fn run_artifacts_exist_and_reproduce() {
        let cfg = tiny();
        let dir = tempfile::tempdir().unwrap();
        let run = run_experiment::<f64>(&cfg, SchedulerKind::PfNoma).unwrap();
        write_run(dir.path(), "t", &run).unwrap();
        let csv1 = fs::read(dir.path().join("metrics.csv")).unwrap();
        let json1 = fs::read(dir.path().join("summary.json")).unwrap();
        assert!(!csv1.is_empty());
        assert!(String::from_utf8_lossy(&json1).contains("\"schema_version\": 1"));

        // one row per (drop, slot, user), plus the header
        let series = fs::read_to_string(dir.path().join("rate_series.csv")).unwrap();
        let expected = cfg.num_drops as usize * cfg.num_slots * cfg.num_users;
        assert_eq!(series.lines().count(), 1 + expected);

        // byte-identical on re-run
        let run2 = run_experiment::<f64>(&cfg, SchedulerKind::PfNoma).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_run(dir2.path(), "t", &run2).unwrap();
        assert_eq!(csv1, fs::read(dir2.path().join("metrics.csv")).unwrap());
        assert_eq!(json1, fs::read(dir2.path().join("summary.json")).unwrap());
        assert_eq!(
            series,
            fs::read_to_string(dir2.path().join("rate_series.csv")).unwrap()
        );
    }

    #[test]
    fn float_formatting_is_lossless() {
        let v = 12345.678901234567_f64;
        let s = fmt_float(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}

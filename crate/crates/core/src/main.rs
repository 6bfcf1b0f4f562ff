use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use noma_sim::config::{parse_config, ExperimentConfig};
use noma_sim::engine::{run_comparison, run_experiment};
use noma_sim::{output, Error, SchedulerKind};

/// Single-cell downlink NOMA/OMA scheduling simulator.
#[derive(Parser)]
#[command(name = "noma-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics.
    Run {
        /// TOML experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment per value of a swept parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to sweep: K (users), S (subbands) or scheduler.
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run two scheduler kinds over identical channels and compare.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// First scheduler kind.
        #[arg(long)]
        a: String,
        /// Second scheduler kind.
        #[arg(long)]
        b: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn apply_axis(cfg: &ExperimentConfig, axis: &str, value: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = cfg.clone();
    match axis {
        "K" => {
            cfg.num_users = value.parse().map_err(|_| Error::Config {
                key: "num_users".into(),
                msg: format!("invalid sweep value `{value}`"),
            })?;
        }
        "S" => {
            cfg.num_subbands = value.parse().map_err(|_| Error::Config {
                key: "num_subbands".into(),
                msg: format!("invalid sweep value `{value}`"),
            })?;
        }
        "scheduler" => {
            cfg.scheduler = SchedulerKind::from_str(value)?;
        }
        other => {
            return Err(Error::Config {
                key: "axis".into(),
                msg: format!("unknown sweep axis `{other}`; expected K, S or scheduler"),
            })
        }
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            let run = run_experiment::<f64>(&cfg, cfg.scheduler)?;
            output::write_run(&out, "run", &run)?;
            let a = &run.report.aggregate;
            println!(
                "{}: throughput {:.3} Mbps, Gini {:.4}, cell-edge {:.3} Mbps",
                run.report.scheduler,
                a.system_throughput_bps / 1e6,
                a.gini_long,
                a.cell_edge_bps / 1e6,
            );
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            if values.is_empty() {
                return Err(Error::Config {
                    key: "values".into(),
                    msg: "sweep needs at least one value".into(),
                });
            }
            let base = parse_config(&config)?;
            let mut points = Vec::with_capacity(values.len());
            for value in &values {
                let cfg = apply_axis(&base, &axis, value)?;
                let run = run_experiment::<f64>(&cfg, cfg.scheduler)?;
                println!(
                    "{axis}={value}: {} throughput {:.3} Mbps, Gini {:.4}",
                    run.report.scheduler,
                    run.report.aggregate.system_throughput_bps / 1e6,
                    run.report.aggregate.gini_long,
                );
                points.push((format!("{axis}={value}"), run));
            }
            output::write_sweep(&out, "sweep", &points)?;
        }
        Command::Compare { config, a, b, out } => {
            let cfg = parse_config(&config)?;
            let kind_a = SchedulerKind::from_str(&a)?;
            let kind_b = SchedulerKind::from_str(&b)?;
            let (cmp, run_a, run_b) = run_comparison::<f64>(&cfg, kind_a, kind_b)?;
            output::write_comparison(&out, "compare", &cmp, &run_a, &run_b)?;
            for side in [&cmp.a, &cmp.b] {
                println!(
                    "{}: throughput {:.3} Mbps, Gini {:.4}, cell-edge {:.3} Mbps",
                    side.scheduler,
                    side.aggregate.system_throughput_bps / 1e6,
                    side.aggregate.gini_long,
                    side.aggregate.cell_edge_bps / 1e6,
                );
            }
            println!(
                "ratio1 {:.6}, ratio2 {:.6}",
                cmp.ratios.ratio1, cmp.ratios.ratio2
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config { .. } | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

//! Declarative experiment configuration: file format, defaults, validation.
//!
//! The file format is TOML with the exact keys documented on
//! [`ExperimentConfig`]. Every key is optional; omitted keys take the LTE
//! evaluation defaults (46 dBm, 10 MHz / 128 subbands, 500 m cell, t_c=100,
//! b=1.5). All dB(m) to linear conversions happen once here; everything
//! downstream works in mW, Hz and bps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{CellGeometry, FadingModel};
use crate::num::Real;
use crate::sched::{SchedulerKind, SchedulerParams, ServiceClass};
use crate::{Error, Result};

/// Subband visit order within a slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubbandOrder {
    Ascending,
    /// Fresh permutation per slot, drawn from the drop's RNG stream.
    Random,
}

/// One service level in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub name: String,
    pub target_rate_bps: f64,
    pub users: Vec<usize>,
}

/// Full declarative description of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    // cell / channel
    pub bandwidth_hz: f64,
    pub num_subbands: usize,
    pub pmax_dbm: f64,
    pub noise_psd_mw_per_hz: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub carrier_hz: f64,
    pub velocity_kmh: f64,
    pub fading_model: FadingModel,
    // scheduling
    pub num_users: usize,
    pub max_users_per_subband: usize,
    pub scheduler: SchedulerKind,
    pub t_c: usize,
    pub b_factor: f64,
    pub ftpa_alpha: f64,
    pub epsilon_rate: f64,
    pub weight_floor: f64,
    pub clamp_weights: bool,
    pub subband_order: SubbandOrder,
    // experiment
    pub num_slots: usize,
    pub num_drops: usize,
    pub seed: u64,
    pub cell_edge_percentile: f64,
    pub services: Vec<ServiceSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            bandwidth_hz: 10e6,
            num_subbands: 128,
            pmax_dbm: 46.0,
            noise_psd_mw_per_hz: 4e-18,
            cell_radius_m: 500.0,
            min_distance_m: 35.0,
            carrier_hz: 2e9,
            velocity_kmh: 50.0,
            fading_model: FadingModel::Ar1,
            num_users: 15,
            max_users_per_subband: 2,
            scheduler: SchedulerKind::PfNoma,
            t_c: 100,
            b_factor: 1.5,
            ftpa_alpha: 0.4,
            epsilon_rate: 1e-3,
            weight_floor: 0.0,
            clamp_weights: true,
            subband_order: SubbandOrder::Ascending,
            num_slots: 100,
            num_drops: 20,
            seed: 1,
            cell_edge_percentile: 5.0,
            services: Vec::new(),
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(config_err("num_users", "must be >= 1"));
        }
        if self.num_subbands == 0 {
            return Err(config_err("num_subbands", "must be >= 1"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(config_err("bandwidth_hz", "must be positive"));
        }
        if !(self.noise_psd_mw_per_hz > 0.0) {
            return Err(config_err("noise_psd_mw_per_hz", "must be positive"));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(config_err("cell_radius_m", "must be positive"));
        }
        if !(self.min_distance_m > 0.0 && self.min_distance_m < self.cell_radius_m) {
            return Err(config_err(
                "min_distance_m",
                "must be positive and smaller than cell_radius_m",
            ));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(config_err("carrier_hz", "must be positive"));
        }
        if self.velocity_kmh < 0.0 {
            return Err(config_err("velocity_kmh", "must be >= 0"));
        }
        if self.max_users_per_subband == 0 || self.max_users_per_subband > 3 {
            return Err(config_err("max_users_per_subband", "must be in 1..=3"));
        }
        if self.max_users_per_subband > self.num_users {
            return Err(config_err(
                "max_users_per_subband",
                "cannot exceed num_users",
            ));
        }
        if self.t_c == 0 {
            return Err(config_err("t_c", "must be >= 1"));
        }
        if !(self.b_factor > 0.0) {
            return Err(config_err("b_factor", "must be positive"));
        }
        if self.ftpa_alpha < 0.0 {
            return Err(config_err("ftpa_alpha", "must be >= 0"));
        }
        if !(self.epsilon_rate > 0.0) {
            return Err(config_err("epsilon_rate", "must be positive"));
        }
        if self.num_slots == 0 {
            return Err(config_err("num_slots", "must be >= 1"));
        }
        if self.num_drops == 0 {
            return Err(config_err("num_drops", "must be >= 1"));
        }
        if !(0.0 < self.cell_edge_percentile && self.cell_edge_percentile < 100.0) {
            return Err(config_err(
                "cell_edge_percentile",
                "must lie strictly between 0 and 100",
            ));
        }
        // resolving service targets performs the membership checks
        self.service_classes::<f64>().map(|_| ())
    }

    pub fn geometry<R: Real>(&self) -> CellGeometry<R> {
        CellGeometry {
            radius_m: R::of(self.cell_radius_m),
            bs_power_dbm: R::of(self.pmax_dbm),
            bandwidth_hz: R::of(self.bandwidth_hz),
            num_subbands: self.num_subbands,
            noise_psd_mw_per_hz: R::of(self.noise_psd_mw_per_hz),
            carrier_hz: R::of(self.carrier_hz),
        }
    }

    pub fn scheduler_params<R: Real>(&self) -> SchedulerParams<R> {
        SchedulerParams {
            t_c: self.t_c,
            b: R::of(self.b_factor),
            epsilon_rate: R::of(self.epsilon_rate),
            weight_floor: R::of(self.weight_floor),
            clamp_weights: self.clamp_weights,
        }
    }

    pub fn service_classes<R: Real>(&self) -> Result<Vec<ServiceClass<R>>> {
        let classes: Vec<ServiceClass<R>> = self
            .services
            .iter()
            .map(|s| ServiceClass {
                name: s.name.clone(),
                target_rate_bps: R::of(s.target_rate_bps),
                members: s.users.clone(),
            })
            .collect();
        if !classes.is_empty() {
            crate::sched::service_targets(&classes, self.num_users)?;
        }
        Ok(classes)
    }

    /// Per-user premium targets, or `None` in standard mode.
    pub fn service_targets<R: Real>(&self) -> Result<Option<Vec<R>>> {
        let classes = self.service_classes::<R>()?;
        if classes.is_empty() {
            return Ok(None);
        }
        crate::sched::service_targets(&classes, self.num_users).map(Some)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Reads and validates a config file; an empty file yields all defaults.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}

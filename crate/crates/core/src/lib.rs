//! Single-cell downlink scheduling simulator for power-domain NOMA and OMA.
//!
//! The crate is organized bottom-up: [`channel`] produces per-slot subband
//! gains for a population of users, [`power`] splits subband power among
//! multiplexed users, [`rate`] turns gains and powers into achievable rates
//! under successive interference cancellation, [`sched`] hosts the metric
//! functions and the per-slot allocator, [`metrics`] the fairness and
//! throughput measures, and [`engine`] the seeded Monte-Carlo loop. All
//! numeric kernels are generic over the scalar type; the aliases below fix
//! `f64` for ordinary use.

pub mod channel;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod num;
pub mod output;
pub mod power;
pub mod rate;
pub mod sched;

pub use num::Real;
pub use sched::SchedulerKind;

/// Default scalar for the concrete aliases.
pub type Scalar = f64;

pub type Geometry = channel::CellGeometry<Scalar>;
pub type Placement = channel::UserPlacement<Scalar>;
pub type Realization = channel::ChannelRealization<Scalar>;
pub type Fading = channel::FadingProcess<Scalar>;
pub type State = sched::SchedulerState<Scalar>;
pub type Params = sched::SchedulerParams<Scalar>;
pub type Allocation = sched::AllocationResult<Scalar>;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    /// An argument outside the valid domain of a numeric kernel.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Malformed input or output serialization.
    #[error("{0}")]
    Parse(String),
    /// A failure inside one Monte-Carlo drop.
    #[error("drop {drop_index}: {source}")]
    Drop { drop_index: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

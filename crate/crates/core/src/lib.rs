//! Cohort-flow model of law-firm leadership pipelines and the supply of
//! diverse candidates available to a 30% candidate-slate rule.
//!
//! * [`domain`]: levels, segments, bands and population snapshots
//! * [`flows`]: yearly flow tables and the deterministic step
//! * [`equilibrium`]: demand, availability and the R30 gap metrics
//! * [`poolmodel`]: how a 30% slate share turns into hires
//! * [`projection`]: multi-year scenarios
//! * [`ingest`]: dataset, scenario and pool-policy files
//! * [`report`]: tables, charts and trajectory exports
//! * [`synth`]: random valid inputs for tests and benchmarks

pub mod domain;
pub mod equilibrium;
pub mod exec;
pub mod flows;
pub mod ingest;
pub mod poolmodel;
pub mod projection;
pub mod report;
pub mod synth;

use thiserror::Error;

pub use domain::{AtomicSegment, Band, JobLevel, PopulationSnapshot, Segment};
pub use equilibrium::{Classification, GapReport, LevelGroup, View};
pub use exec::Execution;
pub use flows::{FlowKind, FlowRates, StepConfig, Trajectory};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] domain::DomainError),
    #[error(transparent)]
    Flow(#[from] flows::FlowError),
    #[error(transparent)]
    Market(#[from] equilibrium::MarketError),
    #[error(transparent)]
    Pool(#[from] poolmodel::PoolError),
    #[error(transparent)]
    Projection(#[from] projection::ProjectionError),
    #[error(transparent)]
    Parse(#[from] ingest::ParseErrors),
    #[error(transparent)]
    Calibration(#[from] ingest::CalibrationError),
}

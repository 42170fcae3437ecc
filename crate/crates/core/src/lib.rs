//! Site-specific cellular downlink simulation over procedurally generated
//! cities.
//!
//! The pipeline runs from statistical city generation ([`city`]) through an
//! intersectable scene ([`scene`]), deterministic multipath search ([`ray`]),
//! wideband MIMO channel assembly ([`channel`]) and per-UE link metrics
//! ([`metrics`]) to multi-realization Monte Carlo studies ([`scenario`]).
//! [`config`] and [`output`] provide the batch file interfaces used by the
//! command-line front end.

pub mod antenna;
pub mod channel;
pub mod city;
pub mod config;
pub mod error;
pub mod geom;
pub mod material;
pub mod metrics;
pub mod output;
pub mod ray;
pub mod scenario;
pub mod scene;

pub use error::{Error, Result};

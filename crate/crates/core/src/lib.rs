//! Simulation and analysis toolkit for the random transposition walk on the
//! symmetric group.
//!
//! The walk's cycle structure evolves as a coagulation-fragmentation process
//! that is coupled edge-for-edge to an Erdős–Rényi multigraph. The crate
//! provides
//!
//! * [`theory`]: closed-form limit quantities (κ, Borel law, θ, ρ, g, u, σ, ...)
//! * [`permcycle`]: a permutation with incrementally maintained cycle structure
//! * [`graphcouple`]: the coupled union-find multigraph
//! * [`walk`]: the coupled process driver and replicated censuses
//! * [`breakpoint`]: signed genomes, breakpoint graphs and the d₀ bound
//! * [`cqs`]: the cluster queuing system of birth–death chains
//! * [`experiment`]: the experiment registry, manifests and CSV output
//!
//! Replications run on rayon when the `parallel` feature is enabled (the
//! default) and sequentially otherwise; see [`par`].

pub mod breakpoint;
pub mod cqs;
pub mod error;
pub mod experiment;
pub mod graphcouple;
pub mod par;
pub mod permcycle;
pub mod stats;
pub mod theory;
pub mod walk;

pub use error::{Error, Result};

/// Toolkit version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Deterministic discrete-event simulator for optical burst switching
//! networks. Header packets reserve channels one offset ahead of their
//! bursts; contention is resolved by adaptive deflection, hop-limited
//! deflection, retransmission, or pure deflection; link statistics travel
//! on acknowledgement paths and feed each node's routing decisions.
//!
//! The crate splits into: [`topology`] (graphs and route catalogs),
//! [`stats`] (sliding-window link meters and per-node knowledge bases),
//! [`decision`] (scoring and contention policies), [`protocol`] (offset
//! rules and signaling messages), [`engine`] (the event loop), and
//! [`analysis`] (sweeps, trend fits, CSV rendering), configured through
//! [`config`].

pub mod analysis;
pub mod config;
pub mod decision;
pub mod engine;
pub mod protocol;
pub mod stats;
pub mod topology;
pub mod trace;

pub use config::{ConfigError, SimConfig};
pub use decision::Scheme;
pub use engine::{run, SimMetrics, SimOutcome};
pub use topology::Topology;

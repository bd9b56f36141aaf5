//! Deterministic discrete-event simulation of Earth-observation service chains.
//!
//! The crate models the full value chain of an optical burnt-area service:
//! fire events on the ground, external monitoring, central tasking over S-band
//! contacts, systematic acquisitions, onboard processing on a parametric
//! accelerator budget, priority-ordered X-band downlink and ground processing
//! up to marketplace delivery. Two processing architectures can be compared
//! on identical event traces:
//!
//! * [`ArchitectureMode::RawOnly`]: every acquired scene is downlinked at full
//!   radiometry and turned into information on the ground.
//! * [`ArchitectureMode::Hybrid`]: scenes are classified onboard and only
//!   thematic masks and region-of-interest chips are downlinked, unless cloud
//!   cover defers the scene to ground processing.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and the
//! command-line driver live in the companion `eochain` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod downlink;
pub mod engine;
pub mod events;
pub mod ground;
pub mod metrics;
pub mod model;
pub mod onboard;
pub mod orbit;
pub mod presets;
pub mod tasking;

mod math;

pub use crate::downlink::{DownlinkError, DownlinkScheduler, TransferRecord};
pub use crate::engine::{rng_stream, run, run_with, RngStream, RunOptions, SimulationTrace, StreamDomain};
pub use crate::events::{EventModel, FireEvent};
pub use crate::ground::{MarketplaceRecord, Marketplace};
pub use crate::metrics::{compare_architectures, ComparisonReport, ServiceReport};
pub use crate::model::*;
pub use crate::onboard::{ArchitectureMode, DetectionOutcome, Scene};
pub use crate::orbit::Window;
pub use crate::tasking::{ObservationRequest, TaskingPlan};

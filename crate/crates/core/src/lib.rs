//! Stress-testing engine for municipal road networks and hospital access.
//!
//! The library coarse-grains raw road segments into *corridors* between
//! municipalities, computes nearest-hospital distance fields over the
//! resulting network, and quantifies what the deletion of each corridor —
//! alone or together with a random share of its neighbors — does to the
//! population's access to care: access-integral loss, aggregate
//! accessibility drop, travel-time threshold crossings, and hospital
//! catchment surges.
//!
//! Sweeps run data-parallel under the `parallel` feature (default) and fall
//! back to plain iteration without it; either way results are byte-stable
//! for a given seed.

pub mod exec;
pub mod fixtures;
pub mod hospital;
pub mod io;
pub mod metrics;
pub mod network;
pub mod stats;
pub mod stress;
pub mod synth;

pub use network::{CorridorNetwork, DeletionMask, Municipality, NetworkView, RoadSegment};
pub use stress::{run_neighborhood_sweep, run_single_sweep, NeighborhoodConfig, StressParams};

//! Cycle-level model of a programmable bus traffic injector and the
//! interconnects it stresses.
//!
//! The crate is layered bottom-up:
//!
//! - [`descriptor`]: the two-word descriptor encoding.
//! - [`pattern`]: a small text language compiled to descriptor images.
//! - [`injector`]: the register file and fetch/decode/execute engine.
//! - [`interconnect`]: shared-bus and split-channel interconnect models.
//! - [`harness`]: whole-SoC assembly from a TOML topology.
//! - [`metrics`]: per-master latency and bandwidth reporting.

pub mod cli;
pub mod descriptor;
pub mod harness;
pub mod injector;
pub mod interconnect;
pub mod metrics;
pub mod pattern;

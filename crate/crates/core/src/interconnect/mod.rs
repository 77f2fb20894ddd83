//! Cycle-level interconnect models.
//!
//! Every model is driven in two phases per cycle:
//!
//! 1. [`Interconnect::begin_cycle`] retires transactions completing at `now`
//!    and reports them, so masters can react in the same cycle.
//! 2. masters call [`Interconnect::submit`] for new requests at `now`.
//! 3. [`Interconnect::end_cycle`] arbitrates and grants pending requests.
//!
//! A transaction submitted at cycle `c` is eligible for a grant at `c`.

mod ahb;
mod arbiter;
mod axi;
pub mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ahb::AhbBus;
pub use arbiter::{Arbiter, ArbiterPolicy};
pub use axi::AxiBus;
pub use trace::{BusEvent, BusTraceRecord, TraceBuffer};

/// Data bus width in bytes per beat.
pub const BUS_WIDTH_BYTES: u32 = 4;

pub type MasterId = usize;
pub type TxnId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Ahb,
    Axi,
}

pub fn beats_for(size_bytes: u32) -> u32 {
    size_bytes.div_ceil(BUS_WIDTH_BYTES)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub id: TxnId,
    pub master: MasterId,
    pub kind: AccessKind,
    pub address: u32,
    pub size_bytes: u32,
    pub beats: u32,
    pub request_cycle: u64,
    pub grant_cycle: Option<u64>,
    pub complete_cycle: Option<u64>,
}

impl Transaction {
    /// `complete - request`, once complete.
    pub fn latency(&self) -> Option<u64> {
        self.complete_cycle.map(|c| c - self.request_cycle)
    }
}

/// Slave timing: `first_latency` cycles before the first beat, then one
/// beat per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetModel {
    pub first_latency: u64,
}

impl TargetModel {
    pub fn new(first_latency: u64) -> Result<Self, BusError> {
        if first_latency == 0 {
            return Err(BusError::ZeroLatency);
        }
        Ok(TargetModel { first_latency })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("master {0} is not registered on this bus")]
    UnknownMaster(MasterId),
    #[error("transfer size must be at least one byte")]
    EmptyTransfer,
    #[error("target first latency must be at least one cycle")]
    ZeroLatency,
    #[error("outstanding limit must be at least one")]
    ZeroOutstanding,
}

pub trait Interconnect: Send {
    fn name(&self) -> &str;

    fn kind(&self) -> BusKind;

    fn register_master(&mut self, master: MasterId);

    fn submit(
        &mut self,
        master: MasterId,
        kind: AccessKind,
        address: u32,
        size_bytes: u32,
        now: u64,
    ) -> Result<TxnId, BusError>;

    /// Retire everything completing at `now`, appending it to `completed`.
    fn begin_cycle(&mut self, now: u64, completed: &mut Vec<Transaction>);

    /// Arbitrate and grant for cycle `now`.
    fn end_cycle(&mut self, now: u64);

    /// Both phases at once, for callers that submit before stepping.
    fn step(&mut self, now: u64) -> Vec<Transaction> {
        let mut done = Vec::new();
        self.begin_cycle(now, &mut done);
        self.end_cycle(now);
        done
    }

    /// Cycles in which the data path was occupied.
    fn busy_cycles(&self) -> u64;

    /// First cycle after the last data-path activity of any completed
    /// transaction.
    fn makespan(&self) -> u64;

    /// No pending, granted or in-flight transactions.
    fn is_idle(&self) -> bool;

    fn trace(&mut self) -> &mut TraceBuffer;
}

/// Builds a bus of the given kind.
pub fn new_bus(
    name: &str,
    kind: BusKind,
    target: TargetModel,
    policy: ArbiterPolicy,
    outstanding: u32,
) -> Result<Box<dyn Interconnect>, BusError> {
    Ok(match kind {
        BusKind::Ahb => Box::new(AhbBus::new(name, target, policy)),
        BusKind::Axi => Box::new(AxiBus::new(name, target, policy, outstanding)?),
    })
}

/// Registered masters in ascending id order, each with its own state.
#[derive(Debug, Clone)]
pub(crate) struct MasterTable<S> {
    ids: Vec<MasterId>,
    states: Vec<S>,
}

impl<S> Default for MasterTable<S> {
    fn default() -> Self {
        MasterTable {
            ids: Vec::new(),
            states: Vec::new(),
        }
    }
}

impl<S> MasterTable<S> {
    pub(crate) fn register(&mut self, id: MasterId, state: impl FnOnce() -> S) {
        if let Err(slot) = self.ids.binary_search(&id) {
            self.ids.insert(slot, id);
            self.states.insert(slot, state());
        }
    }

    pub(crate) fn get_mut(&mut self, id: MasterId) -> Option<&mut S> {
        let slot = self.ids.binary_search(&id).ok()?;
        Some(&mut self.states[slot])
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (MasterId, &S)> {
        self.ids.iter().copied().zip(self.states.iter())
    }
}

pub(crate) fn bus_name(name: &str) -> Arc<str> {
    Arc::from(name)
}

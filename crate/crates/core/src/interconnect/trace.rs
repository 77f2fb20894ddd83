//! Bus event trace channel.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use super::{MasterId, TxnId};

/// Declared in within-cycle emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BusEvent {
    Beat,
    Complete,
    Req,
    Grant,
}

impl fmt::Display for BusEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BusEvent::Req => "REQ",
            BusEvent::Grant => "GRANT",
            BusEvent::Beat => "BEAT",
            BusEvent::Complete => "COMPLETE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusTraceRecord {
    pub cycle: u64,
    pub bus: Arc<str>,
    pub event: BusEvent,
    pub master: MasterId,
    pub txn: TxnId,
}

pub const TRACE_CSV_HEADER: &str = "cycle,bus,event,master_id,txn_id";

pub fn trace_csv(records: &[BusTraceRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.cycle, r.bus, r.event, r.master, r.txn
        );
    }
    out
}

/// Collects records; within one cycle they are ordered by event, then txn id.
#[derive(Debug, Clone)]
pub struct TraceBuffer {
    bus: Arc<str>,
    enabled: bool,
    pending: Vec<BusTraceRecord>,
    records: Vec<BusTraceRecord>,
}

impl TraceBuffer {
    pub fn new(bus: Arc<str>) -> Self {
        TraceBuffer {
            bus,
            enabled: false,
            pending: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn set_enabled(&mut self, on: bool) {
        self.enabled = on;
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub(crate) fn push(&mut self, cycle: u64, event: BusEvent, master: MasterId, txn: TxnId) {
        if self.enabled {
            self.pending.push(BusTraceRecord {
                cycle,
                bus: self.bus.clone(),
                event,
                master,
                txn,
            });
        }
    }

    pub(crate) fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        self.pending.sort_by_key(|r| (r.cycle, r.event, r.txn));
        self.records.append(&mut self.pending);
    }

    pub fn records(&self) -> &[BusTraceRecord] {
        &self.records
    }

    pub fn take(&mut self) -> Vec<BusTraceRecord> {
        self.flush();
        std::mem::take(&mut self.records)
    }
}

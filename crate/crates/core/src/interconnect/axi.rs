//! Split read/write interconnect with outstanding transactions.
//!
//! Each channel accepts at most one address per cycle. A transaction accepted
//! at `a` delivers its beats from `a + first_latency` on, one beat per cycle
//! per channel, queueing behind beats of earlier transactions. It completes in
//! the cycle of its last beat. The outstanding limit applies per master and
//! per channel.

use std::collections::VecDeque;

use super::{
    beats_for, bus_name, AccessKind, Arbiter, ArbiterPolicy, BusError, BusEvent, BusKind,
    Interconnect, MasterId, MasterTable, TargetModel, TraceBuffer, Transaction, TxnId,
};

#[derive(Debug, Default)]
struct MasterPort {
    queue: VecDeque<Transaction>,
    in_flight: u32,
}

struct InFlight {
    txn: Transaction,
    first_beat: u64,
}

struct Channel {
    arbiter: Arbiter,
    ports: MasterTable<MasterPort>,
    pending: usize,
    /// Accepted transactions in acceptance order.
    flight: VecDeque<InFlight>,
    /// First cycle the data path is free for another beat.
    data_free: u64,
    busy: u64,
}

impl Channel {
    fn new(policy: ArbiterPolicy) -> Self {
        Channel {
            arbiter: Arbiter::new(policy),
            ports: MasterTable::default(),
            pending: 0,
            flight: VecDeque::new(),
            data_free: 0,
            busy: 0,
        }
    }

    fn retire(
        &mut self,
        now: u64,
        trace: &mut TraceBuffer,
        completed: &mut Vec<Transaction>,
        makespan: &mut u64,
    ) {
        // Beats are delivered strictly in acceptance order, so only the
        // oldest transaction can be beating.
        let Some(front) = self.flight.front() else {
            return;
        };
        let complete = front
            .txn
            .complete_cycle
            .expect("accepted txn has completion time");
        if now < front.first_beat {
            return;
        }
        self.busy += 1;
        trace.push(now, BusEvent::Beat, front.txn.master, front.txn.id);
        if now == complete {
            let done = self.flight.pop_front().expect("front exists").txn;
            trace.push(now, BusEvent::Complete, done.master, done.id);
            if let Some(port) = self.ports.get_mut(done.master) {
                port.in_flight -= 1;
            }
            *makespan = (*makespan).max(complete + 1);
            completed.push(done);
        }
    }

    fn accept(&mut self, now: u64, latency: u64, outstanding: u32, trace: &mut TraceBuffer) {
        if self.pending == 0 {
            return;
        }
        let candidates = self
            .ports
            .iter()
            .filter(|(_, p)| !p.queue.is_empty() && p.in_flight < outstanding)
            .map(|(id, _)| id);
        let Some(winner) = self.arbiter.pick(candidates) else {
            return;
        };
        let port = self.ports.get_mut(winner).expect("winner is registered");
        let mut txn = port
            .queue
            .pop_front()
            .expect("winner has a pending request");
        port.in_flight += 1;
        self.pending -= 1;

        let first_beat = (now + latency).max(self.data_free);
        let last_beat = first_beat + txn.beats as u64 - 1;
        self.data_free = last_beat + 1;
        txn.grant_cycle = Some(now);
        txn.complete_cycle = Some(last_beat);
        trace.push(now, BusEvent::Grant, txn.master, txn.id);
        self.flight.push_back(InFlight { txn, first_beat });
    }
}

pub struct AxiBus {
    name: String,
    target: TargetModel,
    outstanding: u32,
    read: Channel,
    write: Channel,
    next_id: TxnId,
    makespan: u64,
    trace: TraceBuffer,
}

impl AxiBus {
    pub fn new(
        name: &str,
        target: TargetModel,
        policy: ArbiterPolicy,
        outstanding: u32,
    ) -> Result<Self, BusError> {
        if outstanding == 0 {
            return Err(BusError::ZeroOutstanding);
        }
        Ok(AxiBus {
            name: name.to_owned(),
            target,
            outstanding,
            read: Channel::new(policy),
            write: Channel::new(policy),
            next_id: 0,
            makespan: 0,
            trace: TraceBuffer::new(bus_name(name)),
        })
    }

    pub fn outstanding(&self) -> u32 {
        self.outstanding
    }

    pub fn channel_busy_cycles(&self, kind: AccessKind) -> u64 {
        match kind {
            AccessKind::Read => self.read.busy,
            AccessKind::Write => self.write.busy,
        }
    }

    fn channel_mut(&mut self, kind: AccessKind) -> &mut Channel {
        match kind {
            AccessKind::Read => &mut self.read,
            AccessKind::Write => &mut self.write,
        }
    }
}

impl Interconnect for AxiBus {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BusKind {
        BusKind::Axi
    }

    fn register_master(&mut self, master: MasterId) {
        self.read.ports.register(master, MasterPort::default);
        self.write.ports.register(master, MasterPort::default);
    }

    fn submit(
        &mut self,
        master: MasterId,
        kind: AccessKind,
        address: u32,
        size_bytes: u32,
        now: u64,
    ) -> Result<TxnId, BusError> {
        if size_bytes == 0 {
            return Err(BusError::EmptyTransfer);
        }
        let id = self.next_id;
        let channel = self.channel_mut(kind);
        let port = channel
            .ports
            .get_mut(master)
            .ok_or(BusError::UnknownMaster(master))?;
        port.queue.push_back(Transaction {
            id,
            master,
            kind,
            address,
            size_bytes,
            beats: beats_for(size_bytes),
            request_cycle: now,
            grant_cycle: None,
            complete_cycle: None,
        });
        channel.pending += 1;
        self.next_id += 1;
        self.trace.push(now, BusEvent::Req, master, id);
        Ok(id)
    }

    fn begin_cycle(&mut self, now: u64, completed: &mut Vec<Transaction>) {
        self.read
            .retire(now, &mut self.trace, completed, &mut self.makespan);
        self.write
            .retire(now, &mut self.trace, completed, &mut self.makespan);
    }

    fn end_cycle(&mut self, now: u64) {
        let latency = self.target.first_latency;
        self.read
            .accept(now, latency, self.outstanding, &mut self.trace);
        self.write
            .accept(now, latency, self.outstanding, &mut self.trace);
        self.trace.flush();
    }

    fn busy_cycles(&self) -> u64 {
        self.read.busy + self.write.busy
    }

    fn makespan(&self) -> u64 {
        self.makespan
    }

    fn is_idle(&self) -> bool {
        [&self.read, &self.write]
            .iter()
            .all(|c| c.pending == 0 && c.flight.is_empty())
    }

    fn trace(&mut self) -> &mut TraceBuffer {
        &mut self.trace
    }
}

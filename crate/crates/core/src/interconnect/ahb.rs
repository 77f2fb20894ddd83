//! Serialized shared bus: one transaction owns the bus from grant to
//! completion, `first_latency + beats` cycles.

use std::collections::VecDeque;

use super::{
    beats_for, bus_name, AccessKind, Arbiter, ArbiterPolicy, BusError, BusEvent, BusKind,
    Interconnect, MasterId, MasterTable, TargetModel, TraceBuffer, Transaction, TxnId,
};

pub struct AhbBus {
    name: String,
    target: TargetModel,
    arbiter: Arbiter,
    queues: MasterTable<VecDeque<Transaction>>,
    pending: usize,
    owner: Option<Transaction>,
    next_id: TxnId,
    busy: u64,
    makespan: u64,
    trace: TraceBuffer,
}

impl AhbBus {
    pub fn new(name: &str, target: TargetModel, policy: ArbiterPolicy) -> Self {
        AhbBus {
            name: name.to_owned(),
            target,
            arbiter: Arbiter::new(policy),
            queues: MasterTable::default(),
            pending: 0,
            owner: None,
            next_id: 0,
            busy: 0,
            makespan: 0,
            trace: TraceBuffer::new(bus_name(name)),
        }
    }

    pub fn target(&self) -> TargetModel {
        self.target
    }

    pub fn policy(&self) -> ArbiterPolicy {
        self.arbiter.policy()
    }

    /// Transaction currently holding the bus.
    pub fn owner(&self) -> Option<&Transaction> {
        self.owner.as_ref()
    }
}

impl Interconnect for AhbBus {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BusKind {
        BusKind::Ahb
    }

    fn register_master(&mut self, master: MasterId) {
        self.queues.register(master, VecDeque::new);
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
        let queue = self
            .queues
            .get_mut(master)
            .ok_or(BusError::UnknownMaster(master))?;
        queue.push_back(Transaction {
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
        self.next_id += 1;
        self.pending += 1;
        self.trace.push(now, BusEvent::Req, master, id);
        Ok(id)
    }

    fn begin_cycle(&mut self, now: u64, completed: &mut Vec<Transaction>) {
        let Some(owner) = &self.owner else { return };
        let grant = owner.grant_cycle.expect("owner is granted");
        let complete = owner.complete_cycle.expect("owner has completion time");
        let first_beat = grant + self.target.first_latency;
        if now >= first_beat && now < complete {
            self.trace.push(now, BusEvent::Beat, owner.master, owner.id);
        }
        if now == complete {
            self.trace
                .push(now, BusEvent::Complete, owner.master, owner.id);
            self.makespan = self.makespan.max(complete);
            completed.push(self.owner.take().expect("checked above"));
        }
    }

    fn end_cycle(&mut self, now: u64) {
        if self.owner.is_none() && self.pending > 0 {
            let candidates = self
                .queues
                .iter()
                .filter(|(_, q)| !q.is_empty())
                .map(|(id, _)| id);
            if let Some(winner) = self.arbiter.pick(candidates) {
                let queue = self.queues.get_mut(winner).expect("winner is registered");
                let mut txn = queue.pop_front().expect("winner has a pending request");
                self.pending -= 1;
                txn.grant_cycle = Some(now);
                txn.complete_cycle = Some(now + self.target.first_latency + txn.beats as u64);
                self.trace.push(now, BusEvent::Grant, txn.master, txn.id);
                self.owner = Some(txn);
            }
        }
        if self.owner.is_some() {
            self.busy += 1;
        }
        self.trace.flush();
    }

    fn busy_cycles(&self) -> u64 {
        self.busy
    }

    fn makespan(&self) -> u64 {
        self.makespan
    }

    fn is_idle(&self) -> bool {
        self.owner.is_none() && self.pending == 0
    }

    fn trace(&mut self) -> &mut TraceBuffer {
        &mut self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interconnect::BusTraceRecord;

    fn bus(latency: u64, policy: ArbiterPolicy, masters: &[MasterId]) -> AhbBus {
        let mut b = AhbBus::new("ahb", TargetModel::new(latency).unwrap(), policy);
        for &m in masters {
            b.register_master(m);
        }
        b
    }

    fn run_until_idle(b: &mut AhbBus, from: u64) -> Vec<Transaction> {
        let mut done = Vec::new();
        let mut now = from;
        loop {
            done.extend(b.step(now));
            if b.is_idle() {
                return done;
            }
            now += 1;
        }
    }

    #[test]
    fn single_read_latency() {
        let mut b = bus(2, ArbiterPolicy::FixedPriority, &[0]);
        b.submit(0, AccessKind::Read, 0, 4, 0).unwrap();
        let done = run_until_idle(&mut b, 0);
        assert_eq!(done[0].grant_cycle, Some(0));
        assert_eq!(done[0].complete_cycle, Some(3));
        assert_eq!(done[0].latency(), Some(3));
        assert_eq!(b.busy_cycles(), 3);
    }

    #[test]
    fn fixed_priority_serializes() {
        let mut b = bus(2, ArbiterPolicy::FixedPriority, &[0, 1]);
        b.submit(1, AccessKind::Read, 0, 4, 0).unwrap();
        b.submit(0, AccessKind::Read, 0, 4, 0).unwrap();
        let done = run_until_idle(&mut b, 0);
        assert_eq!(done[0].master, 0);
        assert_eq!(done[0].complete_cycle, Some(3));
        assert_eq!(done[1].master, 1);
        assert_eq!(done[1].grant_cycle, Some(3));
        assert_eq!(done[1].complete_cycle, Some(6));
    }

    #[test]
    fn round_robin_alternates_under_saturation() {
        let mut b = bus(1, ArbiterPolicy::RoundRobin, &[0, 1]);
        b.submit(0, AccessKind::Read, 0, 4, 0).unwrap();
        b.submit(1, AccessKind::Read, 0, 4, 0).unwrap();
        let mut grants = Vec::new();
        let mut done = Vec::new();
        for now in 0..20 {
            done.clear();
            b.begin_cycle(now, &mut done);
            for t in &done {
                b.submit(t.master, AccessKind::Read, 0, 4, now).unwrap();
            }
            b.end_cycle(now);
            if let Some(o) = b.owner() {
                if o.grant_cycle == Some(now) {
                    grants.push(o.master);
                }
            }
        }
        assert_eq!(grants.len(), 10);
        for (i, m) in grants.iter().enumerate() {
            assert_eq!(*m, i % 2);
        }
    }

    #[test]
    fn unknown_master_rejected() {
        let mut b = bus(1, ArbiterPolicy::FixedPriority, &[0]);
        assert_eq!(
            b.submit(7, AccessKind::Write, 0, 4, 0),
            Err(BusError::UnknownMaster(7))
        );
        assert_eq!(
            b.submit(0, AccessKind::Write, 0, 0, 0),
            Err(BusError::EmptyTransfer)
        );
    }

    #[test]
    fn trace_orders_events() {
        let mut b = bus(1, ArbiterPolicy::FixedPriority, &[0]);
        b.trace().set_enabled(true);
        b.submit(0, AccessKind::Write, 0, 8, 0).unwrap();
        run_until_idle(&mut b, 0);
        let events: Vec<_> = b
            .trace()
            .take()
            .into_iter()
            .map(|BusTraceRecord { cycle, event, .. }| (cycle, event))
            .collect();
        assert_eq!(
            events,
            vec![
                (0, BusEvent::Req),
                (0, BusEvent::Grant),
                (1, BusEvent::Beat),
                (2, BusEvent::Beat),
                (3, BusEvent::Complete),
            ]
        );
    }
}

//! Closed-loop periodic traffic generator standing in for a real workload.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VictimSpec;
use crate::injector::BusPort;
use crate::interconnect::TxnId;

/// Issues access `k` at `start + k * period + jitter_k`, but never before
/// access `k - 1` completed.
#[derive(Debug, Clone)]
pub struct Victim {
    spec: VictimSpec,
    rng: ChaCha8Rng,
    /// Jitter of the next access.
    offset: u64,
    issued: u32,
    completed: u32,
    in_flight: Option<TxnId>,
    ready_at: u64,
    completion: Option<u64>,
}

impl Victim {
    pub fn new(spec: VictimSpec, seed: u64, master_index: usize) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(
            seed ^ (master_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let mut v = Victim {
            spec,
            rng,
            offset: 0,
            issued: 0,
            completed: 0,
            in_flight: None,
            ready_at: 0,
            completion: None,
        };
        v.draw();
        v
    }

    fn draw(&mut self) {
        self.offset = match self.spec.jitter {
            0 => 0,
            j => self.rng.gen_range(0..=j),
        };
    }

    pub fn spec(&self) -> &VictimSpec {
        &self.spec
    }

    pub fn is_done(&self) -> bool {
        self.completed == self.spec.count
    }

    /// Cycle in which the last access completed.
    pub fn completion_cycle(&self) -> Option<u64> {
        self.completion
    }

    fn next_issue(&self) -> u64 {
        let k = self.issued as u64;
        (self.spec.start + k * self.spec.period + self.offset).max(self.ready_at)
    }

    pub fn complete(&mut self, txn: TxnId, now: u64) {
        if self.in_flight == Some(txn) {
            self.in_flight = None;
            self.completed += 1;
            self.ready_at = now;
            if self.is_done() {
                self.completion = Some(now);
            }
        }
    }

    pub fn step(&mut self, now: u64, port: &mut dyn BusPort) {
        if self.in_flight.is_some() || self.issued == self.spec.count || now < self.next_issue() {
            return;
        }
        let s = &self.spec;
        self.in_flight = Some(port.submit(s.kind, s.address, s.size_bytes, now));
        self.issued += 1;
        self.draw();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interconnect::AccessKind;

    struct Instant {
        next: TxnId,
        log: Vec<u64>,
    }

    impl BusPort for Instant {
        fn submit(&mut self, _: AccessKind, _: u32, _: u32, now: u64) -> TxnId {
            self.log.push(now);
            self.next += 1;
            self.next - 1
        }
    }

    fn spec(period: u64, count: u32, jitter: u64) -> VictimSpec {
        VictimSpec {
            period,
            count,
            kind: AccessKind::Read,
            address: 0x100,
            size_bytes: 4,
            start: 3,
            jitter,
        }
    }

    /// Drives the victim with a fixed service time per access.
    fn drive(v: &mut Victim, service: u64) -> Vec<u64> {
        let mut port = Instant {
            next: 0,
            log: Vec::new(),
        };
        let mut due: Option<(TxnId, u64)> = None;
        for now in 0..10_000 {
            if let Some((id, at)) = due {
                if at == now {
                    v.complete(id, now);
                    due = None;
                }
            }
            let before = port.next;
            v.step(now, &mut port);
            if port.next != before {
                due = Some((before, now + service));
            }
            if v.is_done() {
                break;
            }
        }
        port.log
    }

    #[test]
    fn periodic_when_service_is_short() {
        let mut v = Victim::new(spec(10, 4, 0), 0, 0);
        assert_eq!(drive(&mut v, 2), vec![3, 13, 23, 33]);
        assert_eq!(v.completion_cycle(), Some(35));
    }

    #[test]
    fn closed_loop_when_service_is_long() {
        let mut v = Victim::new(spec(2, 3, 0), 0, 0);
        assert_eq!(drive(&mut v, 5), vec![3, 8, 13]);
    }

    #[test]
    fn jitter_is_bounded_and_seeded() {
        let a = drive(&mut Victim::new(spec(10, 20, 4), 7, 1), 1);
        let b = drive(&mut Victim::new(spec(10, 20, 4), 7, 1), 1);
        let c = drive(&mut Victim::new(spec(10, 20, 4), 8, 1), 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (k, t) in a.iter().enumerate() {
            let nominal = 3 + 10 * k as u64;
            assert!((nominal..=nominal + 4).contains(t));
        }
    }

    #[test]
    fn zero_count_is_done_immediately() {
        let v = Victim::new(spec(1, 0, 0), 0, 0);
        assert!(v.is_done());
        assert_eq!(v.completion_cycle(), None);
    }
}

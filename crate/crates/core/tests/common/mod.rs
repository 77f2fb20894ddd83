#![allow(dead_code)]

pub mod reference;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tig_core::interconnect::{
    new_bus, AccessKind, ArbiterPolicy, BusEvent, BusKind, TargetModel, Transaction,
};

use reference::{Ev, Event, Outcome, Req, Scenario};

/// A small random scenario: at most 3 masters and 30 transactions.
pub fn random_scenario(rng: &mut ChaCha8Rng, kind: BusKind) -> Scenario {
    let masters = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=30);
    let mut requests: Vec<Req> = (0..n)
        .map(|_| Req {
            master: rng.gen_range(0..masters),
            kind: if rng.gen_bool(0.5) {
                AccessKind::Read
            } else {
                AccessKind::Write
            },
            size_bytes: *[1u32, 4, 8, 16, 32, 64].get(rng.gen_range(0..6)).unwrap(),
            at: rng.gen_range(0..40),
        })
        .collect();
    requests.sort_by_key(|r| (r.at, r.master));
    Scenario {
        kind,
        latency: rng.gen_range(1..=4),
        policy: if rng.gen_bool(0.5) {
            ArbiterPolicy::FixedPriority
        } else {
            ArbiterPolicy::RoundRobin
        },
        outstanding: if kind == BusKind::Axi {
            rng.gen_range(1..=4)
        } else {
            1
        },
        masters,
        requests,
    }
}

pub fn scenarios(seed: u64, kind: BusKind, count: usize) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_scenario(&mut rng, kind))
        .collect()
}

/// Runs a scenario on the library's interconnect model and reports it in
/// the reference's shape.
pub fn run_model(s: &Scenario) -> Outcome {
    let mut bus = new_bus(
        "bus",
        s.kind,
        TargetModel::new(s.latency).unwrap(),
        s.policy,
        s.outstanding,
    )
    .unwrap();
    bus.trace().set_enabled(true);
    for m in 0..s.masters {
        bus.register_master(m);
    }
    let n = s.requests.len();
    let mut done: Vec<Transaction> = Vec::new();
    let mut next = 0;
    let mut now = 0;
    while done.len() < n {
        bus.begin_cycle(now, &mut done);
        while next < n && s.requests[next].at == now {
            let r = s.requests[next];
            let id = bus.submit(r.master, r.kind, 0, r.size_bytes, now).unwrap();
            assert_eq!(id, next as u64);
            next += 1;
        }
        bus.end_cycle(now);
        now += 1;
        assert!(now < 100_000, "model did not drain");
    }
    let mut grant = vec![0; n];
    let mut complete = vec![0; n];
    for t in &done {
        grant[t.id as usize] = t.grant_cycle.unwrap();
        complete[t.id as usize] = t.complete_cycle.unwrap();
    }
    let mut events: Vec<Event> = bus
        .trace()
        .take()
        .into_iter()
        .map(|r| Event {
            cycle: r.cycle,
            ev: match r.event {
                BusEvent::Beat => Ev::Beat,
                BusEvent::Complete => Ev::Complete,
                BusEvent::Req => Ev::Req,
                BusEvent::Grant => Ev::Grant,
            },
            txn: r.txn,
            master: r.master,
        })
        .collect();
    let emitted = events.clone();
    events.sort();
    assert_eq!(emitted, events, "trace not in canonical order");
    Outcome {
        grant,
        complete,
        busy: bus.busy_cycles(),
        makespan: bus.makespan(),
        events,
    }
}

/// Pattern source for `n` single-beat writes to consecutive words.
pub fn writes(n: usize) -> String {
    (0..n)
        .map(|i| format!("write {:#x}\n", 0x1000 + 4 * i))
        .collect()
}

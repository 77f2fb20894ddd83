//! Deliberately naive cycle-by-cycle models used as test oracles.
//!
//! Nothing here shares code with the library beyond plain data types. Each
//! model walks every cycle and keeps one counter per piece of state.

use tig_core::interconnect::{AccessKind, ArbiterPolicy, BusKind};

/// One scripted request: `master` asks at cycle `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Req {
    pub master: usize,
    pub kind: AccessKind,
    pub size_bytes: u32,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub kind: BusKind,
    pub latency: u64,
    pub policy: ArbiterPolicy,
    pub outstanding: u32,
    pub masters: usize,
    /// Sorted by `(at, master)`; ids are assigned in this order.
    pub requests: Vec<Req>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ev {
    Beat,
    Complete,
    Req,
    Grant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub cycle: u64,
    pub ev: Ev,
    pub txn: u64,
    pub master: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// Indexed by txn id.
    pub grant: Vec<u64>,
    pub complete: Vec<u64>,
    pub busy: u64,
    pub makespan: u64,
    pub events: Vec<Event>,
}

pub fn beats(size_bytes: u32) -> u64 {
    let mut n = 0;
    let mut left = size_bytes as i64;
    while left > 0 {
        n += 1;
        left -= 4;
    }
    n
}

/// Rotating or fixed choice among ready masters.
fn choose(policy: ArbiterPolicy, ready: &[bool], last: &mut Option<usize>) -> Option<usize> {
    let n = ready.len();
    let order: Vec<usize> = match (policy, *last) {
        (ArbiterPolicy::RoundRobin, Some(l)) => (1..=n).map(|k| (l + k) % n).collect(),
        _ => (0..n).collect(),
    };
    let pick = order.into_iter().find(|&m| ready[m])?;
    *last = Some(pick);
    Some(pick)
}

pub fn simulate(s: &Scenario) -> Outcome {
    match s.kind {
        BusKind::Ahb => ahb(s),
        BusKind::Axi => axi(s),
    }
}

fn ahb(s: &Scenario) -> Outcome {
    let n = s.requests.len();
    let mut grant = vec![u64::MAX; n];
    let mut complete = vec![u64::MAX; n];
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); s.masters];
    let mut events = Vec::new();
    let mut last = None;
    // (txn, cycle the occupancy ends)
    let mut owner: Option<(usize, u64)> = None;
    let mut busy = 0;
    let mut done = 0;
    let mut t = 0u64;
    while done < n {
        if let Some((txn, end)) = owner {
            if t == end {
                complete[txn] = t;
                events.push(Event {
                    cycle: t,
                    ev: Ev::Complete,
                    txn: txn as u64,
                    master: s.requests[txn].master,
                });
                owner = None;
                done += 1;
            }
        }
        for (id, r) in s.requests.iter().enumerate() {
            if r.at == t {
                queues[r.master].push(id);
                events.push(Event {
                    cycle: t,
                    ev: Ev::Req,
                    txn: id as u64,
                    master: r.master,
                });
            }
        }
        if owner.is_none() {
            let ready: Vec<bool> = queues.iter().map(|q| !q.is_empty()).collect();
            if let Some(m) = choose(s.policy, &ready, &mut last) {
                let txn = queues[m].remove(0);
                grant[txn] = t;
                owner = Some((txn, t + s.latency + beats(s.requests[txn].size_bytes)));
                events.push(Event {
                    cycle: t,
                    ev: Ev::Grant,
                    txn: txn as u64,
                    master: m,
                });
            }
        }
        if let Some((txn, end)) = owner {
            busy += 1;
            if t >= end - beats(s.requests[txn].size_bytes) {
                events.push(Event {
                    cycle: t,
                    ev: Ev::Beat,
                    txn: txn as u64,
                    master: s.requests[txn].master,
                });
            }
        }
        t += 1;
    }
    events.sort();
    Outcome {
        makespan: complete.iter().copied().max().unwrap_or(0),
        grant,
        complete,
        busy,
        events,
    }
}

fn axi(s: &Scenario) -> Outcome {
    let n = s.requests.len();
    let mut grant = vec![u64::MAX; n];
    let mut complete = vec![u64::MAX; n];
    let mut events = Vec::new();
    let mut busy = 0;
    let mut done = 0;

    struct Chan {
        queues: Vec<Vec<usize>>,
        open: Vec<u32>,
        last: Option<usize>,
        /// (txn, accepted at, beats delivered)
        accepted: Vec<(usize, u64, u64)>,
    }
    let mut chans: Vec<Chan> = (0..2)
        .map(|_| Chan {
            queues: vec![Vec::new(); s.masters],
            open: vec![0; s.masters],
            last: None,
            accepted: Vec::new(),
        })
        .collect();
    let chan_of = |k: AccessKind| match k {
        AccessKind::Read => 0,
        AccessKind::Write => 1,
    };

    let mut t = 0u64;
    while done < n {
        for c in chans.iter_mut() {
            if let Some(&(txn, at, delivered)) = c.accepted.first() {
                if t >= at + s.latency {
                    let r = &s.requests[txn];
                    busy += 1;
                    events.push(Event {
                        cycle: t,
                        ev: Ev::Beat,
                        txn: txn as u64,
                        master: r.master,
                    });
                    c.accepted[0].2 = delivered + 1;
                    if delivered + 1 == beats(r.size_bytes) {
                        complete[txn] = t;
                        events.push(Event {
                            cycle: t,
                            ev: Ev::Complete,
                            txn: txn as u64,
                            master: r.master,
                        });
                        c.accepted.remove(0);
                        c.open[r.master] -= 1;
                        done += 1;
                    }
                }
            }
        }
        for (id, r) in s.requests.iter().enumerate() {
            if r.at == t {
                chans[chan_of(r.kind)].queues[r.master].push(id);
                events.push(Event {
                    cycle: t,
                    ev: Ev::Req,
                    txn: id as u64,
                    master: r.master,
                });
            }
        }
        for c in chans.iter_mut() {
            let ready: Vec<bool> = (0..s.masters)
                .map(|m| !c.queues[m].is_empty() && c.open[m] < s.outstanding)
                .collect();
            if let Some(m) = choose(s.policy, &ready, &mut c.last) {
                let txn = c.queues[m].remove(0);
                c.open[m] += 1;
                grant[txn] = t;
                c.accepted.push((txn, t, 0));
                events.push(Event {
                    cycle: t,
                    ev: Ev::Grant,
                    txn: txn as u64,
                    master: m,
                });
            }
        }
        t += 1;
    }
    events.sort();
    Outcome {
        makespan: complete.iter().copied().max().map_or(0, |c| c + 1),
        grant,
        complete,
        busy,
        events,
    }
}

/// One program step for [`injector_issue_cycles`].
#[derive(Debug, Clone, Copy)]
pub enum Step {
    Access { size_bytes: u32, reps: u32 },
    Delay { cycles: u64, reps: u32 },
}

/// Issue cycles of every bus access of an injector that is the only master
/// on an AHB bus with first-beat latency `latency`, enabled at cycle 0,
/// plus the cycle DONE is raised.
///
/// Stage model: a descriptor fetched at `f` is decoded at `f + 1` and may
/// start executing at `f + 2`. Pipelined mode fetches the next descriptor
/// as soon as the fetch slot is empty; legacy mode only once the previous
/// descriptor retired.
pub fn injector_issue_cycles(program: &[Step], latency: u64, pipelined: bool) -> (Vec<u64>, u64) {
    let mut issues = Vec::new();
    // Cycle the executing stage becomes free.
    let mut exec_free = 0u64;
    // Cycle the next fetch may happen.
    let mut fetch_at = 0u64;
    let mut decode_free = 0u64;
    for step in program {
        let fetch = fetch_at;
        let decoded = (fetch + 1).max(decode_free);
        let start = (decoded + 1).max(exec_free);
        let mut t = start;
        match *step {
            Step::Access { size_bytes, reps } => {
                for _ in 0..reps {
                    issues.push(t);
                    t += latency + beats(size_bytes);
                }
            }
            Step::Delay { cycles, reps } => t += cycles * reps as u64,
        }
        exec_free = t;
        // The decoded slot empties when the descriptor moves to execute.
        decode_free = start;
        fetch_at = if pipelined { decoded } else { t };
    }
    (issues, exec_free)
}

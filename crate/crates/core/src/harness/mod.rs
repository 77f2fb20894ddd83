//! Builds and runs whole-SoC simulations from a [`Topology`].

pub mod topology;
mod victim;

use std::collections::VecDeque;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::descriptor::DescriptorWords;
use crate::injector::{BusPort, Injector, MasterPort, StageRecord};
use crate::interconnect::{
    new_bus, AccessKind, BusTraceRecord, Interconnect, MasterId, TargetModel, Transaction, TxnId,
};
use crate::metrics::{MasterMetrics, MetricsRecord, Role, RunMeta};
use crate::pattern::{emit_apb_sequence_words, ApbWrite, PatternError};

pub use topology::{
    BusSpec, InjectorSpec, MasterRole, MasterSpec, ProgramVia, Topology, VictimSpec,
};
pub use victim::Victim;

/// Data-bus address of an injector's register window when it is programmed
/// through the data bus.
pub const REGISTER_WINDOW_BASE: u32 = 0xfff0_0000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("master '{master}': {source}")]
    Pattern {
        master: String,
        #[source]
        source: PatternError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cycle limit of {max_cycles} reached before the scenario finished")]
    CycleLimitExceeded {
        max_cycles: u64,
        partial: Vec<MetricsRecord>,
    },
}

/// Replays register writes over the data bus, one outstanding write at a time.
#[derive(Debug)]
struct DataBusProgrammer {
    writes: VecDeque<ApbWrite>,
    in_flight: Option<(TxnId, ApbWrite)>,
}

#[derive(Debug)]
struct InjectorAgent {
    injector: Injector,
    program: Vec<ApbWrite>,
    via: ProgramVia,
    program_at: u64,
    enabled: bool,
    programmed: bool,
    programmer: Option<DataBusProgrammer>,
    done_cycle: Option<u64>,
}

impl InjectorAgent {
    fn finished(&self) -> bool {
        if !self.enabled {
            return true;
        }
        if !self.programmed {
            return false;
        }
        self.injector.loop_enabled() || self.injector.is_done() || self.injector.has_error()
    }

    fn complete(&mut self, txn: TxnId, now: u64) {
        if let Some(p) = &mut self.programmer {
            if let Some((id, write)) = p.in_flight {
                if id == txn {
                    p.in_flight = None;
                    self.injector
                        .apb_write(write.offset, write.value)
                        .expect("program offsets lie in the register window");
                    if p.writes.is_empty() {
                        self.programmer = None;
                        self.programmed = true;
                    }
                    return;
                }
            }
        }
        self.injector.complete(txn, now);
    }

    fn step(&mut self, now: u64, port: &mut MasterPort<'_>) {
        if let Some(p) = &mut self.programmer {
            if p.in_flight.is_none() {
                if let Some(write) = p.writes.pop_front() {
                    let txn = port.submit(
                        AccessKind::Write,
                        REGISTER_WINDOW_BASE + write.offset,
                        4,
                        now,
                    );
                    p.in_flight = Some((txn, write));
                }
            }
        }
        self.injector.step(now, port);
        if self.done_cycle.is_none() && self.injector.is_done() {
            self.done_cycle = Some(now);
        }
    }
}

#[derive(Debug)]
enum Agent {
    Victim(Box<Victim>),
    Injector(Box<InjectorAgent>),
}

struct Master {
    name: String,
    bus: usize,
    agent: Agent,
}

pub struct Simulation {
    scenario: String,
    buses: Vec<Box<dyn Interconnect>>,
    masters: Vec<Master>,
    metrics: Vec<MasterMetrics>,
    now: u64,
    meta: RunMeta,
    completions: Vec<Transaction>,
}

fn topology_hash(t: &Topology, programs: &[Vec<DescriptorWords>]) -> String {
    let mut h = Sha256::new();
    h.update(t.to_toml().as_bytes());
    for words in programs {
        for w in words {
            h.update(w.word0.to_le_bytes());
            h.update(w.word1.to_le_bytes());
        }
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Validates `t`, instantiates every bus and master, and loads injector
/// programs.
pub fn build(t: &Topology) -> Result<Simulation, HarnessError> {
    t.validate()?;
    let mut buses = Vec::with_capacity(t.buses.len());
    for (i, b) in t.buses.iter().enumerate() {
        let target = TargetModel::new(b.latency).map_err(|e| HarnessError::Config {
            path: format!("buses[{i}].latency"),
            message: e.to_string(),
        })?;
        let bus = new_bus(
            &b.name,
            b.kind,
            target,
            b.policy,
            b.outstanding.unwrap_or(1),
        )
        .map_err(|e| HarnessError::Config {
            path: format!("buses[{i}]"),
            message: e.to_string(),
        })?;
        buses.push(bus);
    }

    let mut masters = Vec::with_capacity(t.masters.len());
    let mut metrics = Vec::with_capacity(t.masters.len());
    let mut programs = Vec::new();
    for (id, m) in t.masters.iter().enumerate() {
        let bus = t.bus_index(&m.bus).expect("validated bus reference");
        buses[bus].register_master(id);
        let (agent, role) = match m.role {
            MasterRole::Victim => {
                let spec = m.victim.clone().expect("validated victim spec");
                (
                    Agent::Victim(Box::new(Victim::new(spec, t.seed, id))),
                    Role::Victim,
                )
            }
            MasterRole::Injector => {
                let spec = m.injector.as_ref().expect("validated injector spec");
                let words = t.injector_words(id)?;
                let seq = emit_apb_sequence_words(&words, spec.ctrl_flags()).map_err(|source| {
                    HarnessError::Pattern {
                        master: m.name.clone(),
                        source,
                    }
                })?;
                programs.push(words);
                let agent = InjectorAgent {
                    injector: Injector::new(id),
                    program: seq.writes,
                    via: spec.program_via,
                    program_at: spec.program_at,
                    enabled: spec.enabled,
                    programmed: false,
                    programmer: None,
                    done_cycle: None,
                };
                (Agent::Injector(Box::new(agent)), Role::Injector)
            }
        };
        metrics.push(MasterMetrics::new(m.name.clone(), role));
        masters.push(Master {
            name: m.name.clone(),
            bus,
            agent,
        });
    }

    Ok(Simulation {
        scenario: "run".into(),
        buses,
        masters,
        metrics,
        now: 0,
        meta: RunMeta {
            topology_hash: topology_hash(t, &programs),
            seed: t.seed,
            cycles: 0,
            partial: false,
        },
        completions: Vec::new(),
    })
}

impl Simulation {
    pub fn set_scenario(&mut self, name: impl Into<String>) {
        self.scenario = name.into();
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Turns on bus event and injector stage tracing.
    pub fn set_tracing(&mut self, on: bool) {
        for b in &mut self.buses {
            b.trace().set_enabled(on);
        }
        for m in &mut self.masters {
            if let Agent::Injector(a) = &mut m.agent {
                a.injector.set_tracing(on);
            }
        }
    }

    pub fn master_id(&self, name: &str) -> Option<MasterId> {
        self.masters.iter().position(|m| m.name == name)
    }

    /// Configuration-port access to injector `name`.
    pub fn injector_mut(&mut self, name: &str) -> Option<&mut Injector> {
        self.masters
            .iter_mut()
            .find(|m| m.name == name)
            .and_then(|m| match &mut m.agent {
                Agent::Injector(a) => Some(&mut a.injector),
                Agent::Victim(_) => None,
            })
    }

    pub fn bus(&self, name: &str) -> Option<&dyn Interconnect> {
        self.buses
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
    }

    /// Bus trace of every bus, in cycle order.
    pub fn take_bus_trace(&mut self) -> Vec<BusTraceRecord> {
        let mut all: Vec<BusTraceRecord> = self
            .buses
            .iter_mut()
            .flat_map(|b| b.trace().take())
            .collect();
        all.sort_by_key(|r| r.cycle);
        all
    }

    pub fn take_stage_trace(&mut self) -> Vec<StageRecord> {
        let mut all: Vec<StageRecord> = self
            .masters
            .iter_mut()
            .filter_map(|m| match &mut m.agent {
                Agent::Injector(a) => Some(a.injector.take_trace()),
                Agent::Victim(_) => None,
            })
            .flatten()
            .collect();
        all.sort_by_key(|r| r.cycle);
        all
    }

    /// Simulates one cycle.
    pub fn advance(&mut self) {
        let now = self.now;

        for m in &mut self.masters {
            let Agent::Injector(a) = &mut m.agent else {
                continue;
            };
            if !a.enabled || a.programmed || a.programmer.is_some() || a.program_at != now {
                continue;
            }
            match a.via {
                ProgramVia::ConfigPort => {
                    for w in &a.program {
                        a.injector
                            .apb_write(w.offset, w.value)
                            .expect("program offsets lie in the register window");
                    }
                    a.programmed = true;
                }
                ProgramVia::DataBus => {
                    a.programmer = Some(DataBusProgrammer {
                        writes: a.program.iter().copied().collect(),
                        in_flight: None,
                    });
                }
            }
        }

        for bus in &mut self.buses {
            self.completions.clear();
            bus.begin_cycle(now, &mut self.completions);
            for t in &self.completions {
                self.metrics[t.master].record(t);
                match &mut self.masters[t.master].agent {
                    Agent::Victim(v) => v.complete(t.id, now),
                    Agent::Injector(a) => a.complete(t.id, now),
                }
            }
        }

        for (id, m) in self.masters.iter_mut().enumerate() {
            let mut port = MasterPort {
                bus: self.buses[m.bus].as_mut(),
                master: id,
            };
            match &mut m.agent {
                Agent::Victim(v) => v.step(now, &mut port),
                Agent::Injector(a) => a.step(now, &mut port),
            }
        }

        for bus in &mut self.buses {
            bus.end_cycle(now);
        }
        self.now += 1;
    }

    /// All victims finished their accesses and every enabled, non-looping
    /// injector raised DONE or ERR.
    pub fn finished(&self) -> bool {
        self.masters.iter().all(|m| match &m.agent {
            Agent::Victim(v) => v.is_done(),
            Agent::Injector(a) => a.finished(),
        })
    }

    pub fn metrics(&self) -> MetricsRecord {
        let masters = self
            .masters
            .iter()
            .zip(&self.metrics)
            .map(|(m, metrics)| {
                let mut out = metrics.clone();
                out.completion_cycle = match &m.agent {
                    Agent::Victim(v) => v.completion_cycle(),
                    Agent::Injector(a) => a.done_cycle,
                };
                out
            })
            .collect();
        MetricsRecord {
            scenario: self.scenario.clone(),
            masters,
            meta: RunMeta {
                cycles: self.now,
                ..self.meta.clone()
            },
        }
    }

    /// Advances until [`finished`](Self::finished) or `max_cycles` cycles
    /// have been simulated.
    pub fn run(&mut self, max_cycles: u64) -> Result<MetricsRecord, HarnessError> {
        while !(self.now > 0 && self.finished()) {
            if self.now >= max_cycles {
                let mut partial = self.metrics();
                partial.meta.partial = true;
                return Err(HarnessError::CycleLimitExceeded {
                    max_cycles,
                    partial: vec![partial],
                });
            }
            self.advance();
        }
        Ok(self.metrics())
    }
}

/// Builds and runs `t` once with its own cycle cap.
pub fn run(t: &Topology) -> Result<MetricsRecord, HarnessError> {
    build(t)?.run(t.max_cycles)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub baseline: MetricsRecord,
    pub contended: MetricsRecord,
    /// `(victim, contended completion / baseline completion)`
    pub slowdown: Vec<(String, f64)>,
}

/// Runs `t` with injectors disabled and as given, concurrently, and
/// attaches victim slowdowns to the contended record.
pub fn run_pair(t: &Topology) -> Result<PairResult, HarnessError> {
    t.validate()?;
    if !t.has_role(MasterRole::Victim) || !t.has_role(MasterRole::Injector) {
        return Err(HarnessError::Config {
            path: "masters".into(),
            message: "a paired run needs at least one victim and one injector".into(),
        });
    }
    let base_topo = t.without_injection();
    let mut base_sim = build(&base_topo)?;
    base_sim.set_scenario("baseline");
    let mut cont_sim = build(t)?;
    cont_sim.set_scenario("contended");

    let (baseline, contended) = std::thread::scope(|s| {
        let b = s.spawn(move || base_sim.run(t.max_cycles));
        let c = cont_sim.run(t.max_cycles);
        (b.join().expect("baseline run panicked"), c)
    });

    match (baseline, contended) {
        (Ok(baseline), Ok(mut contended)) => {
            let mut slowdown = Vec::new();
            for m in &mut contended.masters {
                if m.role != Role::Victim {
                    continue;
                }
                let base = baseline
                    .master(&m.name)
                    .and_then(|b| b.completion_cycle)
                    .expect("finished baseline victims have a completion cycle");
                let cont = m
                    .completion_cycle
                    .expect("finished victims have a completion cycle");
                let ratio = cont as f64 / base as f64;
                m.slowdown = Some(ratio);
                slowdown.push((m.name.clone(), ratio));
            }
            Ok(PairResult {
                baseline,
                contended,
                slowdown,
            })
        }
        (b, c) => {
            let mut partial = Vec::new();
            let mut limit = 0;
            for r in [b, c] {
                match r {
                    Ok(rec) => partial.push(rec),
                    Err(HarnessError::CycleLimitExceeded {
                        max_cycles,
                        partial: p,
                    }) => {
                        limit = max_cycles;
                        partial.extend(p);
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(HarnessError::CycleLimitExceeded {
                max_cycles: limit,
                partial,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOC: &str = r#"
        seed = 3
        [[buses]]
        name = "ahb"
        kind = "ahb"
        latency = 1

        [[masters]]
        name = "cpu"
        bus = "ahb"
        role = "victim"
        victim = { period = 2, count = 10, kind = "read", address = 0x100, size_bytes = 4 }

        [[masters]]
        name = "tig"
        bus = "ahb"
        role = "injector"
        injector = { program = "write 0x2000 size=4 reps=20" }
    "#;

    fn soc() -> Topology {
        Topology::from_toml_str(SOC).unwrap()
    }

    #[test]
    fn victim_alone_runs_at_its_period() {
        let t = soc().without_injection();
        let m = run(&t).unwrap();
        let cpu = m.master("cpu").unwrap();
        assert_eq!(cpu.txn_count(), 10);
        // read issued at 18, granted at 18, completes at 18 + 1 + 1
        assert_eq!(cpu.completion_cycle, Some(20));
        assert!(cpu.latencies().iter().all(|&l| l == 2));
        assert_eq!(m.master("tig").unwrap().txn_count(), 0);
    }

    #[test]
    fn injector_completes_its_program() {
        let m = run(&soc()).unwrap();
        assert_eq!(m.master("tig").unwrap().txn_count(), 20);
        assert_eq!(m.master("tig").unwrap().total_bytes(), 80);
        assert!(m.master("tig").unwrap().completion_cycle.is_some());
    }

    #[test]
    fn pair_reports_slowdown_for_victims_only() {
        let r = run_pair(&soc()).unwrap();
        assert_eq!(r.baseline.scenario, "baseline");
        assert_eq!(r.contended.scenario, "contended");
        assert_eq!(r.slowdown.len(), 1);
        assert!(r.slowdown[0].1 >= 1.0);
        assert!(r.contended.master("tig").unwrap().slowdown.is_none());
        assert_eq!(r.baseline.meta.seed, 3);
    }

    #[test]
    fn pair_requires_both_roles() {
        assert!(matches!(
            run_pair(&soc().victims_only()),
            Err(HarnessError::Config { .. })
        ));
    }

    #[test]
    fn cycle_limit_returns_partial_metrics() {
        let mut t = soc();
        t.max_cycles = 5;
        match run(&t) {
            Err(HarnessError::CycleLimitExceeded {
                max_cycles,
                partial,
            }) => {
                assert_eq!(max_cycles, 5);
                assert_eq!(partial.len(), 1);
                assert!(partial[0].meta.partial);
                assert_eq!(partial[0].meta.cycles, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn data_bus_programming_costs_bus_writes() {
        let mut t = soc();
        t.masters[1].injector.as_mut().unwrap().program_via = ProgramVia::DataBus;
        let m = run(&t).unwrap();
        // two buffer words plus CTRL, then the program itself
        let tig = m.master("tig").unwrap();
        assert_eq!(tig.txn_count(), 3 + 20);
        let base = run(&soc()).unwrap();
        assert!(m.meta.cycles > base.meta.cycles);
    }

    #[test]
    fn program_at_delays_start() {
        let mut t = soc().victims_only();
        t.masters.push(soc().masters[1].clone());
        t.masters[1].injector.as_mut().unwrap().program_at = 50;
        let m = run(&t).unwrap();
        assert!(m.master("tig").unwrap().first_request().unwrap() >= 50);
    }

    #[test]
    fn same_seed_same_hash_and_results() {
        let a = run(&soc()).unwrap();
        let b = run(&soc()).unwrap();
        assert_eq!(a, b);
        let mut t = soc();
        t.seed = 4;
        assert_ne!(run(&t).unwrap().meta.topology_hash, a.meta.topology_hash);
    }

    #[test]
    fn tracing_collects_bus_and_stage_records() {
        let mut sim = build(&soc()).unwrap();
        sim.set_tracing(true);
        sim.run(10_000).unwrap();
        let bus = sim.take_bus_trace();
        assert_eq!(
            bus.iter()
                .filter(|r| r.event == crate::interconnect::BusEvent::Req)
                .count(),
            30
        );
        assert!(!sim.take_stage_trace().is_empty());
        assert!(bus.windows(2).all(|w| w[0].cycle <= w[1].cycle));
    }

    #[test]
    fn config_port_reads_back_status() {
        let mut sim = build(&soc()).unwrap();
        sim.run(10_000).unwrap();
        let inj = sim.injector_mut("tig").unwrap();
        assert_eq!(inj.apb_read(crate::injector::regs::STATUS).unwrap() & 1, 1);
        assert!(sim.injector_mut("cpu").is_none());
    }
}

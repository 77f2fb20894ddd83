//! Programmable traffic injector.
//!
//! The injector owns a 256-word descriptor buffer and a small register file,
//! both reachable only through the configuration port ([`Injector::apb_write`]
//! and [`Injector::apb_read`]). Configuration accesses never touch the data
//! interconnect.
//!
//! Once enabled, a three-stage engine walks the buffer:
//!
//! * FETCH reads both words of one descriptor (1 cycle),
//! * DECODE validates it (1 cycle); an invalid descriptor latches ERR and
//!   stops further fetches,
//! * EXEC presents one bus request per repetition and waits for each to
//!   complete, or counts down a DELAY.
//!
//! In pipelined mode each stage holds its own descriptor, so the next
//! descriptor is ready when EXEC frees up. In legacy mode the engine handles
//! one descriptor at a time and only fetches the next one once EXEC is idle,
//! which leaves a two-cycle gap between descriptors.

pub mod regs;

use std::fmt;

use thiserror::Error;

use crate::descriptor::{decode, Descriptor, DescriptorKind, DescriptorWords};
use crate::interconnect::{AccessKind, Interconnect, MasterId, TxnId};
use regs::{ctrl, status, FsmState};

/// The data-side interface an injector drives.
pub trait BusPort {
    fn submit(&mut self, kind: AccessKind, address: u32, size_bytes: u32, now: u64) -> TxnId;
}

/// Binds one master of an interconnect as a [`BusPort`].
pub struct MasterPort<'a> {
    pub bus: &'a mut dyn Interconnect,
    pub master: MasterId,
}

impl BusPort for MasterPort<'_> {
    fn submit(&mut self, kind: AccessKind, address: u32, size_bytes: u32, now: u64) -> TxnId {
        self.bus
            .submit(self.master, kind, address, size_bytes, now)
            .expect("injector master must be registered on its bus")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("configuration offset {0:#x} outside the register window")]
pub struct OffsetOutOfRange(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fetch,
    Decode,
    Exec,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Fetch => "FETCH",
            Stage::Decode => "DECODE",
            Stage::Exec => "EXEC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageEvent {
    Fetch { index: usize },
    Overrun,
    Decoded { index: usize },
    DecodeError { index: usize },
    Issue { index: usize, rep: u32, txn: TxnId },
    DelayStart { index: usize, rep: u32, cycles: u32 },
    Retire { index: usize },
    Done,
    Halted,
}

impl fmt::Display for StageEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageEvent::Fetch { index } => write!(f, "fetch idx={index}"),
            StageEvent::Overrun => f.write_str("overrun"),
            StageEvent::Decoded { index } => write!(f, "decoded idx={index}"),
            StageEvent::DecodeError { index } => write!(f, "decode_error idx={index}"),
            StageEvent::Issue { index, rep, txn } => {
                write!(f, "issue idx={index} rep={rep} txn={txn}")
            }
            StageEvent::DelayStart { index, rep, cycles } => {
                write!(f, "delay idx={index} rep={rep} cycles={cycles}")
            }
            StageEvent::Retire { index } => write!(f, "retire idx={index}"),
            StageEvent::Done => f.write_str("done"),
            StageEvent::Halted => f.write_str("halted"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRecord {
    pub cycle: u64,
    pub injector: usize,
    pub stage: Stage,
    pub event: StageEvent,
}

pub const STAGE_CSV_HEADER: &str = "cycle,injector_id,stage,event";

pub fn stage_trace_csv(records: &[StageRecord]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(STAGE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.cycle, r.injector, r.stage, r.event);
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Bus { txn: TxnId, done: bool },
    Delay { until: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Exec {
    index: usize,
    desc: Descriptor,
    rep: u32,
    phase: Phase,
}

#[derive(Debug, Clone, Copy)]
struct Fetched {
    index: usize,
    words: DescriptorWords,
}

#[derive(Debug, Clone)]
struct Engine {
    pipelined: bool,
    /// Next buffer descriptor to fetch; `None` once the sequencer stopped.
    next_fetch: Option<usize>,
    fetched: Option<Fetched>,
    decoded: Option<(usize, Descriptor)>,
    exec: Option<Exec>,
    faulted: bool,
}

impl Engine {
    fn new(pipelined: bool) -> Self {
        Engine {
            pipelined,
            next_fetch: Some(0),
            fetched: None,
            decoded: None,
            exec: None,
            faulted: false,
        }
    }

    fn drained(&self) -> bool {
        self.next_fetch.is_none()
            && self.fetched.is_none()
            && self.decoded.is_none()
            && self.exec.is_none()
    }

    fn state(&self) -> FsmState {
        if self.exec.is_some() || self.decoded.is_some() {
            FsmState::Exec
        } else if self.fetched.is_some() {
            FsmState::Decode
        } else {
            FsmState::Fetch
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Status {
    done: bool,
    err: bool,
    irq: bool,
    errinfo: u32,
    completed: u32,
}

#[derive(Debug, Clone)]
pub struct Injector {
    id: usize,
    ctrl: u32,
    buffer: Box<[u32; regs::BUFFER_WORDS]>,
    status: Status,
    engine: Option<Engine>,
    trace: Option<Vec<StageRecord>>,
}

impl Default for Injector {
    fn default() -> Self {
        Injector::new(0)
    }
}

impl Injector {
    pub fn new(id: usize) -> Self {
        Injector {
            id,
            ctrl: ctrl::RESET_VALUE,
            buffer: Box::new([0; regs::BUFFER_WORDS]),
            status: Status::default(),
            engine: None,
            trace: None,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.trace = on.then(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<StageRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn emit(&mut self, cycle: u64, stage: Stage, event: StageEvent) {
        if let Some(t) = &mut self.trace {
            t.push(StageRecord {
                cycle,
                injector: self.id,
                stage,
                event,
            });
        }
    }

    /// Back to the reset state; buffer contents survive.
    pub fn reset(&mut self) {
        self.ctrl = ctrl::RESET_VALUE;
        self.status = Status::default();
        self.engine = None;
    }

    pub fn apb_write(&mut self, offset: u32, value: u32) -> Result<(), OffsetOutOfRange> {
        if offset >= regs::WINDOW_SIZE {
            return Err(OffsetOutOfRange(offset));
        }
        let offset = offset & !3;
        if let Some(i) = regs::buffer_index(offset) {
            self.buffer[i] = value;
        } else if offset == regs::CTRL {
            self.write_ctrl(value);
        }
        Ok(())
    }

    pub fn apb_read(&self, offset: u32) -> Result<u32, OffsetOutOfRange> {
        if offset >= regs::WINDOW_SIZE {
            return Err(OffsetOutOfRange(offset));
        }
        let offset = offset & !3;
        Ok(match offset {
            regs::CTRL => self.ctrl,
            regs::STATUS => self.status_word(),
            regs::ERRINFO => self.status.errinfo,
            regs::CAP => regs::BUFFER_WORDS as u32,
            _ => regs::buffer_index(offset).map_or(0, |i| self.buffer[i]),
        })
    }

    fn write_ctrl(&mut self, value: u32) {
        if value & ctrl::RST != 0 {
            self.reset();
            return;
        }
        let was_enabled = self.ctrl & ctrl::EN != 0;
        self.ctrl = value & ctrl::WRITABLE;
        let enabled = self.ctrl & ctrl::EN != 0;
        match (was_enabled, enabled) {
            (false, true) => {
                self.status = Status::default();
                self.engine = Some(Engine::new(self.ctrl & ctrl::PIPE_EN != 0));
            }
            (true, false) => self.engine = None,
            _ => {}
        }
    }

    fn status_word(&self) -> u32 {
        let s = &self.status;
        let state = match &self.engine {
            Some(e) => e.state(),
            None if s.err => FsmState::Error,
            None if s.done => FsmState::Done,
            None => FsmState::Idle,
        };
        let mut w = (state as u32) << status::STATE_SHIFT;
        w |= s.completed.min(0xffff) << status::COUNT_SHIFT;
        if s.done {
            w |= status::DONE;
        }
        if s.err {
            w |= status::ERR;
        }
        if self.engine.is_some() {
            w |= status::BUSY;
        }
        if s.irq {
            w |= status::IRQ;
        }
        w
    }

    pub fn is_busy(&self) -> bool {
        self.engine.is_some()
    }

    pub fn is_done(&self) -> bool {
        self.status.done
    }

    pub fn has_error(&self) -> bool {
        self.status.err
    }

    pub fn loop_enabled(&self) -> bool {
        self.ctrl & ctrl::LOOP != 0
    }

    /// Descriptors whose EXEC finished since the last enable.
    pub fn completed_descriptors(&self) -> u32 {
        self.status.completed
    }

    pub fn buffer(&self) -> &[u32] {
        &self.buffer[..]
    }

    /// Notifies the injector that bus transaction `txn` completed at `now`.
    /// Completions of transactions it no longer waits for are ignored.
    pub fn complete(&mut self, txn: TxnId, _now: u64) {
        if let Some(Exec {
            phase: Phase::Bus { txn: waiting, done },
            ..
        }) = self.engine.as_mut().and_then(|e| e.exec.as_mut())
        {
            if *waiting == txn {
                *done = true;
            }
        }
    }

    fn start_rep(&mut self, exec: &mut Exec, now: u64, port: &mut dyn BusPort) {
        let d = exec.desc;
        exec.phase = match d.kind {
            DescriptorKind::Delay => {
                let cycles = d.delay_cycles.expect("decoded delay carries its length");
                self.emit(
                    now,
                    Stage::Exec,
                    StageEvent::DelayStart {
                        index: exec.index,
                        rep: exec.rep,
                        cycles,
                    },
                );
                Phase::Delay {
                    until: now + cycles as u64,
                }
            }
            kind => {
                let access = if kind.is_write() {
                    AccessKind::Write
                } else {
                    AccessKind::Read
                };
                let txn = port.submit(access, d.address_of_rep(exec.rep), d.size_bytes, now);
                self.emit(
                    now,
                    Stage::Exec,
                    StageEvent::Issue {
                        index: exec.index,
                        rep: exec.rep,
                        txn,
                    },
                );
                Phase::Bus { txn, done: false }
            }
        };
    }

    /// Advances the engine by one cycle. Must be called once per cycle with
    /// increasing `now`, after completions for `now` were delivered.
    pub fn step(&mut self, now: u64, port: &mut dyn BusPort) {
        let Some(mut engine) = self.engine.take() else {
            return;
        };

        // EXEC
        if let Some(mut exec) = engine.exec.take() {
            let rep_finished = match exec.phase {
                Phase::Bus { done, .. } => done,
                Phase::Delay { until } => now >= until,
            };
            if !rep_finished {
                engine.exec = Some(exec);
            } else {
                exec.rep += 1;
                if exec.rep < exec.desc.reps {
                    self.start_rep(&mut exec, now, port);
                    engine.exec = Some(exec);
                } else {
                    self.status.completed = self.status.completed.saturating_add(1);
                    if exec.desc.irq_on_done && self.ctrl & ctrl::IRQ_EN != 0 {
                        self.status.irq = true;
                    }
                    self.emit(now, Stage::Exec, StageEvent::Retire { index: exec.index });
                }
            }
        }
        if engine.exec.is_none() {
            if let Some((index, desc)) = engine.decoded.take() {
                let mut exec = Exec {
                    index,
                    desc,
                    rep: 0,
                    phase: Phase::Delay { until: now },
                };
                self.start_rep(&mut exec, now, port);
                engine.exec = Some(exec);
            }
        }

        // DECODE
        if engine.decoded.is_none() {
            if let Some(f) = engine.fetched.take() {
                match decode(f.words) {
                    Ok(d) => {
                        engine.decoded = Some((f.index, d));
                        self.emit(now, Stage::Decode, StageEvent::Decoded { index: f.index });
                    }
                    Err(_) => {
                        self.status.err = true;
                        self.status.errinfo = 2 * f.index as u32;
                        engine.faulted = true;
                        engine.next_fetch = None;
                        self.emit(
                            now,
                            Stage::Decode,
                            StageEvent::DecodeError { index: f.index },
                        );
                    }
                }
            }
        }

        // FETCH
        let stage_free = if engine.pipelined {
            engine.fetched.is_none()
        } else {
            engine.fetched.is_none() && engine.decoded.is_none() && engine.exec.is_none()
        };
        if stage_free {
            if let Some(index) = engine.next_fetch {
                if index >= regs::BUFFER_DESCRIPTORS {
                    self.status.err = true;
                    self.status.errinfo = regs::ERRINFO_OVERRUN;
                    engine.faulted = true;
                    engine.next_fetch = None;
                    self.emit(now, Stage::Fetch, StageEvent::Overrun);
                } else {
                    let words =
                        DescriptorWords::new(self.buffer[2 * index], self.buffer[2 * index + 1]);
                    engine.fetched = Some(Fetched { index, words });
                    // The sequencer follows the raw `last` bit; DECODE
                    // still rejects malformed words.
                    engine.next_fetch = if words.word0 & 1 == 0 {
                        Some(index + 1)
                    } else if self.loop_enabled() {
                        Some(0)
                    } else {
                        None
                    };
                    self.emit(now, Stage::Fetch, StageEvent::Fetch { index });
                }
            }
        }

        if engine.drained() {
            if engine.faulted {
                self.emit(now, Stage::Exec, StageEvent::Halted);
            } else {
                self.status.done = true;
                self.emit(now, Stage::Exec, StageEvent::Done);
            }
        } else {
            self.engine = Some(engine);
        }
    }
}

//! C ABI over `tig-core`.
//!
//! Every function returns a [`TigStatus`]. On failure a message is kept per
//! thread and can be read with [`tig_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tig_core::descriptor::{self, Descriptor, DescriptorError, DescriptorKind, DescriptorWords};
use tig_core::harness::{self, HarnessError, Simulation, Topology};
use tig_core::injector::Injector;
use tig_core::metrics::{emit_csv, MetricsRecord};
use tig_core::pattern;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TigStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDescriptor = 3,
    InvalidKindCode = 4,
    ReservedBitsSet = 5,
    ZeroDelay = 6,
    PatternError = 7,
    ConfigError = 8,
    IoError = 9,
    CycleLimitExceeded = 10,
    OffsetOutOfRange = 11,
    BufferTooSmall = 12,
    NotFound = 13,
    Panic = 14,
}

/// Decoded descriptor. `kind` uses the on-wire kind codes (1 = delay,
/// 2 = read, 3 = write, 4 = read_fix, 5 = write_fix). `delay_cycles` is 0
/// for non-delay kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TigDescriptor {
    pub kind: u32,
    pub address: u32,
    pub size_bytes: u32,
    pub delay_cycles: u32,
    pub reps: u32,
    pub last: bool,
    pub irq_on_done: bool,
}

pub struct TigInjector {
    inner: Injector,
}

pub struct TigSim {
    inner: Simulation,
    max_cycles: u64,
}

pub struct TigMetrics {
    records: Vec<MetricsRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: TigStatus, message: impl Into<String>) -> TigStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
    status
}

fn guard(f: impl FnOnce() -> TigStatus) -> TigStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TigStatus::Panic, "internal panic"),
    }
}

fn descriptor_status(e: &DescriptorError) -> TigStatus {
    let s = match e {
        DescriptorError::InvalidDescriptor(_) => TigStatus::InvalidDescriptor,
        DescriptorError::InvalidKindCode(_) => TigStatus::InvalidKindCode,
        DescriptorError::ReservedBitsSet(_) => TigStatus::ReservedBitsSet,
        DescriptorError::ZeroDelay => TigStatus::ZeroDelay,
    };
    fail(s, e.to_string())
}

fn harness_status(e: &HarnessError) -> TigStatus {
    let s = match e {
        HarnessError::Config { .. } => TigStatus::ConfigError,
        HarnessError::Pattern { .. } => TigStatus::PatternError,
        HarnessError::Io { .. } => TigStatus::IoError,
        HarnessError::CycleLimitExceeded { .. } => TigStatus::CycleLimitExceeded,
    };
    fail(s, e.to_string())
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, TigStatus> {
    if p.is_null() {
        return Err(fail(TigStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TigStatus::InvalidArgument, "string is not UTF-8"))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tig_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `d` must point to a valid descriptor; `word0`/`word1` to writable words.
#[no_mangle]
pub unsafe extern "C" fn tig_descriptor_encode(
    d: *const TigDescriptor,
    word0: *mut u32,
    word1: *mut u32,
) -> TigStatus {
    guard(|| {
        if d.is_null() || word0.is_null() || word1.is_null() {
            return fail(TigStatus::NullPointer, "null argument");
        }
        let d = &*d;
        let Some(kind) = DescriptorKind::from_code(d.kind) else {
            return fail(TigStatus::InvalidKindCode, format!("kind code {}", d.kind));
        };
        let desc = Descriptor {
            kind,
            address: d.address,
            size_bytes: d.size_bytes,
            delay_cycles: kind.is_delay().then_some(d.delay_cycles),
            reps: d.reps,
            last: d.last,
            irq_on_done: d.irq_on_done,
        };
        match descriptor::encode(&desc) {
            Ok(w) => {
                *word0 = w.word0;
                *word1 = w.word1;
                TigStatus::Ok
            }
            Err(e) => descriptor_status(&e),
        }
    })
}

/// # Safety
/// `out` must point to writable storage for one descriptor.
#[no_mangle]
pub unsafe extern "C" fn tig_descriptor_decode(
    word0: u32,
    word1: u32,
    out: *mut TigDescriptor,
) -> TigStatus {
    guard(|| {
        if out.is_null() {
            return fail(TigStatus::NullPointer, "null argument");
        }
        match descriptor::decode(DescriptorWords::new(word0, word1)) {
            Ok(d) => {
                *out = TigDescriptor {
                    kind: d.kind.code(),
                    address: d.address,
                    size_bytes: d.size_bytes,
                    delay_cycles: d.delay_cycles.unwrap_or(0),
                    reps: d.reps,
                    last: d.last,
                    irq_on_done: d.irq_on_done,
                };
                TigStatus::Ok
            }
            Err(e) => descriptor_status(&e),
        }
    })
}

/// Compiles pattern source into descriptor words (word0, word1 pairs).
/// `*len` receives the number of words, even when `cap` is too small.
///
/// # Safety
/// `source` must be a NUL-terminated string, `words` null or `cap`
/// writable words, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_pattern_compile(
    source: *const c_char,
    words: *mut u32,
    cap: usize,
    len: *mut usize,
) -> TigStatus {
    guard(|| {
        if len.is_null() {
            return fail(TigStatus::NullPointer, "null length");
        }
        let src = match c_str(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let compiled = match pattern::compile(src) {
            Ok(w) => w,
            Err(e) => return fail(TigStatus::PatternError, e.to_string()),
        };
        let flat: Vec<u32> = compiled.iter().flat_map(|w| [w.word0, w.word1]).collect();
        *len = flat.len();
        if flat.len() > cap || (words.is_null() && !flat.is_empty()) {
            return fail(
                TigStatus::BufferTooSmall,
                format!("{} words needed", flat.len()),
            );
        }
        ptr::copy_nonoverlapping(flat.as_ptr(), words, flat.len());
        TigStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn tig_injector_new(id: u32) -> *mut TigInjector {
    Box::into_raw(Box::new(TigInjector {
        inner: Injector::new(id as usize),
    }))
}

/// # Safety
/// `h` must be null or a handle from [`tig_injector_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tig_injector_free(h: *mut TigInjector) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Configuration-port write.
///
/// # Safety
/// `h` must be a live injector handle.
#[no_mangle]
pub unsafe extern "C" fn tig_injector_write(
    h: *mut TigInjector,
    offset: u32,
    value: u32,
) -> TigStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(TigStatus::NullPointer, "null injector");
        };
        match h.inner.apb_write(offset, value) {
            Ok(()) => TigStatus::Ok,
            Err(e) => fail(TigStatus::OffsetOutOfRange, e.to_string()),
        }
    })
}

/// Configuration-port read.
///
/// # Safety
/// `h` must be a live injector handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_injector_read(
    h: *const TigInjector,
    offset: u32,
    value: *mut u32,
) -> TigStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), value.is_null()) else {
            return fail(TigStatus::NullPointer, "null argument");
        };
        match h.inner.apb_read(offset) {
            Ok(v) => {
                *value = v;
                TigStatus::Ok
            }
            Err(e) => fail(TigStatus::OffsetOutOfRange, e.to_string()),
        }
    })
}

fn new_sim(t: Result<Topology, HarnessError>, out: *mut *mut TigSim) -> TigStatus {
    let t = match t {
        Ok(t) => t,
        Err(e) => return harness_status(&e),
    };
    match harness::build(&t) {
        Ok(inner) => {
            // SAFETY: callers check `out` for null.
            unsafe {
                *out = Box::into_raw(Box::new(TigSim {
                    inner,
                    max_cycles: t.max_cycles,
                }))
            };
            TigStatus::Ok
        }
        Err(e) => harness_status(&e),
    }
}

/// Builds a simulation from a topology file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_load(path: *const c_char, out: *mut *mut TigSim) -> TigStatus {
    guard(|| {
        if out.is_null() {
            return fail(TigStatus::NullPointer, "null output");
        }
        match c_str(path) {
            Ok(p) => new_sim(Topology::load(Path::new(p)), out),
            Err(s) => s,
        }
    })
}

/// Builds a simulation from topology text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_from_str(text: *const c_char, out: *mut *mut TigSim) -> TigStatus {
    guard(|| {
        if out.is_null() {
            return fail(TigStatus::NullPointer, "null output");
        }
        match c_str(text) {
            Ok(t) => new_sim(Topology::from_toml_str(t), out),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `h` must be null or a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_free(h: *mut TigSim) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Simulates one cycle.
///
/// # Safety
/// `h` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_step(h: *mut TigSim) -> TigStatus {
    guard(|| match h.as_mut() {
        Some(h) => {
            h.inner.advance();
            TigStatus::Ok
        }
        None => fail(TigStatus::NullPointer, "null simulation"),
    })
}

/// Current cycle, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_now(h: *const TigSim) -> u64 {
    h.as_ref().map_or(0, |h| h.inner.now())
}

/// Configuration-port write to the injector named `name`.
///
/// # Safety
/// `h` must be a live simulation handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_injector_write(
    h: *mut TigSim,
    name: *const c_char,
    offset: u32,
    value: u32,
) -> TigStatus {
    guard(|| {
        let Some(h) = h.as_mut() else {
            return fail(TigStatus::NullPointer, "null simulation");
        };
        let name = match c_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let Some(inj) = h.inner.injector_mut(name) else {
            return fail(TigStatus::NotFound, format!("no injector named '{name}'"));
        };
        match inj.apb_write(offset, value) {
            Ok(()) => TigStatus::Ok,
            Err(e) => fail(TigStatus::OffsetOutOfRange, e.to_string()),
        }
    })
}

/// Runs to completion or to `max_cycles` (0 means the topology's own cap).
/// On `CycleLimitExceeded` the partial metrics are still returned.
///
/// # Safety
/// `h` must be a live simulation handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_sim_run(
    h: *mut TigSim,
    max_cycles: u64,
    out: *mut *mut TigMetrics,
) -> TigStatus {
    guard(|| {
        let (Some(h), false) = (h.as_mut(), out.is_null()) else {
            return fail(TigStatus::NullPointer, "null argument");
        };
        let cap = if max_cycles == 0 {
            h.max_cycles
        } else {
            max_cycles
        };
        let (records, status) = match h.inner.run(cap) {
            Ok(m) => (vec![m], TigStatus::Ok),
            Err(HarnessError::CycleLimitExceeded {
                max_cycles,
                partial,
            }) => (
                partial,
                fail(
                    TigStatus::CycleLimitExceeded,
                    format!("cycle limit of {max_cycles} reached"),
                ),
            ),
            Err(e) => return harness_status(&e),
        };
        *out = Box::into_raw(Box::new(TigMetrics { records }));
        status
    })
}

/// Runs a topology file with and without its injectors.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_run_pair(path: *const c_char, out: *mut *mut TigMetrics) -> TigStatus {
    guard(|| {
        if out.is_null() {
            return fail(TigStatus::NullPointer, "null output");
        }
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let t = match Topology::load(Path::new(path)) {
            Ok(t) => t,
            Err(e) => return harness_status(&e),
        };
        let (records, status) = match harness::run_pair(&t) {
            Ok(r) => (vec![r.baseline, r.contended], TigStatus::Ok),
            Err(HarnessError::CycleLimitExceeded {
                max_cycles,
                partial,
            }) => (
                partial,
                fail(
                    TigStatus::CycleLimitExceeded,
                    format!("cycle limit of {max_cycles} reached"),
                ),
            ),
            Err(e) => return harness_status(&e),
        };
        *out = Box::into_raw(Box::new(TigMetrics { records }));
        status
    })
}

/// # Safety
/// `m` must be null or a live metrics handle.
#[no_mangle]
pub unsafe extern "C" fn tig_metrics_free(m: *mut TigMetrics) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the metrics CSV into `buf`. `*len` receives the byte count
/// (without terminator) even when `cap` is too small; a NUL terminator is
/// written when room allows.
///
/// # Safety
/// `m` must be a live metrics handle, `buf` null or `cap` writable bytes,
/// `len` writable.
#[no_mangle]
pub unsafe extern "C" fn tig_metrics_csv(
    m: *const TigMetrics,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> TigStatus {
    guard(|| {
        let (Some(m), false) = (m.as_ref(), len.is_null()) else {
            return fail(TigStatus::NullPointer, "null argument");
        };
        let csv = emit_csv(&m.records);
        *len = csv.len();
        if buf.is_null() || cap < csv.len() + 1 {
            return fail(
                TigStatus::BufferTooSmall,
                format!("{} bytes needed", csv.len() + 1),
            );
        }
        ptr::copy_nonoverlapping(csv.as_ptr(), buf as *mut u8, csv.len());
        *buf.add(csv.len()) = 0;
        TigStatus::Ok
    })
}

/// Completion cycle and slowdown of master `name` in the last scenario of
/// `m`. `*slowdown` is 0 when not available.
///
/// # Safety
/// `m` must be a live metrics handle, `name` a NUL-terminated string, and
/// the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn tig_metrics_master(
    m: *const TigMetrics,
    name: *const c_char,
    completion_cycle: *mut u64,
    slowdown: *mut f64,
) -> TigStatus {
    guard(|| {
        let (Some(m), false, false) = (m.as_ref(), completion_cycle.is_null(), slowdown.is_null())
        else {
            return fail(TigStatus::NullPointer, "null argument");
        };
        let name = match c_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let Some(master) = m.records.last().and_then(|r| r.master(name)) else {
            return fail(TigStatus::NotFound, format!("no master named '{name}'"));
        };
        let Some(cycle) = master.completion_cycle else {
            return fail(TigStatus::NotFound, format!("'{name}' did not complete"));
        };
        *completion_cycle = cycle;
        *slowdown = master.slowdown.unwrap_or(0.0);
        TigStatus::Ok
    })
}

//! Traffic descriptors and their two-word binary encoding.
//!
//! A descriptor is the unit of work the injector executes. On the wire (and in
//! the injector's descriptor buffer) it occupies two 32-bit words:
//!
//! ```text
//! word0: [31:26] reserved (0) | [25:13] size-1 | [12:7] reps-1 | [6] irq | [5:1] kind | [0] last
//! word1: target address, or the delay length for DELAY descriptors
//! ```

use std::fmt;

use thiserror::Error;

pub const MAX_SIZE_BYTES: u32 = 8192;
pub const MAX_REPS: u32 = 64;

const LAST_BIT: u32 = 1 << 0;
const KIND_SHIFT: u32 = 1;
const KIND_MASK: u32 = 0x1f;
const IRQ_BIT: u32 = 1 << 6;
const REPS_SHIFT: u32 = 7;
const REPS_MASK: u32 = 0x3f;
const SIZE_SHIFT: u32 = 13;
const SIZE_MASK: u32 = 0x1fff;
const RESERVED_MASK: u32 = 0xfc00_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DescriptorKind {
    Delay,
    Read,
    Write,
    ReadFix,
    WriteFix,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 5] = [
        DescriptorKind::Delay,
        DescriptorKind::Read,
        DescriptorKind::Write,
        DescriptorKind::ReadFix,
        DescriptorKind::WriteFix,
    ];

    pub fn code(self) -> u32 {
        match self {
            DescriptorKind::Delay => 1,
            DescriptorKind::Read => 2,
            DescriptorKind::Write => 3,
            DescriptorKind::ReadFix => 4,
            DescriptorKind::WriteFix => 5,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn is_delay(self) -> bool {
        self == DescriptorKind::Delay
    }

    /// FIX kinds hammer one address; the others stream.
    pub fn is_fixed(self) -> bool {
        matches!(self, DescriptorKind::ReadFix | DescriptorKind::WriteFix)
    }

    pub fn is_write(self) -> bool {
        matches!(self, DescriptorKind::Write | DescriptorKind::WriteFix)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            DescriptorKind::Delay => "delay",
            DescriptorKind::Read => "read",
            DescriptorKind::Write => "write",
            DescriptorKind::ReadFix => "read_fix",
            DescriptorKind::WriteFix => "write_fix",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// A decoded traffic action.
///
/// `address` is not encoded for DELAY descriptors and must be zero there;
/// `delay_cycles` is present only for DELAY.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor {
    pub kind: DescriptorKind,
    pub address: u32,
    pub size_bytes: u32,
    pub delay_cycles: Option<u32>,
    pub reps: u32,
    pub last: bool,
    pub irq_on_done: bool,
}

impl Descriptor {
    pub fn access(kind: DescriptorKind, address: u32, size_bytes: u32, reps: u32) -> Self {
        Descriptor {
            kind,
            address,
            size_bytes,
            delay_cycles: None,
            reps,
            last: false,
            irq_on_done: false,
        }
    }

    pub fn delay(cycles: u32) -> Self {
        Descriptor {
            kind: DescriptorKind::Delay,
            address: 0,
            size_bytes: 1,
            delay_cycles: Some(cycles),
            reps: 1,
            last: false,
            irq_on_done: false,
        }
    }

    pub fn with_last(mut self, last: bool) -> Self {
        self.last = last;
        self
    }

    pub fn with_irq(mut self, irq: bool) -> Self {
        self.irq_on_done = irq;
        self
    }

    /// Address of repetition `rep` (0-based).
    pub fn address_of_rep(&self, rep: u32) -> u32 {
        if self.kind.is_fixed() {
            self.address
        } else {
            self.address.wrapping_add(self.size_bytes.wrapping_mul(rep))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DescriptorWords {
    pub word0: u32,
    pub word1: u32,
}

impl DescriptorWords {
    pub fn new(word0: u32, word1: u32) -> Self {
        DescriptorWords { word0, word1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    SizeOutOfRange,
    RepsOutOfRange,
    MissingDelay,
    ZeroDelay,
    UnexpectedDelay,
    DelayAddressNonZero,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::SizeOutOfRange => "size out of range",
            Violation::RepsOutOfRange => "reps out of range",
            Violation::MissingDelay => "delay descriptor without delay_cycles",
            Violation::ZeroDelay => "delay_cycles must be at least 1",
            Violation::UnexpectedDelay => "delay_cycles set on a non-delay descriptor",
            Violation::DelayAddressNonZero => "address must be zero for delay descriptors",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("invalid descriptor: {}", join_violations(.0))]
    InvalidDescriptor(Vec<Violation>),
    #[error("invalid kind code {0}")]
    InvalidKindCode(u32),
    #[error("reserved bits set in control word: {0:#010x}")]
    ReservedBitsSet(u32),
    #[error("delay descriptor with zero delay")]
    ZeroDelay,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Lists every invariant `d` breaks. Empty means valid.
pub fn validate(d: &Descriptor) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(1..=MAX_SIZE_BYTES).contains(&d.size_bytes) {
        out.push(Violation::SizeOutOfRange);
    }
    if !(1..=MAX_REPS).contains(&d.reps) {
        out.push(Violation::RepsOutOfRange);
    }
    match (d.kind.is_delay(), d.delay_cycles) {
        (true, None) => out.push(Violation::MissingDelay),
        (true, Some(0)) => out.push(Violation::ZeroDelay),
        (false, Some(_)) => out.push(Violation::UnexpectedDelay),
        _ => {}
    }
    if d.kind.is_delay() && d.address != 0 {
        out.push(Violation::DelayAddressNonZero);
    }
    out
}

pub fn encode(d: &Descriptor) -> Result<DescriptorWords, DescriptorError> {
    let violations = validate(d);
    if !violations.is_empty() {
        return Err(DescriptorError::InvalidDescriptor(violations));
    }
    let mut word0 = d.kind.code() << KIND_SHIFT;
    if d.last {
        word0 |= LAST_BIT;
    }
    if d.irq_on_done {
        word0 |= IRQ_BIT;
    }
    word0 |= (d.reps - 1) << REPS_SHIFT;
    word0 |= (d.size_bytes - 1) << SIZE_SHIFT;
    let word1 = match d.delay_cycles {
        Some(cycles) => cycles,
        None => d.address,
    };
    Ok(DescriptorWords { word0, word1 })
}

pub fn decode(w: DescriptorWords) -> Result<Descriptor, DescriptorError> {
    let code = (w.word0 >> KIND_SHIFT) & KIND_MASK;
    let kind = DescriptorKind::from_code(code).ok_or(DescriptorError::InvalidKindCode(code))?;
    if w.word0 & RESERVED_MASK != 0 {
        return Err(DescriptorError::ReservedBitsSet(w.word0 & RESERVED_MASK));
    }
    let (address, delay_cycles) = if kind.is_delay() {
        if w.word1 == 0 {
            return Err(DescriptorError::ZeroDelay);
        }
        (0, Some(w.word1))
    } else {
        (w.word1, None)
    };
    Ok(Descriptor {
        kind,
        address,
        size_bytes: ((w.word0 >> SIZE_SHIFT) & SIZE_MASK) + 1,
        delay_cycles,
        reps: ((w.word0 >> REPS_SHIFT) & REPS_MASK) + 1,
        last: w.word0 & LAST_BIT != 0,
        irq_on_done: w.word0 & IRQ_BIT != 0,
    })
}

/// Little-endian `(word0, word1)` pairs.
pub fn to_image(words: &[DescriptorWords]) -> Vec<u8> {
    let mut out = Vec::with_capacity(words.len() * 8);
    for w in words {
        out.extend_from_slice(&w.word0.to_le_bytes());
        out.extend_from_slice(&w.word1.to_le_bytes());
    }
    out
}

/// Inverse of [`to_image`]. Returns `None` if the length is not a multiple of 8.
pub fn from_image(bytes: &[u8]) -> Option<Vec<DescriptorWords>> {
    if !bytes.len().is_multiple_of(8) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| {
                let word0 = u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let word1 = u32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                DescriptorWords { word0, word1 }
            })
            .collect(),
    )
}

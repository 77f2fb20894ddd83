//! Traffic-pattern language and its compiler.
//!
//! The language is line oriented:
//!
//! ```text
//! # comment
//! read      0x80000000 size=4 reps=1
//! write     0x40000000 size=64 reps=4
//! read_fix  0x1000
//! write_fix 4096 size=8
//! delay     100
//! ```
//!
//! `size` defaults to 4 bytes and `reps` to 1. Addresses and integers are
//! decimal or `0x` hexadecimal.

use std::fmt::Write as _;

use thiserror::Error;

use crate::descriptor::{
    encode, to_image, Descriptor, DescriptorKind, DescriptorWords, MAX_REPS, MAX_SIZE_BYTES,
};
use crate::injector::regs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stmt {
    Access {
        kind: DescriptorKind,
        address: u32,
        size_bytes: u32,
        reps: u32,
    },
    Delay {
        cycles: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternProgram {
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {field} out of range")]
    Range { line: usize, field: &'static str },
    #[error("program needs {words} buffer words but capacity is {capacity}")]
    CapacityExceeded { words: usize, capacity: usize },
}

impl PatternError {
    pub fn line(&self) -> Option<usize> {
        match self {
            PatternError::Syntax { line, .. } | PatternError::Range { line, .. } => Some(*line),
            PatternError::CapacityExceeded { .. } => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> PatternError {
    PatternError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_int(text: &str) -> Option<u64> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        text.parse().ok()
    }
}

fn access_kind(word: &str) -> Option<DescriptorKind> {
    match word {
        "read" => Some(DescriptorKind::Read),
        "write" => Some(DescriptorKind::Write),
        "read_fix" => Some(DescriptorKind::ReadFix),
        "write_fix" => Some(DescriptorKind::WriteFix),
        _ => None,
    }
}

fn parse_stmt(line: usize, tokens: &[&str]) -> Result<Stmt, PatternError> {
    let keyword = tokens[0];
    if keyword == "delay" {
        let arg = tokens
            .get(1)
            .ok_or_else(|| syntax(line, "delay needs a cycle count"))?;
        if tokens.len() > 2 {
            return Err(syntax(line, format!("unexpected token '{}'", tokens[2])));
        }
        let cycles = parse_int(arg).ok_or_else(|| syntax(line, format!("bad integer '{arg}'")))?;
        if cycles == 0 || cycles > u32::MAX as u64 {
            return Err(PatternError::Range {
                line,
                field: "delay",
            });
        }
        return Ok(Stmt::Delay {
            cycles: cycles as u32,
        });
    }

    let kind = access_kind(keyword)
        .ok_or_else(|| syntax(line, format!("unknown statement '{keyword}'")))?;
    let addr_tok = match tokens.get(1) {
        Some(t) if !t.contains('=') => *t,
        _ => return Err(syntax(line, format!("{keyword} needs an address"))),
    };
    let address =
        parse_int(addr_tok).ok_or_else(|| syntax(line, format!("bad address '{addr_tok}'")))?;
    if address > u32::MAX as u64 {
        return Err(PatternError::Range {
            line,
            field: "address",
        });
    }

    let mut size = None;
    let mut reps = None;
    for tok in &tokens[2..] {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("unexpected token '{tok}'")))?;
        let slot = match key {
            "size" => &mut size,
            "reps" => &mut reps,
            _ => return Err(syntax(line, format!("unknown option '{key}'"))),
        };
        if slot.is_some() {
            return Err(syntax(line, format!("duplicate option '{key}'")));
        }
        *slot =
            Some(parse_int(value).ok_or_else(|| syntax(line, format!("bad integer '{value}'")))?);
    }

    let size_bytes = size.unwrap_or(4);
    if !(1..=MAX_SIZE_BYTES as u64).contains(&size_bytes) {
        return Err(PatternError::Range {
            line,
            field: "size",
        });
    }
    let reps = reps.unwrap_or(1);
    if !(1..=MAX_REPS as u64).contains(&reps) {
        return Err(PatternError::Range {
            line,
            field: "reps",
        });
    }
    Ok(Stmt::Access {
        kind,
        address: address as u32,
        size_bytes: size_bytes as u32,
        reps: reps as u32,
    })
}

pub fn parse(text: &str) -> Result<PatternProgram, PatternError> {
    let mut statements = Vec::new();
    let mut last_line = 1;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let code = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = code.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        statements.push(parse_stmt(line, &tokens)?);
    }
    if statements.is_empty() {
        return Err(syntax(last_line, "program has no statements"));
    }
    Ok(PatternProgram { statements })
}

/// One descriptor per statement; only the final one carries `last`.
pub fn lower(p: &PatternProgram) -> Vec<Descriptor> {
    let n = p.statements.len();
    p.statements
        .iter()
        .enumerate()
        .map(|(i, stmt)| {
            let d = match *stmt {
                Stmt::Access {
                    kind,
                    address,
                    size_bytes,
                    reps,
                } => Descriptor::access(kind, address, size_bytes, reps),
                Stmt::Delay { cycles } => Descriptor::delay(cycles),
            };
            d.with_last(i + 1 == n)
        })
        .collect()
}

/// Parse and lower in one go, returning encoded words.
pub fn compile(text: &str) -> Result<Vec<DescriptorWords>, PatternError> {
    let descriptors = lower(&parse(text)?);
    Ok(descriptors
        .iter()
        .map(|d| encode(d).expect("lowered descriptors are valid"))
        .collect())
}

/// Control flags requested alongside EN in the final CTRL write.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CtrlFlags {
    pub loop_mode: bool,
    pub irq_enable: bool,
    pub pipelined: bool,
}

impl CtrlFlags {
    pub fn ctrl_value(self) -> u32 {
        let mut v = regs::ctrl::EN;
        if self.loop_mode {
            v |= regs::ctrl::LOOP;
        }
        if self.irq_enable {
            v |= regs::ctrl::IRQ_EN;
        }
        if self.pipelined {
            v |= regs::ctrl::PIPE_EN;
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApbWrite {
    pub offset: u32,
    pub value: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApbWriteSequence {
    pub writes: Vec<ApbWrite>,
}

impl ApbWriteSequence {
    pub fn len(&self) -> usize {
        self.writes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.writes.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset,value\n");
        for w in &self.writes {
            let _ = writeln!(out, "{:#05x},{:#010x}", w.offset, w.value);
        }
        out
    }

    /// Reads back what [`to_csv`](Self::to_csv) produces.
    pub fn from_csv(text: &str) -> Result<Self, PatternError> {
        let mut writes = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || (idx == 0 && raw == "offset,value") {
                continue;
            }
            let (o, v) = raw
                .split_once(',')
                .ok_or_else(|| syntax(line, "expected offset,value"))?;
            let parse = |s: &str| {
                parse_int(s.trim())
                    .filter(|v| *v <= u32::MAX as u64)
                    .map(|v| v as u32)
                    .ok_or_else(|| syntax(line, format!("bad hex word '{s}'")))
            };
            writes.push(ApbWrite {
                offset: parse(o)?,
                value: parse(v)?,
            });
        }
        Ok(ApbWriteSequence { writes })
    }
}

/// Configuration-port writes that load `ds` into the buffer and enable the
/// injector with `ctrl`.
pub fn emit_apb_sequence(
    ds: &[Descriptor],
    ctrl: CtrlFlags,
) -> Result<ApbWriteSequence, PatternError> {
    let words: Vec<DescriptorWords> = ds
        .iter()
        .map(|d| encode(d).expect("descriptor must be valid"))
        .collect();
    emit_apb_sequence_words(&words, ctrl)
}

pub fn emit_apb_sequence_words(
    words: &[DescriptorWords],
    ctrl: CtrlFlags,
) -> Result<ApbWriteSequence, PatternError> {
    let needed = words.len() * 2;
    if needed > regs::BUFFER_WORDS {
        return Err(PatternError::CapacityExceeded {
            words: needed,
            capacity: regs::BUFFER_WORDS,
        });
    }
    let mut writes = Vec::with_capacity(needed + 1);
    for (i, w) in words.iter().flat_map(|w| [w.word0, w.word1]).enumerate() {
        writes.push(ApbWrite {
            offset: regs::BUFFER_BASE + 4 * i as u32,
            value: w,
        });
    }
    writes.push(ApbWrite {
        offset: regs::CTRL,
        value: ctrl.ctrl_value(),
    });
    Ok(ApbWriteSequence { writes })
}

/// One 8-digit lowercase hex word per line, word0 before word1.
pub fn hex_listing(words: &[DescriptorWords]) -> String {
    let mut out = String::with_capacity(words.len() * 18);
    for w in words {
        let _ = writeln!(out, "{:08x}", w.word0);
        let _ = writeln!(out, "{:08x}", w.word1);
    }
    out
}

pub fn binary_image(words: &[DescriptorWords]) -> Vec<u8> {
    to_image(words)
}

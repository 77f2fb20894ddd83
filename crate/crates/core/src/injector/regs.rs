//! Configuration-port register map.

pub const CTRL: u32 = 0x000;
pub const STATUS: u32 = 0x004;
pub const ERRINFO: u32 = 0x008;
pub const CAP: u32 = 0x00c;
pub const BUFFER_BASE: u32 = 0x400;
pub const BUFFER_END: u32 = 0x800;
/// First offset past the configuration window.
pub const WINDOW_SIZE: u32 = 0x800;

pub const BUFFER_WORDS: usize = 256;
pub const BUFFER_DESCRIPTORS: usize = BUFFER_WORDS / 2;

pub mod ctrl {
    pub const EN: u32 = 1 << 0;
    pub const RST: u32 = 1 << 1;
    pub const LOOP: u32 = 1 << 2;
    pub const IRQ_EN: u32 = 1 << 3;
    pub const PIPE_EN: u32 = 1 << 4;
    pub const WRITABLE: u32 = EN | LOOP | IRQ_EN | PIPE_EN;
    pub const RESET_VALUE: u32 = PIPE_EN;
}

pub mod status {
    pub const DONE: u32 = 1 << 0;
    pub const ERR: u32 = 1 << 1;
    pub const BUSY: u32 = 1 << 2;
    pub const IRQ: u32 = 1 << 3;
    pub const STATE_SHIFT: u32 = 4;
    pub const COUNT_SHIFT: u32 = 16;
}

/// Value reported in ERRINFO when the sequencer runs past the end of the
/// buffer without meeting a `last` descriptor.
pub const ERRINFO_OVERRUN: u32 = BUFFER_WORDS as u32;

/// Buffer word index addressed by a configuration-port offset, if any.
pub fn buffer_index(offset: u32) -> Option<usize> {
    (BUFFER_BASE..BUFFER_END)
        .contains(&offset)
        .then(|| ((offset - BUFFER_BASE) / 4) as usize)
}

/// Coarse engine state reported in `STATUS[7:4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsmState {
    Idle = 0,
    Fetch = 1,
    Decode = 2,
    Exec = 3,
    Done = 4,
    Error = 5,
}

use alloc::string::String;

use crate::kernel::CausalityError;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("address error: {byte_len}-byte access at {address:#x} ({reason})")]
pub struct AddressError {
    pub address: u64,
    pub byte_len: u32,
    pub reason: &'static str,
}

impl AddressError {
    pub fn unmapped(address: u64, byte_len: u32) -> Self {
        AddressError {
            address,
            byte_len,
            reason: "unmapped",
        }
    }

    pub fn out_of_range(address: u64, byte_len: u32) -> Self {
        AddressError {
            address,
            byte_len,
            reason: "out of range",
        }
    }
}

/// Violations of the CIM unit register protocol.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("CONFIG write while controller is {0}")]
    ConfigNotIdle(&'static str),
    #[error("unknown CONFIG parameter {0}")]
    UnknownParameter(u64),
    #[error("invalid value {value} for {param}")]
    InvalidParameter { param: &'static str, value: u64 },
    #[error("matrix {h}x{w} does not fit the {rows}x{cols} crossbar")]
    MatrixTooLarge { h: u32, w: u32, rows: u32, cols: u32 },
    #[error("unknown command {0}")]
    UnknownCommand(u64),
    #[error("command {cmd} not allowed while {state}")]
    CommandNotAllowed { cmd: &'static str, state: &'static str },
    #[error("COMPUTE before all weights were loaded")]
    WeightsIncomplete,
    #[error("DATA_IN while {0} and no weight load in progress")]
    UnexpectedInput(&'static str),
    #[error("DATA_OUT read while {0}")]
    NoOutput(&'static str),
    #[error("write to read-only register at offset {0:#x}")]
    ReadOnly(u64),
    #[error("read from write-only register at offset {0:#x}")]
    WriteOnly(u64),
    #[error("no register at offset {0:#x}")]
    BadOffset(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot decode instruction word {word:#018x} at pc {pc:#x}")]
pub struct DecodeError {
    pub pc: u64,
    pub word: u64,
}

/// Everything that aborts a simulation run.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("{unit}: {source}")]
    Protocol {
        unit: String,
        #[source]
        source: ProtocolError,
    },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{core} exceeded its budget of {budget} instructions")]
    Runaway { core: String, budget: u64 },
    #[error("misaligned pc {0:#x}")]
    MisalignedPc(u64),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error("segment {from} has no channel to segment {to}")]
    Unreachable { from: u16, to: u16 },
    #[error("deadlock at round {round}: no segment can advance (commit times {commits:?})")]
    Deadlock { round: u64, commits: alloc::vec::Vec<SimTime> },
}

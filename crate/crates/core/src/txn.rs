use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Platform-wide component identifier, assigned by the builder in config order.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ComponentId(pub u32);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Command {
    Read,
    Write,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Read => "READ",
            Command::Write => "WRITE",
        }
    }
}

/// A timed memory access. For a WRITE, `data` holds the bytes to store; for a
/// READ it is empty on the request and holds `byte_len` bytes on the response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub id: u64,
    pub initiator: ComponentId,
    pub command: Command,
    pub address: u64,
    pub data: Vec<u8>,
    pub byte_len: u32,
    pub issue_time: SimTime,
    pub completion_time: SimTime,
    pub latency_annotation: SimTime,
}

impl Transaction {
    pub fn read(id: u64, initiator: ComponentId, address: u64, byte_len: u32, at: SimTime) -> Self {
        Transaction {
            id,
            initiator,
            command: Command::Read,
            address,
            data: Vec::new(),
            byte_len,
            issue_time: at,
            completion_time: at,
            latency_annotation: SimTime::ZERO,
        }
    }

    pub fn write(id: u64, initiator: ComponentId, address: u64, data: Vec<u8>, at: SimTime) -> Self {
        let byte_len = data.len() as u32;
        Transaction {
            id,
            initiator,
            command: Command::Write,
            address,
            data,
            byte_len,
            issue_time: at,
            completion_time: at,
            latency_annotation: SimTime::ZERO,
        }
    }

    /// Little-endian value of the first (up to) eight payload bytes.
    pub fn data_u64(&self) -> u64 {
        let mut buf = [0u8; 8];
        let n = self.data.len().min(8);
        buf[..n].copy_from_slice(&self.data[..n]);
        u64::from_le_bytes(buf)
    }

    pub fn end_address(&self) -> u64 {
        self.address.saturating_add(u64::from(self.byte_len))
    }
}

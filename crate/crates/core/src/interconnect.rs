//! Address decoding, bus latency and transaction tracing.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::AddressError;
use crate::time::SimTime;
use crate::txn::{Command, ComponentId};

pub const DRAM_BASE: u64 = 0x0000_0000;
pub const CIM_BASE: u64 = 0x8000_0000;

/// Base address of CIM unit `k`'s register window.
pub const fn cim_base(k: u32) -> u64 {
    CIM_BASE + k as u64 * crate::cim::WINDOW
}

pub const DEFAULT_BUS_LATENCY: SimTime = SimTime::from_ns(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressRange {
    pub base: u64,
    pub size: u64,
    pub target: ComponentId,
}

impl AddressRange {
    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base && addr - self.base < self.size
    }

    pub fn end(&self) -> u64 {
        self.base + self.size
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("empty address range at {0:#x}")]
    Empty(u64),
    #[error("range [{new_base:#x}, +{new_size:#x}) overlaps [{base:#x}, +{size:#x})")]
    Overlap {
        new_base: u64,
        new_size: u64,
        base: u64,
        size: u64,
    },
}

/// Non-overlapping address ranges, kept sorted by base.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressMap {
    ranges: Vec<AddressRange>,
}

impl AddressMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, range: AddressRange) -> Result<(), MapError> {
        if range.size == 0 || range.base.checked_add(range.size).is_none() {
            return Err(MapError::Empty(range.base));
        }
        let pos = self.ranges.partition_point(|r| r.base < range.base);
        let clash = |r: &AddressRange| r.base < range.end() && range.base < r.end();
        if let Some(r) = self.ranges.get(pos).filter(|r| clash(r)).or_else(|| {
            pos.checked_sub(1)
                .and_then(|p| self.ranges.get(p))
                .filter(|r| clash(r))
        }) {
            return Err(MapError::Overlap {
                new_base: range.base,
                new_size: range.size,
                base: r.base,
                size: r.size,
            });
        }
        self.ranges.insert(pos, range);
        Ok(())
    }

    pub fn ranges(&self) -> &[AddressRange] {
        &self.ranges
    }

    pub fn lookup(&self, address: u64) -> Option<&AddressRange> {
        let pos = self.ranges.partition_point(|r| r.base <= address);
        pos.checked_sub(1)
            .map(|p| &self.ranges[p])
            .filter(|r| r.contains(address))
    }

    pub fn decode(&self, address: u64) -> Result<ComponentId, AddressError> {
        self.lookup(address)
            .map(|r| r.target)
            .ok_or(AddressError::unmapped(address, 0))
    }

    /// Decodes a whole access; it must lie inside one range.
    pub fn decode_access(&self, address: u64, len: u32) -> Result<&AddressRange, AddressError> {
        let r = self
            .lookup(address)
            .ok_or(AddressError::unmapped(address, len))?;
        if len == 0 || address - r.base + u64::from(len) > r.size {
            return Err(AddressError::out_of_range(address, len));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp: SimTime,
    pub initiator: ComponentId,
    pub target: ComponentId,
    pub address: u64,
    pub command: Command,
    pub byte_len: u32,
    pub latency: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKey {
    Target,
    Command,
    Initiator,
}

pub const TRACE_CSV_HEADER: &str =
    "timestamp_ps,initiator,target,address_hex,command,byte_len,latency_ps";

/// Per-segment transaction log, in completion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceSink {
    records: Vec<TraceRecord>,
}

impl TraceSink {
    pub fn record(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Exact counts per key. Component names come from `names[id]`.
    pub fn histogram(&self, key: HistogramKey, names: &[String]) -> BTreeMap<String, u64> {
        histogram(&self.records, key, names)
    }

    pub fn write_csv<W: fmt::Write>(&self, out: &mut W, names: &[String]) -> fmt::Result {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        write_csv_rows(&self.records, out, names)
    }
}

pub fn histogram(records: &[TraceRecord], key: HistogramKey, names: &[String]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for r in records {
        let k = match key {
            HistogramKey::Target => component_name(names, r.target),
            HistogramKey::Initiator => component_name(names, r.initiator),
            HistogramKey::Command => String::from(r.command.as_str()),
        };
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
}

fn component_name(names: &[String], id: ComponentId) -> String {
    names
        .get(id.0 as usize)
        .cloned()
        .unwrap_or_else(|| alloc::format!("{id}"))
}

pub fn write_csv_rows<W: fmt::Write>(records: &[TraceRecord], out: &mut W, names: &[String]) -> fmt::Result {
    for r in records {
        writeln!(
            out,
            "{},{},{},0x{:016x},{},{},{}",
            r.timestamp.as_ps(),
            component_name(names, r.initiator),
            component_name(names, r.target),
            r.address,
            r.command.as_str(),
            r.byte_len,
            r.latency.as_ps()
        )?;
    }
    Ok(())
}

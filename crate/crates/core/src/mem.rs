//! Main memory with open-row and write-to-read timing, and the fixed-latency
//! SRAM used for cache data arrays.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::AddressError;
use crate::time::{SimTime, CPU_CLOCK_PERIOD};
use crate::txn::{Command, Transaction};

/// Data and access time returned by a memory target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemResponse {
    pub latency: SimTime,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DramConfig {
    pub capacity: u64,
    pub row_size: u64,
    pub t_read: SimTime,
    pub t_write: SimTime,
    pub t_row_switch: SimTime,
    pub t_wtr: SimTime,
}

impl Default for DramConfig {
    fn default() -> Self {
        DramConfig {
            capacity: 128 << 20,
            row_size: 2 << 10,
            t_read: SimTime::from_ns(30),
            t_write: SimTime::from_ns(30),
            t_row_switch: SimTime::from_ns(15),
            t_wtr: SimTime::from_ns(7),
        }
    }
}

impl DramConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.row_size == 0 || self.capacity == 0 || self.capacity % self.row_size != 0 {
            return Err("DRAM capacity must be a nonzero multiple of the row size");
        }
        if [self.t_read, self.t_write, self.t_row_switch, self.t_wtr]
            .iter()
            .any(|t| t.is_zero())
        {
            return Err("DRAM delays must be positive");
        }
        Ok(())
    }
}

const PAGE: u64 = 4096;

/// Sparse, zero-initialized byte storage.
#[derive(Debug, Clone, Default)]
pub struct SparseBytes {
    pages: BTreeMap<u64, Box<[u8]>>,
}

impl SparseBytes {
    pub fn read(&self, addr: u64, out: &mut [u8]) {
        let mut done = 0;
        while done < out.len() {
            let a = addr + done as u64;
            let (page, off) = (a / PAGE, (a % PAGE) as usize);
            let n = (PAGE as usize - off).min(out.len() - done);
            match self.pages.get(&page) {
                Some(p) => out[done..done + n].copy_from_slice(&p[off..off + n]),
                None => out[done..done + n].fill(0),
            }
            done += n;
        }
    }

    pub fn write(&mut self, addr: u64, data: &[u8]) {
        let mut done = 0;
        while done < data.len() {
            let a = addr + done as u64;
            let (page, off) = (a / PAGE, (a % PAGE) as usize);
            let n = (PAGE as usize - off).min(data.len() - done);
            let p = self
                .pages
                .entry(page)
                .or_insert_with(|| vec![0u8; PAGE as usize].into_boxed_slice());
            p[off..off + n].copy_from_slice(&data[done..done + n]);
            done += n;
        }
    }

    /// Hashes non-zero pages only, so an all-zero page equals an absent one.
    pub fn digest(&self, h: &mut crate::digest::Fnv) {
        for (page, bytes) in &self.pages {
            if bytes.iter().any(|&b| b != 0) {
                h.write_u64(*page);
                h.write(bytes);
            }
        }
    }
}

/// Single-rank, single-bank DRAM with one row buffer.
#[derive(Debug, Clone)]
pub struct Dram {
    cfg: DramConfig,
    base: u64,
    open_row: Option<u64>,
    last_command: Option<Command>,
    storage: SparseBytes,
}

impl Dram {
    pub fn new(base: u64, cfg: DramConfig) -> Self {
        Dram {
            cfg,
            base,
            open_row: None,
            last_command: None,
            storage: SparseBytes::default(),
        }
    }

    pub fn config(&self) -> &DramConfig {
        &self.cfg
    }

    pub fn open_row(&self) -> Option<u64> {
        self.open_row
    }

    pub fn last_command(&self) -> Option<Command> {
        self.last_command
    }

    pub fn digest(&self, h: &mut crate::digest::Fnv) {
        h.write_u64(self.open_row.map_or(u64::MAX, |r| r));
        self.storage.digest(h);
    }

    fn offset(&self, address: u64, len: u32) -> Result<u64, AddressError> {
        let off = address
            .checked_sub(self.base)
            .ok_or(AddressError::out_of_range(address, len))?;
        if len == 0 || off.saturating_add(u64::from(len)) > self.cfg.capacity {
            return Err(AddressError::out_of_range(address, len));
        }
        Ok(off)
    }

    /// Timed access. The latency is the base read/write delay, plus the row
    /// switch penalty when the row differs from the open one, plus the
    /// write-to-read turnaround when a READ follows a WRITE.
    pub fn access(&mut self, txn: &Transaction) -> Result<MemResponse, AddressError> {
        let off = self.offset(txn.address, txn.byte_len)?;
        let row = off / self.cfg.row_size;
        let mut latency = match txn.command {
            Command::Read => self.cfg.t_read,
            Command::Write => self.cfg.t_write,
        };
        if self.open_row != Some(row) {
            latency += self.cfg.t_row_switch;
        }
        if txn.command == Command::Read && self.last_command == Some(Command::Write) {
            latency += self.cfg.t_wtr;
        }
        self.open_row = Some(row);
        self.last_command = Some(txn.command);

        let data = match txn.command {
            Command::Read => {
                let mut buf = vec![0u8; txn.byte_len as usize];
                self.storage.read(off, &mut buf);
                buf
            }
            Command::Write => {
                self.storage.write(off, &txn.data);
                Vec::new()
            }
        };
        Ok(MemResponse { latency, data })
    }

    /// Untimed backdoor write, used to load memory images.
    pub fn load(&mut self, address: u64, bytes: &[u8]) -> Result<(), AddressError> {
        if bytes.is_empty() {
            return Ok(());
        }
        let off = self.offset(address, bytes.len() as u32)?;
        self.storage.write(off, bytes);
        Ok(())
    }

    /// Untimed backdoor read.
    pub fn peek(&self, address: u64, len: usize) -> Result<Vec<u8>, AddressError> {
        let mut buf = vec![0u8; len];
        if len > 0 {
            let off = self.offset(address, len as u32)?;
            self.storage.read(off, &mut buf);
        }
        Ok(buf)
    }

    pub fn peek_u64(&self, address: u64) -> Result<u64, AddressError> {
        let b = self.peek(address, 8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Fixed-latency static RAM.
#[derive(Debug, Clone)]
pub struct Sram {
    base: u64,
    latency: SimTime,
    bytes: Vec<u8>,
}

impl Sram {
    pub fn new(base: u64, size: usize) -> Self {
        Sram::with_latency(base, size, CPU_CLOCK_PERIOD)
    }

    pub fn with_latency(base: u64, size: usize, latency: SimTime) -> Self {
        Sram {
            base,
            latency,
            bytes: vec![0; size],
        }
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    fn range(&self, address: u64, len: u32) -> Result<core::ops::Range<usize>, AddressError> {
        let off = address
            .checked_sub(self.base)
            .ok_or(AddressError::out_of_range(address, len))?;
        let end = off.saturating_add(u64::from(len));
        if len == 0 || end > self.bytes.len() as u64 {
            return Err(AddressError::out_of_range(address, len));
        }
        Ok(off as usize..end as usize)
    }

    pub fn access(&mut self, txn: &Transaction) -> Result<MemResponse, AddressError> {
        let r = self.range(txn.address, txn.byte_len)?;
        let data = match txn.command {
            Command::Read => self.bytes[r].to_vec(),
            Command::Write => {
                if txn.data.len() != r.len() {
                    return Err(AddressError::out_of_range(txn.address, txn.byte_len));
                }
                self.bytes[r].copy_from_slice(&txn.data);
                Vec::new()
            }
        };
        Ok(MemResponse {
            latency: self.latency,
            data,
        })
    }

    pub(crate) fn slice(&self, offset: usize, len: usize) -> &[u8] {
        &self.bytes[offset..offset + len]
    }

    pub(crate) fn slice_mut(&mut self, offset: usize, len: usize) -> &mut [u8] {
        &mut self.bytes[offset..offset + len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txn::ComponentId;

    const I: ComponentId = ComponentId(0);

    fn rd(addr: u64) -> Transaction {
        Transaction::read(0, I, addr, 8, SimTime::ZERO)
    }

    fn wr(addr: u64, v: u64) -> Transaction {
        Transaction::write(0, I, addr, v.to_le_bytes().to_vec(), SimTime::ZERO)
    }

    #[test]
    fn read_after_read_in_open_row_is_base_only() {
        let mut d = Dram::new(0, DramConfig::default());
        d.access(&rd(0x100)).unwrap();
        assert_eq!(d.access(&rd(0x108)).unwrap().latency, SimTime::from_ns(30));
    }

    #[test]
    fn read_other_row_after_write_pays_both_penalties() {
        let mut d = Dram::new(0, DramConfig::default());
        d.access(&wr(0, 1)).unwrap();
        assert_eq!(
            d.access(&rd(0x10_0000)).unwrap().latency,
            SimTime::from_ns(30 + 15 + 7)
        );
    }

    #[test]
    fn first_access_opens_a_row() {
        let mut d = Dram::new(0, DramConfig::default());
        assert_eq!(d.access(&rd(0)).unwrap().latency, SimTime::from_ns(45));
        assert_eq!(d.open_row(), Some(0));
    }

    #[test]
    fn read_returns_written_bytes() {
        let mut d = Dram::new(0, DramConfig::default());
        d.access(&wr(0x2000, 0xdead_beef)).unwrap();
        let r = d.access(&rd(0x2000)).unwrap();
        assert_eq!(r.data, 0xdead_beefu64.to_le_bytes());
    }

    #[test]
    fn out_of_range_access_is_rejected() {
        let mut d = Dram::new(0, DramConfig::default());
        assert!(d.access(&rd((128 << 20) - 4)).is_err());
        assert!(d.access(&Transaction::read(0, I, 0, 0, SimTime::ZERO)).is_err());
    }

    #[test]
    fn sram_fixed_latency_and_storage() {
        let mut s = Sram::new(0x1000, 64);
        assert_eq!(s.access(&wr(0x1008, 42)).unwrap().latency, CPU_CLOCK_PERIOD);
        let r = s.access(&rd(0x1008)).unwrap();
        assert_eq!(r.latency, SimTime::from_ps(588));
        assert_eq!(r.data, 42u64.to_le_bytes());
    }

    #[test]
    fn sram_zero_length_is_an_address_error() {
        let mut s = Sram::new(0, 64);
        assert!(s.access(&Transaction::read(0, I, 0, 0, SimTime::ZERO)).is_err());
        assert!(s.access(&rd(60)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DramConfig::default().validate().is_ok());
        let bad = DramConfig {
            capacity: 3000,
            ..DramConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DramConfig {
            t_wtr: SimTime::ZERO,
            ..DramConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

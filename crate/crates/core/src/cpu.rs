//! In-order MiniISA core with L1 instruction and data caches.
//!
//! Each instruction costs one clock plus any memory stall, rounded up to whole
//! cycles. Memory accesses go through a [`MemPort`]; when the port cannot
//! answer immediately (the target lives in another segment) the core parks the
//! instruction and continues it from [`Core::resume`] once the response
//! arrives.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cache::{Cache, CacheConfig, CacheStats};
use crate::error::{AddressError, SimError};
use crate::isa::{Effect, Instruction, Opcode, Registers, INSN_BYTES};
use crate::time::{SimTime, CPU_CLOCK_PERIOD};
use crate::txn::{Command, ComponentId, Transaction};

/// Outcome of offering a transaction to the interconnect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortResult {
    /// Served locally; `latency` covers bus and target.
    Done { latency: SimTime, data: Vec<u8> },
    /// Forwarded to another segment; the response comes back via `resume`.
    Pending,
}

pub trait MemPort {
    fn access(&mut self, txn: Transaction) -> Result<PortResult, SimError>;

    /// Whether `address` may be held in a cache (memory, not device registers).
    fn cacheable(&self, address: u64) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreConfig {
    #[serde(default = "default_period")]
    pub clock_period: SimTime,
    #[serde(default = "default_icache")]
    pub icache: CacheConfig,
    #[serde(default = "default_dcache")]
    pub dcache: CacheConfig,
    #[serde(default)]
    pub entry: u64,
    #[serde(default = "default_budget")]
    pub insn_budget: u64,
}

fn default_period() -> SimTime {
    CPU_CLOCK_PERIOD
}
fn default_icache() -> CacheConfig {
    CacheConfig::L1I
}
fn default_dcache() -> CacheConfig {
    CacheConfig::L1D
}
fn default_budget() -> u64 {
    1 << 32
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            clock_period: CPU_CLOCK_PERIOD,
            icache: CacheConfig::L1I,
            dcache: CacheConfig::L1D,
            entry: 0,
            insn_budget: default_budget(),
        }
    }
}

/// What the core needs next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreStatus {
    /// Ready to start the next instruction at this time.
    Next(SimTime),
    /// Waiting for a remote response.
    Blocked,
    /// Executed HALT; the core went idle at this time.
    Halted(SimTime),
}

#[derive(Debug, Clone)]
struct InFlight {
    start: SimTime,
    stall: SimTime,
    insn: Option<Instruction>,
    loaded: Option<u64>,
    store_done: bool,
}

#[derive(Debug, Clone, Copy)]
enum Wait {
    FetchFill { line: u64 },
    FetchUncached,
    LoadFill { line: u64, addr: u64 },
    LoadUncached,
    Store,
}

#[derive(Debug, Clone)]
pub struct Core {
    id: ComponentId,
    name: String,
    cfg: CoreConfig,
    regs: Registers,
    pc: u64,
    cycles: u64,
    insns: u64,
    halted: bool,
    icache: Cache,
    dcache: Cache,
    inflight: Option<InFlight>,
    waiting: Option<(Wait, SimTime)>,
}

impl Core {
    pub fn new(id: ComponentId, name: impl Into<String>, cfg: CoreConfig) -> Self {
        Core {
            id,
            name: name.into(),
            cfg,
            regs: Registers::default(),
            pc: cfg.entry,
            cycles: 0,
            insns: 0,
            halted: false,
            icache: Cache::new(cfg.icache),
            dcache: Cache::new(cfg.dcache),
            inflight: None,
            waiting: None,
        }
    }

    pub fn id(&self) -> ComponentId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn regs(&self) -> &Registers {
        &self.regs
    }

    pub fn set_reg(&mut self, r: u8, v: u64) {
        self.regs.set(r, v);
    }

    pub fn pc(&self) -> u64 {
        self.pc
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn instruction_count(&self) -> u64 {
        self.insns
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn is_blocked(&self) -> bool {
        self.waiting.is_some()
    }

    pub fn clock_period(&self) -> SimTime {
        self.cfg.clock_period
    }

    /// Time the core has been busy (executing or stalled): `cycles * period`.
    pub fn busy_time(&self) -> SimTime {
        self.cfg.clock_period.times(self.cycles)
    }

    pub fn icache_stats(&self) -> CacheStats {
        self.icache.stats()
    }

    pub fn dcache_stats(&self) -> CacheStats {
        self.dcache.stats()
    }

    fn round_up(&self, t: SimTime) -> SimTime {
        self.cfg.clock_period.times(t.cycles_ceil(self.cfg.clock_period))
    }

    /// Starts (and usually finishes) the instruction at `pc`.
    pub fn step(&mut self, now: SimTime, port: &mut dyn MemPort) -> Result<CoreStatus, SimError> {
        assert!(!self.halted, "{} stepped after HALT", self.name);
        assert!(self.waiting.is_none(), "{} stepped while blocked", self.name);
        if self.pc % INSN_BYTES != 0 {
            return Err(SimError::MisalignedPc(self.pc));
        }
        self.inflight.get_or_insert(InFlight {
            start: now,
            stall: SimTime::ZERO,
            insn: None,
            loaded: None,
            store_done: false,
        });
        self.proceed(port)
    }

    /// Delivers the response to the access the core is blocked on.
    pub fn resume(
        &mut self,
        now: SimTime,
        data: &[u8],
        port: &mut dyn MemPort,
    ) -> Result<CoreStatus, SimError> {
        let (wait, issued) = self
            .waiting
            .take()
            .expect("response delivered to a core that is not waiting");
        let stall = self.round_up(now - issued);
        let pc = self.pc;
        let fl = self.inflight.as_mut().expect("blocked core without an instruction");
        fl.stall += stall;
        match wait {
            Wait::FetchFill { line } => {
                self.icache.fill(line, data);
                let off = (pc - line) as usize;
                fl.insn = Some(decode_at(&data[off..off + 8], pc)?);
            }
            Wait::FetchUncached => fl.insn = Some(decode_at(data, pc)?),
            Wait::LoadFill { line, addr } => {
                self.dcache.fill(line, data);
                let off = (addr - line) as usize;
                fl.loaded = Some(le_u64(&data[off..off + 8]));
            }
            Wait::LoadUncached => fl.loaded = Some(le_u64(data)),
            Wait::Store => fl.store_done = true,
        }
        self.proceed(port)
    }

    fn issue(
        &mut self,
        port: &mut dyn MemPort,
        txn: Transaction,
        wait: Wait,
    ) -> Result<Option<Vec<u8>>, SimError> {
        let issued = txn.issue_time;
        match port.access(txn)? {
            PortResult::Done { latency, data } => {
                let stall = self.round_up(latency);
                self.inflight.as_mut().unwrap().stall += stall;
                Ok(Some(data))
            }
            PortResult::Pending => {
                self.waiting = Some((wait, issued));
                Ok(None)
            }
        }
    }

    fn proceed(&mut self, port: &mut dyn MemPort) -> Result<CoreStatus, SimError> {
        let pc = self.pc;

        // fetch
        let insn = match self.inflight.as_ref().unwrap().insn {
            Some(i) => i,
            None => {
                let at = self.issue_time();
                let insn = if self.icache.enabled() && port.cacheable(pc) {
                    if let Some(bytes) = self.icache.read(pc, 8) {
                        decode_at(bytes, pc)?
                    } else {
                        let line = self.icache.line_base(pc);
                        let txn = Transaction::read(0, self.id, line, self.icache.line_bytes(), at);
                        let Some(data) = self.issue(port, txn, Wait::FetchFill { line })? else {
                            return Ok(CoreStatus::Blocked);
                        };
                        self.icache.fill(line, &data);
                        let off = (pc - line) as usize;
                        decode_at(&data[off..off + 8], pc)?
                    }
                } else {
                    let txn = Transaction::read(0, self.id, pc, 8, at);
                    let Some(data) = self.issue(port, txn, Wait::FetchUncached)? else {
                        return Ok(CoreStatus::Blocked);
                    };
                    decode_at(&data, pc)?
                };
                self.inflight.as_mut().unwrap().insn = Some(insn);
                insn
            }
        };

        // memory stage
        match insn.op {
            Opcode::Ld if self.inflight.as_ref().unwrap().loaded.is_none() => {
                let addr = insn.mem_address(&self.regs);
                check_aligned(addr)?;
                let at = self.issue_time();
                let value = if self.dcache.enabled() && port.cacheable(addr) {
                    if let Some(bytes) = self.dcache.read(addr, 8) {
                        le_u64(bytes)
                    } else {
                        let line = self.dcache.line_base(addr);
                        let txn = Transaction::read(0, self.id, line, self.dcache.line_bytes(), at);
                        let Some(data) = self.issue(port, txn, Wait::LoadFill { line, addr })? else {
                            return Ok(CoreStatus::Blocked);
                        };
                        self.dcache.fill(line, &data);
                        let off = (addr - line) as usize;
                        le_u64(&data[off..off + 8])
                    }
                } else {
                    let txn = Transaction::read(0, self.id, addr, 8, at);
                    let Some(data) = self.issue(port, txn, Wait::LoadUncached)? else {
                        return Ok(CoreStatus::Blocked);
                    };
                    le_u64(&data)
                };
                self.inflight.as_mut().unwrap().loaded = Some(value);
            }
            Opcode::St if !self.inflight.as_ref().unwrap().store_done => {
                let addr = insn.mem_address(&self.regs);
                check_aligned(addr)?;
                let bytes = self.regs.get(insn.rs2).to_le_bytes();
                if self.dcache.enabled() {
                    self.dcache.write_hit(addr, &bytes);
                }
                let txn = Transaction::write(0, self.id, addr, bytes.to_vec(), self.issue_time());
                if self.issue(port, txn, Wait::Store)?.is_none() {
                    return Ok(CoreStatus::Blocked);
                }
                self.inflight.as_mut().unwrap().store_done = true;
            }
            _ => {}
        }

        // retire
        let fl = self.inflight.take().unwrap();
        let effect = insn.execute(pc, &mut self.regs, fl.loaded);
        self.cycles += 1 + fl.stall.cycles_ceil(self.cfg.clock_period);
        self.insns += 1;
        let next = fl.start + self.cfg.clock_period + fl.stall;
        match effect {
            Effect::Next => self.pc = pc.wrapping_add(INSN_BYTES),
            Effect::Jump(t) => self.pc = t,
            Effect::Halt => {
                self.halted = true;
                return Ok(CoreStatus::Halted(next));
            }
        }
        if self.insns >= self.cfg.insn_budget {
            return Err(SimError::Runaway {
                core: self.name.clone(),
                budget: self.cfg.insn_budget,
            });
        }
        Ok(CoreStatus::Next(next))
    }

    fn issue_time(&self) -> SimTime {
        let fl = self.inflight.as_ref().unwrap();
        fl.start + fl.stall
    }

    pub fn digest(&self, h: &mut crate::digest::Fnv) {
        for &r in self.regs.as_array() {
            h.write_u64(r);
        }
        h.write_u64(self.pc);
        h.write_u64(self.cycles);
        h.write_u64(self.insns);
        h.write_u64(self.halted as u64);
    }
}

fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().unwrap())
}

fn decode_at(bytes: &[u8], pc: u64) -> Result<Instruction, SimError> {
    Ok(Instruction::decode(le_u64(bytes), pc)?)
}

fn check_aligned(addr: u64) -> Result<(), SimError> {
    if addr % 8 != 0 {
        return Err(AddressError {
            address: addr,
            byte_len: 8,
            reason: "misaligned",
        }
        .into());
    }
    Ok(())
}

/// Convenience for tests and tools: whether `cmd` is a data-side access.
pub fn is_read(cmd: Command) -> bool {
    cmd == Command::Read
}

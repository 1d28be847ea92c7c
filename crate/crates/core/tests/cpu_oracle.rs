//! The timed core against the plain reference interpreter, with caches on
//! and off and with some accesses answered asynchronously.

use std::collections::HashMap;

use cimvp_core::cache::CacheConfig;
use cimvp_core::cpu::{Core, CoreConfig, CoreStatus, MemPort, PortResult};
use cimvp_core::isa::{Instruction, Opcode};
use cimvp_core::mem::{Dram, DramConfig};
use cimvp_core::time::SimTime;
use cimvp_core::txn::{Command, ComponentId, Transaction};
use cimvp_core::SimError;
use cimvp_testkit::{interpret, InterpError};
use proptest::prelude::*;

const CODE: u64 = 0x1000;
const DATA: u64 = 0x4_0000;
const DATA_WORDS: i32 = 96;
const BUS: SimTime = SimTime::from_ps(2_000);

struct Port {
    dram: Dram,
    /// Every n-th access is answered later through `resume`.
    defer_every: u64,
    seen: u64,
    deferred: Option<(SimTime, Vec<u8>)>,
    writes: Vec<(u64, u64)>,
}

impl Port {
    fn new(defer_every: u64) -> Self {
        Port {
            dram: Dram::new(0, DramConfig::default()),
            defer_every,
            seen: 0,
            deferred: None,
            writes: Vec::new(),
        }
    }
}

impl MemPort for Port {
    fn access(&mut self, txn: Transaction) -> Result<PortResult, SimError> {
        let r = self.dram.access(&txn)?;
        if txn.command == Command::Write {
            self.writes.push((txn.address, txn.data_u64()));
        }
        self.seen += 1;
        let latency = BUS + r.latency;
        if self.defer_every > 0 && self.seen % self.defer_every == 0 {
            self.deferred = Some((txn.issue_time + latency + BUS, r.data));
            return Ok(PortResult::Pending);
        }
        Ok(PortResult::Done { latency, data: r.data })
    }

    fn cacheable(&self, _: u64) -> bool {
        true
    }
}

struct Outcome {
    regs: [u64; 32],
    instructions: u64,
    memory: HashMap<u64, u64>,
    writes: Vec<(u64, u64)>,
    end: SimTime,
}

fn run_core(prog: &[Instruction], caches: bool, defer_every: u64) -> Result<Outcome, SimError> {
    let mut port = Port::new(defer_every);
    let bytes: Vec<u8> = prog.iter().flat_map(|i| i.encode().to_le_bytes()).collect();
    port.dram.load(CODE, &bytes).unwrap();
    let (mut ic, mut dc) = (CacheConfig::L1I, CacheConfig { size_bytes: 256, ..CacheConfig::L1D });
    if !caches {
        ic = ic.disabled();
        dc = dc.disabled();
    }
    let mut core = Core::new(
        ComponentId(0),
        "cpu0",
        CoreConfig {
            entry: CODE,
            icache: ic,
            dcache: dc,
            insn_budget: 100_000,
            ..CoreConfig::default()
        },
    );
    let mut status = core.step(SimTime::ZERO, &mut port)?;
    let end = loop {
        status = match status {
            CoreStatus::Next(t) => core.step(t, &mut port)?,
            CoreStatus::Blocked => {
                let (at, data) = port.deferred.take().expect("blocked without a deferred access");
                core.resume(at, &data, &mut port)?
            }
            CoreStatus::Halted(t) => break t,
        };
    };
    let mut memory = HashMap::new();
    for k in 0..DATA_WORDS as u64 {
        let a = DATA + 8 * k;
        memory.insert(a, port.dram.peek_u64(a).unwrap());
    }
    Ok(Outcome {
        regs: *core.regs().as_array(),
        instructions: core.instruction_count(),
        memory,
        writes: port.writes,
        end,
    })
}

fn reference(prog: &[Instruction]) -> Result<cimvp_testkit::InterpResult, InterpError> {
    let mem: HashMap<u64, u64> = prog
        .iter()
        .enumerate()
        .map(|(i, ins)| (CODE + 8 * i as u64, ins.encode()))
        .collect();
    interpret(mem, CODE, 100_000)
}

/// One body instruction; `left` is how many body slots follow it.
fn body_insn(left: usize) -> impl Strategy<Value = Instruction> {
    let reg = 1u8..=8;
    let fwd = 1..=(left.max(1) as i32);
    prop_oneof![
        (reg.clone(), reg.clone(), reg.clone()).prop_map(|(d, a, b)| Instruction::new(Opcode::Add, d, a, b, 0)),
        (reg.clone(), reg.clone(), reg.clone()).prop_map(|(d, a, b)| Instruction::new(Opcode::Mul, d, a, b, 0)),
        (reg.clone(), 0u8..=8, -1000i32..1000).prop_map(|(d, a, i)| Instruction::new(Opcode::Addi, d, a, 0, i)),
        (reg.clone(), 0..DATA_WORDS).prop_map(|(d, k)| Instruction::new(Opcode::Ld, d, 9, 0, 8 * k)),
        (0u8..=8, 0..DATA_WORDS).prop_map(|(s, k)| Instruction::new(Opcode::St, 0, 9, s, 8 * k)),
        (reg.clone(), reg.clone(), fwd.clone()).prop_map(|(a, b, k)| Instruction::new(Opcode::Blt, 0, a, b, 8 * k)),
        (reg.clone(), reg.clone(), fwd.clone()).prop_map(|(a, b, k)| Instruction::new(Opcode::Bne, 0, a, b, 8 * k)),
        (0u8..=8, fwd).prop_map(|(d, k)| Instruction::new(Opcode::Jal, d, 0, 0, 8 * k)),
    ]
}

/// `r9 = DATA; r10 = n; loop { body } while --r10 != 0; halt`. Branches in the
/// body only go forward and stay inside the body, so every program ends.
fn program() -> impl Strategy<Value = Vec<Instruction>> {
    (1usize..24, 1i32..6).prop_flat_map(|(len, iters)| {
        let body: Vec<_> = (0..len).map(|i| body_insn(len - i)).collect();
        body.prop_map(move |body| {
            let n = body.len() as i32;
            let mut p = vec![
                Instruction::new(Opcode::Addi, 9, 0, 0, DATA as i32),
                Instruction::new(Opcode::Addi, 10, 0, 0, iters),
            ];
            p.extend(body);
            p.push(Instruction::new(Opcode::Addi, 10, 10, 0, -1));
            p.push(Instruction::new(Opcode::Bne, 0, 10, 0, -8 * (n + 1)));
            p.push(Instruction::HALT);
            p
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_reference_interpreter(prog in program(), caches in any::<bool>(), defer in prop_oneof![Just(0u64), 1u64..6]) {
        let want = reference(&prog).expect("generated programs terminate");
        let got = run_core(&prog, caches, defer).unwrap();
        prop_assert_eq!(got.regs, want.regs);
        prop_assert_eq!(got.instructions, want.instructions);
        for (addr, v) in &got.memory {
            prop_assert_eq!(*v, want.memory.get(addr).copied().unwrap_or(0), "word at {:#x}", addr);
        }
    }

    #[test]
    fn caches_are_architecturally_invisible(prog in program()) {
        let on = run_core(&prog, true, 0).unwrap();
        let off = run_core(&prog, false, 0).unwrap();
        prop_assert_eq!(on.regs, off.regs);
        prop_assert_eq!(on.memory, off.memory);
        prop_assert_eq!(on.instructions, off.instructions);
        // write-through: every store reaches memory, in program order
        prop_assert_eq!(on.writes, off.writes);
        prop_assert!(on.end <= off.end);
    }
}

#[test]
fn misaligned_load_is_an_error_in_both_models() {
    let prog = [
        Instruction::new(Opcode::Addi, 9, 0, 0, DATA as i32),
        Instruction::new(Opcode::Ld, 1, 9, 0, 4),
        Instruction::HALT,
    ];
    assert!(matches!(reference(&prog), Err(InterpError::Misaligned(_))));
    assert!(run_core(&prog, true, 0).is_err());
}

#[test]
fn runaway_program_hits_the_budget() {
    let prog = [Instruction::new(Opcode::Jal, 0, 0, 0, 0)];
    assert!(matches!(reference(&prog), Err(InterpError::Budget)));
    assert!(matches!(run_core(&prog, true, 0), Err(SimError::Runaway { .. })));
}

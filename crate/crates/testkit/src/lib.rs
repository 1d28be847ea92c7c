//! Reference models for tests. Deliberately written without reusing the
//! simulator's own decoding or timing code.

use std::collections::HashMap;

/// Brute-force `O = A·B` with `A` `h×w` and `B` `w×p`, both row-major.
pub fn matmul(a: &[u64], b: &[u64], h: usize, w: usize, p: usize) -> Vec<u64> {
    assert_eq!(a.len(), h * w);
    assert_eq!(b.len(), w * p);
    let mut o = Vec::with_capacity(h * p);
    for i in 0..h {
        for j in 0..p {
            let mut s = 0u64;
            for k in 0..w {
                s += a[i * w + k] * b[k * p + j];
            }
            o.push(s);
        }
    }
    o
}

/// Explicit state machine for the open-row DRAM timing rule.
#[derive(Debug, Clone, Default)]
pub struct DramOracle {
    pub row: Option<u64>,
    pub last_was_write: Option<bool>,
}

pub const T_READ: u64 = 30_000;
pub const T_WRITE: u64 = 30_000;
pub const T_ROW: u64 = 15_000;
pub const T_WTR: u64 = 7_000;
pub const ROW_BYTES: u64 = 2048;

impl DramOracle {
    /// Latency in picoseconds of an access to `addr`.
    pub fn access(&mut self, addr: u64, write: bool) -> u64 {
        let row = addr / ROW_BYTES;
        let mut t = if write { T_WRITE } else { T_READ };
        if self.row != Some(row) {
            t += T_ROW;
        }
        if !write && self.last_was_write == Some(true) {
            t += T_WTR;
        }
        self.row = Some(row);
        self.last_was_write = Some(write);
        t
    }

    /// The four sums a latency may take.
    pub fn allowed(write: bool) -> [u64; 4] {
        let base = if write { T_WRITE } else { T_READ };
        [base, base + T_ROW, base + T_WTR, base + T_ROW + T_WTR]
    }
}

/// Input-phase cycle count: one cycle per input port word.
pub fn cim_in_cycles(vec_len: u64, input_res: u64, port: u64) -> u64 {
    (vec_len * input_res + port - 1) / port
}

/// Output-phase cycle count: one cycle per output port word.
pub fn cim_out_cycles(outputs: u64, output_res: u64, port: u64) -> u64 {
    (outputs * output_res + port - 1) / port
}

/// Result of [`interpret`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpResult {
    pub regs: [u64; 32],
    pub pc: u64,
    pub instructions: u64,
    pub loads: u64,
    pub stores: u64,
    /// Every word ever written, by address.
    pub memory: HashMap<u64, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterpError {
    BadOpcode { pc: u64, word: u64 },
    Budget,
    Misaligned(u64),
}

/// Plain MiniISA interpreter over word-addressed memory, no caches or timing.
///
/// Encoding: bits 0..8 opcode (1 LD, 2 ST, 3 ADD, 4 ADDI, 5 MUL, 6 BLT,
/// 7 BNE, 8 JAL, 9 HALT), 8..13 rd, 13..18 rs1, 18..23 rs2, 32..64 imm.
pub fn interpret(memory: HashMap<u64, u64>, entry: u64, budget: u64) -> Result<InterpResult, InterpError> {
    let mut mem = memory;
    let mut x = [0u64; 32];
    let mut pc = entry;
    let (mut n, mut loads, mut stores) = (0u64, 0u64, 0u64);
    loop {
        if n >= budget {
            return Err(InterpError::Budget);
        }
        if pc % 8 != 0 {
            return Err(InterpError::Misaligned(pc));
        }
        let word = mem.get(&pc).copied().unwrap_or(0);
        let op = word & 0xff;
        let rd = ((word >> 8) & 31) as usize;
        let rs1 = ((word >> 13) & 31) as usize;
        let rs2 = ((word >> 18) & 31) as usize;
        let imm = (word >> 32) as u32 as i32 as i64 as u64;
        if (word >> 23) & 0x1ff != 0 {
            return Err(InterpError::BadOpcode { pc, word });
        }
        n += 1;
        let mut next = pc + 8;
        match op {
            1 => {
                let a = x[rs1].wrapping_add(imm);
                if a % 8 != 0 {
                    return Err(InterpError::Misaligned(a));
                }
                loads += 1;
                let v = mem.get(&a).copied().unwrap_or(0);
                wr(&mut x, rd, v);
            }
            2 => {
                let a = x[rs1].wrapping_add(imm);
                if a % 8 != 0 {
                    return Err(InterpError::Misaligned(a));
                }
                stores += 1;
                mem.insert(a, x[rs2]);
            }
            3 => {
                let v = x[rs1].wrapping_add(x[rs2]);
                wr(&mut x, rd, v)
            }
            4 => {
                let v = x[rs1].wrapping_add(imm);
                wr(&mut x, rd, v)
            }
            5 => {
                let v = x[rs1].wrapping_mul(x[rs2]);
                wr(&mut x, rd, v)
            }
            6 => {
                if (x[rs1] as i64) < (x[rs2] as i64) {
                    next = pc.wrapping_add(imm);
                }
            }
            7 => {
                if x[rs1] != x[rs2] {
                    next = pc.wrapping_add(imm);
                }
            }
            8 => {
                wr(&mut x, rd, pc + 8);
                next = pc.wrapping_add(imm);
            }
            9 => {
                return Ok(InterpResult {
                    regs: x,
                    pc,
                    instructions: n,
                    loads,
                    stores,
                    memory: mem,
                })
            }
            _ => return Err(InterpError::BadOpcode { pc, word }),
        }
        pc = next;
    }
}

fn wr(x: &mut [u64; 32], r: usize, v: u64) {
    if r != 0 {
        x[r] = v;
    }
}

/// Builds word memory from `(address, bytes)` images.
pub fn word_memory<'a>(images: impl IntoIterator<Item = (u64, &'a [u8])>) -> HashMap<u64, u64> {
    let mut m = HashMap::new();
    for (addr, bytes) in images {
        assert_eq!(addr % 8, 0);
        for (i, c) in bytes.chunks(8).enumerate() {
            let mut w = [0u8; 8];
            w[..c.len()].copy_from_slice(c);
            let v = u64::from_le_bytes(w);
            if v != 0 {
                m.insert(addr + i as u64 * 8, v);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_by_hand() {
        let a = [1, 0, 2, 0, 1, 1];
        let b = [1, 2, 3, 4, 5, 6];
        assert_eq!(matmul(&a, &b, 2, 3, 2), [11, 14, 8, 10]);
    }

    #[test]
    fn dram_sums() {
        let mut d = DramOracle::default();
        assert_eq!(d.access(0, false), 45_000);
        assert_eq!(d.access(8, false), 30_000);
        assert_eq!(d.access(16, true), 30_000);
        assert_eq!(d.access(4096, false), 52_000);
    }

    #[test]
    fn interpreter_runs_a_loop() {
        // r1 = 3; loop: r2 += 2; r1 -= 1; bne r1, r0, loop; halt
        let enc = |op: u64, rd: u64, rs1: u64, rs2: u64, imm: i32| op | rd << 8 | rs1 << 13 | rs2 << 18 | (imm as u32 as u64) << 32;
        let prog = [
            enc(4, 1, 0, 0, 3),
            enc(4, 2, 2, 0, 2),
            enc(4, 1, 1, 0, -1),
            enc(7, 0, 1, 0, -16),
            enc(9, 0, 0, 0, 0),
        ];
        let mem: HashMap<u64, u64> = prog.iter().enumerate().map(|(i, &w)| (0x100 + i as u64 * 8, w)).collect();
        let r = interpret(mem, 0x100, 1000).unwrap();
        assert_eq!(r.regs[2], 6);
        assert_eq!(r.instructions, 1 + 3 * 3 + 1);
    }
}

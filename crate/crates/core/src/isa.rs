//! MiniISA: a nine-opcode, 64-bit, in-order instruction set.
//!
//! Every instruction is encoded in one little-endian 64-bit word:
//!
//! | bits   | field            |
//! |--------|------------------|
//! | 0..8   | opcode (1..=9)   |
//! | 8..13  | rd               |
//! | 13..18 | rs1              |
//! | 18..23 | rs2              |
//! | 23..32 | reserved, zero   |
//! | 32..64 | imm (i32)        |
//!
//! Branch and jump immediates are byte offsets relative to the instruction's
//! own pc. Register 0 always reads as zero.

use core::fmt;

use crate::error::DecodeError;

/// Bytes per encoded instruction; pc advances by this much.
pub const INSN_BYTES: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Ld = 1,
    St = 2,
    Add = 3,
    Addi = 4,
    Mul = 5,
    Blt = 6,
    Bne = 7,
    Jal = 8,
    Halt = 9,
}

impl Opcode {
    pub const ALL: [Opcode; 9] = [
        Opcode::Ld,
        Opcode::St,
        Opcode::Add,
        Opcode::Addi,
        Opcode::Mul,
        Opcode::Blt,
        Opcode::Bne,
        Opcode::Jal,
        Opcode::Halt,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Ld => "LD",
            Opcode::St => "ST",
            Opcode::Add => "ADD",
            Opcode::Addi => "ADDI",
            Opcode::Mul => "MUL",
            Opcode::Blt => "BLT",
            Opcode::Bne => "BNE",
            Opcode::Jal => "JAL",
            Opcode::Halt => "HALT",
        }
    }

    fn from_u8(v: u8) -> Option<Opcode> {
        Opcode::ALL.get(usize::from(v).wrapping_sub(1)).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: i32,
}

impl Instruction {
    pub const HALT: Instruction = Instruction::new(Opcode::Halt, 0, 0, 0, 0);

    pub const fn new(op: Opcode, rd: u8, rs1: u8, rs2: u8, imm: i32) -> Self {
        Instruction {
            op,
            rd,
            rs1,
            rs2,
            imm,
        }
    }

    pub fn encode(&self) -> u64 {
        u64::from(self.op as u8)
            | u64::from(self.rd & 31) << 8
            | u64::from(self.rs1 & 31) << 13
            | u64::from(self.rs2 & 31) << 18
            | u64::from(self.imm as u32) << 32
    }

    pub fn decode(word: u64, pc: u64) -> Result<Instruction, DecodeError> {
        let err = DecodeError { pc, word };
        let op = Opcode::from_u8(word as u8).ok_or(err.clone())?;
        if (word >> 23) & 0x1ff != 0 {
            return Err(err);
        }
        Ok(Instruction {
            op,
            rd: ((word >> 8) & 31) as u8,
            rs1: ((word >> 13) & 31) as u8,
            rs2: ((word >> 18) & 31) as u8,
            imm: (word >> 32) as u32 as i32,
        })
    }

    /// Whether the instruction reads data memory.
    pub fn is_load(&self) -> bool {
        self.op == Opcode::Ld
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.op.mnemonic();
        match self.op {
            Opcode::Ld => write!(f, "{m} r{}, {}(r{})", self.rd, self.imm, self.rs1),
            Opcode::St => write!(f, "{m} r{}, {}(r{})", self.rs2, self.imm, self.rs1),
            Opcode::Add | Opcode::Mul => {
                write!(f, "{m} r{}, r{}, r{}", self.rd, self.rs1, self.rs2)
            }
            Opcode::Addi => write!(f, "{m} r{}, r{}, {}", self.rd, self.rs1, self.imm),
            Opcode::Blt | Opcode::Bne => {
                write!(f, "{m} r{}, r{}, {}", self.rs1, self.rs2, self.imm)
            }
            Opcode::Jal => write!(f, "{m} r{}, {}", self.rd, self.imm),
            Opcode::Halt => f.write_str(m),
        }
    }
}

/// Architectural register file with a hardwired zero register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registers([u64; 32]);

impl Default for Registers {
    fn default() -> Self {
        Registers([0; 32])
    }
}

impl Registers {
    pub fn get(&self, r: u8) -> u64 {
        self.0[usize::from(r & 31)]
    }

    pub fn set(&mut self, r: u8, v: u64) {
        if r & 31 != 0 {
            self.0[usize::from(r & 31)] = v;
        }
    }

    pub fn as_array(&self) -> &[u64; 32] {
        &self.0
    }
}

/// What an instruction does to architectural state, given any memory value
/// it loaded. Shared by the timed core and by reference interpreters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effect {
    Next,
    Jump(u64),
    Halt,
}

impl Instruction {
    /// Effective address of a LD or ST.
    pub fn mem_address(&self, regs: &Registers) -> u64 {
        regs.get(self.rs1).wrapping_add(self.imm as i64 as u64)
    }

    /// Applies a non-memory instruction (or the register write-back of a LD
    /// whose value is `loaded`) and returns the control-flow effect.
    pub fn execute(&self, pc: u64, regs: &mut Registers, loaded: Option<u64>) -> Effect {
        let a = regs.get(self.rs1);
        let b = regs.get(self.rs2);
        let target = pc.wrapping_add(self.imm as i64 as u64);
        match self.op {
            Opcode::Ld => {
                regs.set(self.rd, loaded.expect("LD executed without a loaded value"));
                Effect::Next
            }
            Opcode::St => Effect::Next,
            Opcode::Add => {
                regs.set(self.rd, a.wrapping_add(b));
                Effect::Next
            }
            Opcode::Addi => {
                regs.set(self.rd, a.wrapping_add(self.imm as i64 as u64));
                Effect::Next
            }
            Opcode::Mul => {
                regs.set(self.rd, a.wrapping_mul(b));
                Effect::Next
            }
            Opcode::Blt if (a as i64) < (b as i64) => Effect::Jump(target),
            Opcode::Bne if a != b => Effect::Jump(target),
            Opcode::Blt | Opcode::Bne => Effect::Next,
            Opcode::Jal => {
                regs.set(self.rd, pc.wrapping_add(INSN_BYTES));
                Effect::Jump(target)
            }
            Opcode::Halt => Effect::Halt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn any_insn() -> impl Strategy<Value = Instruction> {
        (0usize..9, 0u8..32, 0u8..32, 0u8..32, any::<i32>())
            .prop_map(|(o, rd, rs1, rs2, imm)| Instruction::new(Opcode::ALL[o], rd, rs1, rs2, imm))
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(i in any_insn()) {
            prop_assert_eq!(Instruction::decode(i.encode(), 0).unwrap(), i);
        }
    }

    #[test]
    fn malformed_words_are_rejected() {
        assert!(Instruction::decode(0, 0).is_err());
        assert!(Instruction::decode(10, 0).is_err());
        assert!(Instruction::decode(Instruction::HALT.encode() | 1 << 25, 0).is_err());
    }

    #[test]
    fn register_zero_is_hardwired() {
        let mut r = Registers::default();
        r.set(0, 5);
        assert_eq!(r.get(0), 0);
    }

    #[test]
    fn alu_semantics() {
        let mut r = Registers::default();
        Instruction::new(Opcode::Addi, 1, 0, 0, 7).execute(0, &mut r, None);
        Instruction::new(Opcode::Addi, 2, 0, 0, 6).execute(0, &mut r, None);
        Instruction::new(Opcode::Mul, 3, 1, 2, 0).execute(0, &mut r, None);
        assert_eq!(r.get(3), 42);
        let blt = Instruction::new(Opcode::Blt, 0, 2, 1, -16);
        assert_eq!(blt.execute(64, &mut r, None), Effect::Jump(48));
        let jal = Instruction::new(Opcode::Jal, 5, 0, 0, 24);
        assert_eq!(jal.execute(8, &mut r, None), Effect::Jump(32));
        assert_eq!(r.get(5), 16);
    }
}

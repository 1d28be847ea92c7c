//! Two-pass assembler for MiniISA text.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! line     := [label ':'] [stmt] [comment]
//! comment  := ('#' | ';') any*
//! stmt     := "LD"   reg ',' imm '(' reg ')'
//!           | "ST"   reg ',' imm '(' reg ')'       ; stores the first register
//!           | ("ADD" | "MUL") reg ',' reg ',' reg
//!           | "ADDI" reg ',' reg ',' imm
//!           | ("BLT" | "BNE") reg ',' reg ',' target
//!           | "JAL"  reg ',' target
//!           | "HALT"
//!           | "LI"   reg ',' imm64                  ; pseudo, expands to ADDI/ADD
//! reg      := ('r' | 'x') 0..=31
//! imm      := decimal or 0x-hex, optionally negative
//! target   := label | imm                          ; byte offset from this pc
//! ```
//!
//! Mnemonics and register names are case-insensitive.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::isa::{Instruction, Opcode, INSN_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct AssembleError {
    pub line: usize,
    pub message: String,
}

/// An assembled program: instructions laid out contiguously from `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub base: u64,
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Encoded image, one little-endian word per instruction.
    pub fn words(&self) -> Vec<u64> {
        self.instructions.iter().map(Instruction::encode).collect()
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.words().iter().flat_map(|w| w.to_le_bytes()).collect()
    }
}

enum Target {
    Label(String),
    Offset(i32),
}

enum Stmt {
    Plain(Instruction),
    Branch(Opcode, u8, u8, u8, Target),
}

pub fn assemble(text: &str, base: u64) -> Result<Program, AssembleError> {
    let mut labels: BTreeMap<String, u64> = BTreeMap::new();
    let mut stmts: Vec<(usize, Stmt)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| AssembleError {
            line: line_no,
            message,
        };
        let mut line = raw;
        if let Some(p) = line.find(['#', ';']) {
            line = &line[..p];
        }
        let mut line = line.trim();
        if let Some(colon) = line.find(':') {
            let label = line[..colon].trim();
            if label.is_empty() || !label.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
                return Err(err(format!("invalid label {label:?}")));
            }
            let addr = base + stmts.len() as u64 * INSN_BYTES;
            if labels.insert(label.to_string(), addr).is_some() {
                return Err(err(format!("duplicate label {label:?}")));
            }
            line = line[colon + 1..].trim();
        }
        if line.is_empty() {
            continue;
        }
        let (mnemonic, rest) = match line.find(char::is_whitespace) {
            Some(p) => (&line[..p], line[p..].trim()),
            None => (line, ""),
        };
        let args: Vec<&str> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',').map(str::trim).collect()
        };
        let mnemonic = mnemonic.to_ascii_uppercase();
        let expect = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(format!("{mnemonic} takes {n} operands, got {}", args.len())))
            }
        };
        match mnemonic.as_str() {
            "HALT" => {
                expect(0)?;
                stmts.push((line_no, Stmt::Plain(Instruction::HALT)));
            }
            "ADD" | "MUL" => {
                expect(3)?;
                let op = if mnemonic == "ADD" { Opcode::Add } else { Opcode::Mul };
                let i = Instruction::new(op, reg(args[0]).map_err(err)?, reg(args[1]).map_err(err)?, reg(args[2]).map_err(err)?, 0);
                stmts.push((line_no, Stmt::Plain(i)));
            }
            "ADDI" => {
                expect(3)?;
                let i = Instruction::new(
                    Opcode::Addi,
                    reg(args[0]).map_err(err)?,
                    reg(args[1]).map_err(err)?,
                    0,
                    imm32(args[2]).map_err(err)?,
                );
                stmts.push((line_no, Stmt::Plain(i)));
            }
            "LD" | "ST" => {
                expect(2)?;
                let r = reg(args[0]).map_err(err)?;
                let (off, baser) = mem_operand(args[1]).map_err(err)?;
                let i = if mnemonic == "LD" {
                    Instruction::new(Opcode::Ld, r, baser, 0, off)
                } else {
                    Instruction::new(Opcode::St, 0, baser, r, off)
                };
                stmts.push((line_no, Stmt::Plain(i)));
            }
            "BLT" | "BNE" => {
                expect(3)?;
                let op = if mnemonic == "BLT" { Opcode::Blt } else { Opcode::Bne };
                let t = target(args[2]).map_err(err)?;
                stmts.push((
                    line_no,
                    Stmt::Branch(op, 0, reg(args[0]).map_err(err)?, reg(args[1]).map_err(err)?, t),
                ));
            }
            "JAL" => {
                expect(2)?;
                let t = target(args[1]).map_err(err)?;
                stmts.push((line_no, Stmt::Branch(Opcode::Jal, reg(args[0]).map_err(err)?, 0, 0, t)));
            }
            "LI" => {
                expect(2)?;
                let rd = reg(args[0]).map_err(err)?;
                let v = imm64(args[1]).map_err(err)?;
                for i in load_immediate(rd, v) {
                    stmts.push((line_no, Stmt::Plain(i)));
                }
            }
            other => return Err(err(format!("unknown mnemonic {other:?}"))),
        }
    }

    let mut instructions = Vec::with_capacity(stmts.len());
    for (idx, (line, stmt)) in stmts.into_iter().enumerate() {
        let pc = base + idx as u64 * INSN_BYTES;
        let insn = match stmt {
            Stmt::Plain(i) => i,
            Stmt::Branch(op, rd, rs1, rs2, t) => {
                let off = match t {
                    Target::Offset(o) => o,
                    Target::Label(l) => {
                        let addr = *labels.get(&l).ok_or_else(|| AssembleError {
                            line,
                            message: format!("undefined label {l:?}"),
                        })?;
                        i32::try_from(addr as i64 - pc as i64).map_err(|_| AssembleError {
                            line,
                            message: format!("label {l:?} out of branch range"),
                        })?
                    }
                };
                Instruction::new(op, rd, rs1, rs2, off)
            }
        };
        instructions.push(insn);
    }
    Ok(Program { base, instructions })
}

/// Expansion of `LI rd, value` into real instructions.
pub fn load_immediate(rd: u8, value: u64) -> Vec<Instruction> {
    let addi = |rs1: u8, imm: i32| Instruction::new(Opcode::Addi, rd, rs1, 0, imm);
    let signed = value as i64;
    if let Ok(v) = i32::try_from(signed) {
        return alloc::vec![addi(0, v)];
    }
    let mut out = Vec::new();
    let hi = (value >> 32) as u32;
    let mut lo = value & 0xffff_ffff;
    let mut src = 0;
    if hi != 0 {
        // 32 doublings shift the sign-extended high half into place
        out.push(addi(0, hi as i32));
        for _ in 0..32 {
            out.push(Instruction::new(Opcode::Add, rd, rd, rd, 0));
        }
        src = rd;
    }
    while lo > 0 {
        let chunk = lo.min(i32::MAX as u64);
        out.push(addi(src, chunk as i32));
        src = rd;
        lo -= chunk;
    }
    if out.is_empty() {
        out.push(addi(0, 0));
    }
    out
}

fn reg(s: &str) -> Result<u8, String> {
    let t = s.trim();
    let digits = t
        .strip_prefix(['r', 'R', 'x', 'X'])
        .ok_or_else(|| format!("expected register, got {t:?}"))?;
    match digits.parse::<u8>() {
        Ok(n) if n < 32 => Ok(n),
        _ => Err(format!("bad register {t:?}")),
    }
}

fn imm64(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let v = if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        u64::from_str_radix(&h.replace('_', ""), 16)
    } else {
        body.replace('_', "").parse::<u64>()
    }
    .map_err(|_| format!("bad immediate {t:?}"))?;
    Ok(if neg { v.wrapping_neg() } else { v })
}

fn imm32(s: &str) -> Result<i32, String> {
    let v = imm64(s)? as i64;
    i32::try_from(v).map_err(|_| format!("immediate {s:?} does not fit 32 bits"))
}

fn mem_operand(s: &str) -> Result<(i32, u8), String> {
    let open = s.find('(').ok_or_else(|| format!("expected imm(reg), got {s:?}"))?;
    let close = s.rfind(')').filter(|&c| c > open).ok_or_else(|| format!("unbalanced {s:?}"))?;
    let off = s[..open].trim();
    let off = if off.is_empty() { 0 } else { imm32(off)? };
    Ok((off, reg(&s[open + 1..close])?))
}

fn target(s: &str) -> Result<Target, String> {
    let t = s.trim();
    if t.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
        Ok(Target::Offset(imm32(t)?))
    } else if t.is_empty() {
        Err("missing branch target".into())
    } else {
        Ok(Target::Label(t.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::Registers;

    #[test]
    fn halt_only() {
        let p = assemble("HALT", 0).unwrap();
        assert_eq!(p.instructions, [Instruction::HALT]);
    }

    #[test]
    fn backward_branch_is_negative() {
        let p = assemble("top:\n  ADDI r1, r1, 1\n  BLT r1, r2, top\n  HALT", 0x100).unwrap();
        assert_eq!(p.instructions[1].op, Opcode::Blt);
        assert_eq!(p.instructions[1].imm, -8);
    }

    #[test]
    fn undefined_label_reports_line() {
        let e = assemble("ADDI r1, r0, 1\n\nBNE r1, r0, nowhere", 0).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("nowhere"));
    }

    #[test]
    fn syntax_errors() {
        assert!(assemble("ADD r1, r2", 0).is_err());
        assert!(assemble("ADDI r32, r0, 1", 0).is_err());
        assert!(assemble("FROB", 0).is_err());
        assert!(assemble("a:\na:\nHALT", 0).is_err());
        assert!(assemble("ADDI r1, r0, 0x100000000", 0).is_err());
    }

    #[test]
    fn memory_operands_and_comments() {
        let p = assemble("LD r3, -8(r4) # load\nST r5, (r6) ; store", 0).unwrap();
        assert_eq!(p.instructions[0], Instruction::new(Opcode::Ld, 3, 4, 0, -8));
        assert_eq!(p.instructions[1], Instruction::new(Opcode::St, 0, 6, 5, 0));
    }

    fn eval_li(v: u64) -> u64 {
        let mut r = Registers::default();
        for i in load_immediate(7, v) {
            i.execute(0, &mut r, None);
        }
        r.get(7)
    }

    #[test]
    fn li_expansion_values() {
        for v in [
            0,
            5,
            u64::MAX,
            0x7fff_ffff,
            0x8000_0000,
            0x8003_0010,
            0xffff_ffff,
            0x1_0000_0000,
            0xffff_ffff_0000_0000,
            0xdead_beef_cafe_f00d,
        ] {
            assert_eq!(eval_li(v), v, "{v:#x}");
        }
        assert_eq!(load_immediate(1, 0x8000_0000).len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn li_loads_any_value(v: u64) {
            proptest::prop_assert_eq!(eval_li(v), v);
        }
    }
}

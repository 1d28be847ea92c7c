//! VMM benchmark workloads: `O(h×p) = A(h×w) · B(w×p)`.
//!
//! Matrix data comes from [`SplitMix64`]: `h*w` values for A in row-major
//! order, then `w*p` values for B in row-major order, each `next() >> 56`.
//!
//! Memory layout (all in DRAM):
//!
//! * program of CPU `c` at [`program_base`]`(c)`
//! * data from [`DATA_BASE`]: A, then B, then O, each 64-byte aligned
//!
//! CPU workloads store one value per 64-bit word; A and B row-major, O
//! row-major. Rows of O are split evenly across all CPUs.
//!
//! CIM workloads store A row-major and B transposed, both packed eight
//! bytes per word with rows padded to whole words. A is cut into row chunks,
//! one per driven CIM unit, and column blocks of at most 256. Row `i` of a
//! chunk becomes crossbar column `i`, so each unit computes a slice of O for
//! every input vector (a column of B). Units are programmed with 32-bit
//! outputs, two per word; partial sums of column blocks are added lane-wise
//! by the driver. O holds, for each vector, the packed chunks back to back;
//! [`ResultLayout`] decodes it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::asm::{assemble, AssembleError, Program};
use crate::cim::{cmd, param, REG_CMD, REG_CONFIG, REG_DATA_IN, REG_DATA_OUT, REG_STATUS};
use crate::config::{program_base, ComponentSpec, Platform, VpConfig};
use crate::error::AddressError;
use crate::interconnect::cim_base;
use crate::mem::Dram;
use crate::rng::SplitMix64;

pub const DATA_BASE: u64 = 0x0100_0000;
/// Largest block a CIM crossbar takes in either dimension.
pub const TILE: u32 = 256;
pub const VALUE_BITS: u32 = 8;
/// Output resolution the driver programs; two results per 64-bit word.
pub const DRIVER_OUTPUT_RES: u32 = 32;
const PROGRAM_SLOT: u64 = 0x1_0000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub network: String,
    pub layer: String,
    pub h: u32,
    pub w: u32,
    pub p: u32,
}

impl LayerSpec {
    pub fn custom(h: u32, w: u32, p: u32) -> Self {
        LayerSpec {
            network: "custom".to_string(),
            layer: format!("{h}x{w}x{p}"),
            h,
            w,
            p,
        }
    }

    /// Lowercase `network-layer`, e.g. `googlenet-conv1`.
    pub fn id(&self) -> String {
        format!("{}-{}", self.network, self.layer).to_lowercase()
    }

    pub fn macs(&self) -> u64 {
        u64::from(self.h) * u64::from(self.w) * u64::from(self.p)
    }
}

/// The six benchmark layers.
pub fn layer_table() -> Vec<LayerSpec> {
    let l = |n: &str, l: &str, h, w, p| LayerSpec {
        network: n.to_string(),
        layer: l.to_string(),
        h,
        w,
        p,
    };
    vec![
        l("Googlenet", "Conv1", 224, 224, 7),
        l("Googlenet", "Conv2", 56, 56, 3),
        l("ImageNet", "Conv1", 224, 224, 11),
        l("ImageNet", "Conv2", 207, 207, 5),
        l("MobileNets", "Conv1", 224, 224, 3),
        l("MobileNets", "Conv2", 112, 112, 3),
    ]
}

/// Looks up a table layer by [`LayerSpec::id`] or parses `custom:h,w,p`.
pub fn parse_layer(s: &str) -> Option<LayerSpec> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("custom:").or_else(|| s.strip_prefix("custom ")) {
        let v: Vec<u32> = rest.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
        return match v[..] {
            [h, w, p] if h > 0 && w > 0 && p > 0 => Some(LayerSpec::custom(h, w, p)),
            _ => None,
        };
    }
    let key = s.to_lowercase();
    layer_table().into_iter().find(|l| l.id() == key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadMode {
    Cpu,
    Cim,
}

impl WorkloadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadMode::Cpu => "cpu",
            WorkloadMode::Cim => "cim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrices {
    pub h: usize,
    pub w: usize,
    pub p: usize,
    /// `h*w`, row-major.
    pub a: Vec<u64>,
    /// `w*p`, row-major.
    pub b: Vec<u64>,
}

impl Matrices {
    pub fn generate(layer: &LayerSpec, seed: u64) -> Self {
        let (h, w, p) = (layer.h as usize, layer.w as usize, layer.p as usize);
        let mut rng = SplitMix64::new(seed);
        let a = (0..h * w).map(|_| rng.bits(VALUE_BITS)).collect();
        let b = (0..w * p).map(|_| rng.bits(VALUE_BITS)).collect();
        Matrices { h, w, p, a, b }
    }

    /// `h*p` products, row-major.
    pub fn product(&self) -> Vec<u64> {
        let mut o = vec![0u64; self.h * self.p];
        for i in 0..self.h {
            for k in 0..self.w {
                let a = self.a[i * self.w + k];
                for j in 0..self.p {
                    o[i * self.p + j] += a * self.b[k * self.p + j];
                }
            }
        }
        o
    }
}

/// Where a workload leaves O in DRAM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResultLayout {
    /// `O[i][j]` at `base + (i*p + j) * 8`.
    Words { base: u64, h: usize, p: usize },
    /// Per vector `j`, `words_per_vector` words; chunk `(row0, rows, offset)`
    /// holds rows `row0..row0+rows` as 32-bit lanes starting `offset` words in.
    Packed {
        base: u64,
        h: usize,
        p: usize,
        words_per_vector: usize,
        chunks: Vec<(usize, usize, usize)>,
    },
}

impl ResultLayout {
    /// Reads O (row-major `h*p`) back out of DRAM.
    pub fn decode(&self, dram: &Dram) -> Result<Vec<u64>, AddressError> {
        match self {
            ResultLayout::Words { base, h, p } => (0..h * p).map(|n| dram.peek_u64(base + n as u64 * 8)).collect(),
            ResultLayout::Packed {
                base,
                h,
                p,
                words_per_vector,
                chunks,
            } => {
                let mut o = vec![0u64; h * p];
                for j in 0..*p {
                    for &(row0, rows, off) in chunks {
                        for r in 0..rows {
                            let word = (j * words_per_vector + off + r / 2) as u64;
                            let v = dram.peek_u64(base + word * 8)?;
                            let lane = if r % 2 == 0 { v & 0xffff_ffff } else { v >> 32 };
                            o[(row0 + r) * p + j] = lane;
                        }
                    }
                }
                Ok(o)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkloadError {
    #[error("layer dimensions must be positive")]
    EmptyLayer,
    #[error("platform has no cpu")]
    NoCpu,
    #[error("platform has no cim unit reachable from a cpu")]
    NoCim,
    #[error("generated program for {cpu} needs {bytes} bytes, slot holds {PROGRAM_SLOT}")]
    ProgramTooLarge { cpu: String, bytes: u64 },
    #[error("data does not fit in dram ({0} bytes)")]
    DataTooLarge(u64),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

/// Programs, initial memory and expected result for one benchmark run.
#[derive(Debug, Clone)]
pub struct Workload {
    pub layer: LayerSpec,
    pub mode: WorkloadMode,
    pub seed: u64,
    pub matrices: Matrices,
    pub expected: Vec<u64>,
    /// `(cpu id, program)` for every CPU in numbering order.
    pub programs: Vec<(String, Program)>,
    /// `(address, bytes)` data images.
    pub data: Vec<(u64, Vec<u8>)>,
    pub layout: ResultLayout,
}

impl Workload {
    /// Copies programs and data into the platform's DRAM.
    pub fn install(&self, platform: &mut Platform) -> Result<(), AddressError> {
        let dram = platform.dram_mut();
        for (_, prog) in &self.programs {
            dram.load(prog.base, &prog.bytes())?;
        }
        for (addr, bytes) in &self.data {
            dram.load(*addr, bytes)?;
        }
        Ok(())
    }

    pub fn result(&self, platform: &Platform) -> Result<Vec<u64>, AddressError> {
        self.layout.decode(platform.dram())
    }
}

fn align64(x: u64) -> u64 {
    x.div_ceil(64) * 64
}

fn words_to_bytes(words: &[u64]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

/// Packs each row of a row-major `rows*cols` byte matrix into whole words.
fn pack_rows(m: &[u64], rows: usize, cols: usize) -> (Vec<u8>, u64) {
    let stride = cols.div_ceil(8) * 8;
    let mut out = vec![0u8; rows * stride];
    for r in 0..rows {
        for c in 0..cols {
            out[r * stride + c] = m[r * cols + c] as u8;
        }
    }
    (out, stride as u64)
}

fn cpu_ids(cfg: &VpConfig) -> Vec<String> {
    cfg.components()
        .filter(|(_, c)| matches!(c, ComponentSpec::Cpu { .. }))
        .map(|(_, c)| c.id().to_string())
        .collect()
}

fn finish(cpu: &str, base: u64, text: &str) -> Result<Program, WorkloadError> {
    let prog = assemble(text, base)?;
    let bytes = prog.len() as u64 * 8;
    if bytes > PROGRAM_SLOT {
        return Err(WorkloadError::ProgramTooLarge {
            cpu: cpu.to_string(),
            bytes,
        });
    }
    Ok(prog)
}

/// Builds the benchmark for `layer` on the platform described by `cfg`.
pub fn gen_vmm_workload(cfg: &VpConfig, layer: &LayerSpec, mode: WorkloadMode, seed: u64) -> Result<Workload, WorkloadError> {
    if layer.h == 0 || layer.w == 0 || layer.p == 0 {
        return Err(WorkloadError::EmptyLayer);
    }
    let mut wl = workload_from_matrices(cfg, mode, Matrices::generate(layer, seed))?;
    wl.layer = layer.clone();
    wl.seed = seed;
    Ok(wl)
}

/// Like [`gen_vmm_workload`] but with caller-supplied operands. Values must
/// fit in 8 bits.
pub fn workload_from_matrices(cfg: &VpConfig, mode: WorkloadMode, m: Matrices) -> Result<Workload, WorkloadError> {
    if m.h == 0 || m.w == 0 || m.p == 0 {
        return Err(WorkloadError::EmptyLayer);
    }
    assert_eq!(m.a.len(), m.h * m.w);
    assert_eq!(m.b.len(), m.w * m.p);
    assert!(m.a.iter().chain(&m.b).all(|&v| v < 1 << VALUE_BITS));
    let cpus = cpu_ids(cfg);
    if cpus.is_empty() {
        return Err(WorkloadError::NoCpu);
    }
    let expected = m.product();
    let (programs, data, layout) = match mode {
        WorkloadMode::Cpu => cpu_workload(&cpus, &m)?,
        WorkloadMode::Cim => cim_workload(cfg, &cpus, &m)?,
    };
    let end = data.iter().map(|(a, b)| a + b.len() as u64).max().unwrap_or(DATA_BASE);
    let capacity = cfg
        .components()
        .find_map(|(_, c)| match c {
            ComponentSpec::Dram { params, .. } => Some(params.capacity),
            _ => None,
        })
        .unwrap_or(0);
    if end > capacity {
        return Err(WorkloadError::DataTooLarge(end));
    }
    Ok(Workload {
        layer: LayerSpec::custom(m.h as u32, m.w as u32, m.p as u32),
        mode,
        seed: 0,
        matrices: m,
        expected,
        programs,
        data,
        layout,
    })
}

type Parts = (Vec<(String, Program)>, Vec<(u64, Vec<u8>)>, ResultLayout);

fn cpu_workload(cpus: &[String], m: &Matrices) -> Result<Parts, WorkloadError> {
    let (h, w, p) = (m.h as u64, m.w as u64, m.p as u64);
    let a_base = DATA_BASE;
    let b_base = align64(a_base + h * w * 8);
    let o_base = align64(b_base + w * p * 8);
    let n = cpus.len() as u64;
    let mut programs = Vec::new();
    for (c, name) in cpus.iter().enumerate() {
        let (r0, r1) = (h * c as u64 / n, h * (c as u64 + 1) / n);
        let text = format!(
            "\
    LI r1, {r0}
    LI r2, {r1}
    LI r4, {p}
    LI r6, {w}
    LI r16, {pb}
    LI r17, {wb}
    LI r8, {a}
    LI r13, {o}
    BLT r1, r2, row
    JAL r0, done
row:
    ADDI r3, r0, 0
    LI r18, {b_base}
col:
    ADDI r7, r0, 0
    ADD r14, r8, r0
    ADD r15, r18, r0
    ADDI r5, r0, 0
inner:
    LD r10, 0(r14)
    LD r11, 0(r15)
    MUL r12, r10, r11
    ADD r7, r7, r12
    ADDI r14, r14, 8
    ADD r15, r15, r16
    ADDI r5, r5, 1
    BLT r5, r6, inner
    ST r7, 0(r13)
    ADDI r13, r13, 8
    ADDI r18, r18, 8
    ADDI r3, r3, 1
    BLT r3, r4, col
    ADD r8, r8, r17
    ADDI r1, r1, 1
    BLT r1, r2, row
done:
    HALT
",
            pb = p * 8,
            wb = w * 8,
            a = a_base + r0 * w * 8,
            o = o_base + r0 * p * 8,
        );
        programs.push((name.clone(), finish(name, program_base(c), &text)?));
    }
    let data = vec![
        (a_base, words_to_bytes(&m.a)),
        (b_base, words_to_bytes(&m.b)),
        (o_base, vec![0u8; (h * p * 8) as usize]),
    ];
    Ok((
        programs,
        data,
        ResultLayout::Words {
            base: o_base,
            h: m.h,
            p: m.p,
        },
    ))
}

#[derive(Debug, Clone, Copy)]
struct Tile {
    unit_base: u64,
    row0: usize,
    rows: usize,
    k0: usize,
    klen: usize,
    /// Word offset of this chunk inside one vector's output.
    out_off: usize,
}

struct Emitter {
    text: String,
    labels: usize,
}

impl Emitter {
    fn line(&mut self, s: &str) {
        self.text.push_str("    ");
        self.text.push_str(s);
        self.text.push('\n');
    }

    fn label(&mut self) -> String {
        self.labels += 1;
        format!("L{}", self.labels)
    }

    fn place(&mut self, label: &str) {
        let _ = writeln!(self.text, "{label}:");
    }

    /// Copies `words` words per row for `rows` rows from `src` (row stride
    /// `stride` bytes, plus the byte offset in `offset` if given) into the
    /// DATA_IN register of the unit at `r20`.
    fn stream(&mut self, src: u64, offset: Option<&str>, rows: usize, words: usize, stride: u64) {
        let skip = stride - words as u64 * 8;
        self.line(&format!("LI r21, {src}"));
        if let Some(r) = offset {
            self.line(&format!("ADD r21, r21, {r}"));
        }
        self.line(&format!("LI r22, {rows}"));
        self.line(&format!("LI r24, {skip}"));
        let (outer, inner) = (self.label(), self.label());
        self.place(&outer);
        self.line(&format!("LI r23, {words}"));
        self.place(&inner);
        self.line("LD r10, 0(r21)");
        self.line(&format!("ST r10, {REG_DATA_IN}(r20)"));
        self.line("ADDI r21, r21, 8");
        self.line("ADDI r23, r23, -1");
        self.line(&format!("BNE r23, r0, {inner}"));
        self.line("ADD r21, r21, r24");
        self.line("ADDI r22, r22, -1");
        self.line(&format!("BNE r22, r0, {outer}"));
    }

    fn unit(&mut self, base: u64) {
        self.line(&format!("LI r20, {base}"));
    }

    fn store_word(&mut self, value: u64, reg_offset: u64) {
        self.line(&format!("LI r10, {value}"));
        self.line(&format!("ST r10, {reg_offset}(r20)"));
    }
}

fn cim_workload(cfg: &VpConfig, cpus: &[String], m: &Matrices) -> Result<Parts, WorkloadError> {
    let (h, w, p) = (m.h, m.w, m.p);
    // unit k (declaration order) lives at cim_base(k)
    let cim_names: Vec<String> = cfg
        .components()
        .filter(|(_, c)| matches!(c, ComponentSpec::Cim { .. }))
        .map(|(_, c)| c.id().to_string())
        .collect();
    let drivers = cfg.cim_drivers();
    let units: Vec<(u64, usize)> = drivers
        .iter()
        .map(|(cim, cpu)| {
            let k = cim_names.iter().position(|n| n == cim).unwrap();
            let c = cpus.iter().position(|n| n == cpu).unwrap();
            (cim_base(k as u32), c)
        })
        .collect();
    if units.is_empty() {
        return Err(WorkloadError::NoCim);
    }

    let (a_bytes, stride) = pack_rows(&m.a, h, w);
    let bt: Vec<u64> = (0..p).flat_map(|j| (0..w).map(move |k| (j, k))).map(|(j, k)| m.b[k * p + j]).collect();
    let (bt_bytes, _) = pack_rows(&bt, p, w);
    let a_base = DATA_BASE;
    let b_base = align64(a_base + a_bytes.len() as u64);
    let o_base = align64(b_base + bt_bytes.len() as u64);

    // row chunks, one per unit where possible, never above the crossbar size
    let u = units.len();
    let chunk = h.div_ceil(u).min(TILE as usize);
    let mut chunks = Vec::new();
    let mut off = 0;
    for row0 in (0..h).step_by(chunk) {
        let rows = chunk.min(h - row0);
        chunks.push((row0, rows, off));
        off += rows.div_ceil(2);
    }
    let words_per_vector = off;

    // every column block of chunk q goes to unit q % u, in k order
    let mut per_unit: Vec<Vec<Tile>> = vec![Vec::new(); u];
    for (q, &(row0, rows, out_off)) in chunks.iter().enumerate() {
        for k0 in (0..w).step_by(TILE as usize) {
            per_unit[q % u].push(Tile {
                unit_base: units[q % u].0,
                row0,
                rows,
                k0,
                klen: (TILE as usize).min(w - k0),
                out_off,
            });
        }
    }

    let mut programs = Vec::new();
    for (c, name) in cpus.iter().enumerate() {
        let mine: Vec<&Vec<Tile>> = (0..u).filter(|&k| units[k].1 == c).map(|k| &per_unit[k]).collect();
        let waves = mine.iter().map(|t| t.len()).max().unwrap_or(0);
        let mut e = Emitter {
            text: String::new(),
            labels: 0,
        };
        for wave in 0..waves {
            let tiles: Vec<Tile> = mine.iter().filter_map(|t| t.get(wave).copied()).collect();
            for t in &tiles {
                e.unit(t.unit_base);
                for (pid, v) in [
                    (param::MATRIX_H, t.klen as u32),
                    (param::MATRIX_W, t.rows as u32),
                    (param::INPUT_RES, VALUE_BITS),
                    (param::WEIGHT_RES, VALUE_BITS),
                    (param::OUTPUT_RES, DRIVER_OUTPUT_RES),
                    (param::VEC_COUNT, p as u32),
                ] {
                    e.store_word(param::word(pid, v), REG_CONFIG);
                }
                e.store_word(cmd::INITIALIZE, REG_CMD);
                let words = t.klen.div_ceil(8);
                e.stream(a_base + t.row0 as u64 * stride + t.k0 as u64, None, t.rows, words, stride);
            }
            // vector loop: r26 = j * stride, r27 = j * words_per_vector * 8, r28 = vectors left
            e.line("ADDI r26, r0, 0");
            e.line("ADDI r27, r0, 0");
            e.line(&format!("LI r28, {p}"));
            let vector = e.label();
            e.place(&vector);
            for t in &tiles {
                e.unit(t.unit_base);
                e.store_word(cmd::COMPUTE, REG_CMD);
                let words = t.klen.div_ceil(8);
                e.stream(b_base + t.k0 as u64, Some("r26"), 1, words, stride);
            }
            for t in &tiles {
                e.unit(t.unit_base);
                e.line("ADDI r25, r0, 3");
                let poll = e.label();
                e.place(&poll);
                e.line(&format!("LD r10, {REG_STATUS}(r20)"));
                e.line(&format!("BNE r10, r25, {poll}"));
            }
            for t in &tiles {
                e.unit(t.unit_base);
                let dst = o_base + (t.out_off * 8) as u64;
                e.line(&format!("LI r21, {dst}"));
                e.line("ADD r21, r21, r27");
                e.line(&format!("LI r23, {}", t.rows.div_ceil(2)));
                let lp = e.label();
                e.place(&lp);
                e.line(&format!("LD r10, {REG_DATA_OUT}(r20)"));
                if t.k0 > 0 {
                    e.line("LD r11, 0(r21)");
                    e.line("ADD r10, r10, r11");
                }
                e.line("ST r10, 0(r21)");
                e.line("ADDI r21, r21, 8");
                e.line("ADDI r23, r23, -1");
                e.line(&format!("BNE r23, r0, {lp}"));
            }
            e.line(&format!("LI r10, {stride}"));
            e.line("ADD r26, r26, r10");
            e.line(&format!("LI r10, {}", words_per_vector * 8));
            e.line("ADD r27, r27, r10");
            e.line("ADDI r28, r28, -1");
            e.line(&format!("BNE r28, r0, {vector}"));
        }
        e.line("HALT");
        programs.push((name.clone(), finish(name, program_base(c), &e.text)?));
    }

    let data = vec![
        (a_base, a_bytes),
        (b_base, bt_bytes),
        (o_base, vec![0u8; p * words_per_vector * 8]),
    ];
    Ok((
        programs,
        data,
        ResultLayout::Packed {
            base: o_base,
            h,
            p,
            words_per_vector,
            chunks,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build, preset_load_oriented, preset_uniform};

    fn run(cfg: &VpConfig, layer: &LayerSpec, mode: WorkloadMode, seed: u64) -> (Vec<u64>, Vec<u64>) {
        let wl = gen_vmm_workload(cfg, layer, mode, seed).unwrap();
        let mut p = build(cfg).unwrap();
        wl.install(&mut p).unwrap();
        p.run_sequential().unwrap();
        assert!(p.cores().all(|c| c.halted()));
        (wl.result(&p).unwrap(), wl.expected)
    }

    #[test]
    fn table_has_six_layers() {
        let t = layer_table();
        assert_eq!(t.len(), 6);
        assert_eq!((t[0].h, t[0].w, t[0].p), (224, 224, 7));
        assert_eq!((t[3].h, t[3].w, t[3].p), (207, 207, 5));
        assert_eq!((t[5].h, t[5].w, t[5].p), (112, 112, 3));
        assert_eq!(parse_layer("imagenet-conv2").unwrap().h, 207);
        assert_eq!(parse_layer("custom:2,3,4").unwrap(), LayerSpec::custom(2, 3, 4));
        assert!(parse_layer("custom:2,0,4").is_none());
        assert!(parse_layer("alexnet-conv9").is_none());
    }

    #[test]
    fn small_layer_cpu_path() {
        let (got, want) = run(&preset_uniform(), &LayerSpec::custom(2, 3, 2), WorkloadMode::Cpu, 1);
        assert_eq!(got, want);
    }

    #[test]
    fn small_layer_cim_path() {
        for cfg in [preset_uniform(), preset_load_oriented()] {
            let (got, want) = run(&cfg, &LayerSpec::custom(2, 3, 2), WorkloadMode::Cim, 1);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn multiple_column_blocks_accumulate() {
        let (got, want) = run(&preset_uniform(), &LayerSpec::custom(5, 300, 2), WorkloadMode::Cim, 3);
        assert_eq!(got, want);
    }

    #[test]
    fn zero_a_gives_zero_o() {
        let mut m = Matrices::generate(&LayerSpec::custom(3, 4, 2), 9);
        m.a.iter_mut().for_each(|v| *v = 0);
        for mode in [WorkloadMode::Cpu, WorkloadMode::Cim] {
            let cfg = preset_uniform();
            let wl = workload_from_matrices(&cfg, mode, m.clone()).unwrap();
            let mut p = build(&cfg).unwrap();
            wl.install(&mut p).unwrap();
            p.run_sequential().unwrap();
            assert_eq!(wl.result(&p).unwrap(), [0; 6]);
        }
    }
}

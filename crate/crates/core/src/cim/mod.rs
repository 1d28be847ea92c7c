//! Memristor-crossbar compute-in-memory unit.
//!
//! The host drives the unit through five 64-bit memory-mapped registers:
//!
//! | offset | name     | access | meaning                                        |
//! |--------|----------|--------|------------------------------------------------|
//! | 0x00   | CONFIG   | W      | `param << 32 \| value`, see [`param`]          |
//! | 0x08   | STATUS   | R      | controller state: IDLE=0, IN=1, OP=2, OUT=3    |
//! | 0x10   | DATA_IN  | W      | one port word of weights or input vector       |
//! | 0x18   | DATA_OUT | R      | next port word of results                      |
//! | 0x20   | CMD      | W      | [`cmd::INITIALIZE`] or [`cmd::COMPUTE`]        |
//!
//! A run looks like: CONFIG writes, `INITIALIZE`, weight words, then per
//! vector `COMPUTE`, input words, poll STATUS until OUT, read result words.
//! Weights stream column by column: crossbar column `j` is sent as
//! `ceil(matrix_h * weight_res / in_port_width)` words packing `W[0..matrix_h][j]`.
//! Values are packed bit-contiguously, LSB first (see [`pack`]).

pub mod pack;

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::time::SimTime;

pub const REG_CONFIG: u64 = 0x00;
pub const REG_STATUS: u64 = 0x08;
pub const REG_DATA_IN: u64 = 0x10;
pub const REG_DATA_OUT: u64 = 0x18;
pub const REG_CMD: u64 = 0x20;

/// Size of each unit's register window in the address map.
pub const WINDOW: u64 = 0x1_0000;

/// CONFIG parameter ids (bits 32..40 of a CONFIG write).
pub mod param {
    pub const MATRIX_H: u64 = 1;
    pub const MATRIX_W: u64 = 2;
    pub const INPUT_RES: u64 = 3;
    pub const OUTPUT_RES: u64 = 4;
    pub const WEIGHT_RES: u64 = 5;
    pub const VEC_COUNT: u64 = 6;

    pub const fn word(param: u64, value: u32) -> u64 {
        param << 32 | value as u64
    }
}

pub mod cmd {
    pub const INITIALIZE: u64 = 1;
    pub const COMPUTE: u64 = 2;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FsmState {
    Idle = 0,
    In = 1,
    Op = 2,
    Out = 3,
}

impl FsmState {
    pub fn name(self) -> &'static str {
        match self {
            FsmState::Idle => "IDLE",
            FsmState::In => "IN",
            FsmState::Op => "OP",
            FsmState::Out => "OUT",
        }
    }

    pub fn successor(self) -> FsmState {
        match self {
            FsmState::Idle => FsmState::In,
            FsmState::In => FsmState::Op,
            FsmState::Op => FsmState::Out,
            FsmState::Out => FsmState::Idle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CimConfig {
    pub rows: u32,
    pub cols: u32,
    pub input_res: u32,
    pub output_res: u32,
    pub weight_res: u32,
    pub in_port_width: u32,
    pub out_port_width: u32,
    pub op_cycles: u64,
    pub clock_period: SimTime,
    pub matrix_h: u32,
    pub matrix_w: u32,
    pub vec_count: u32,
}

impl Default for CimConfig {
    fn default() -> Self {
        CimConfig {
            rows: 256,
            cols: 256,
            input_res: 8,
            output_res: 16,
            weight_res: 8,
            in_port_width: 64,
            out_port_width: 64,
            op_cycles: 64,
            clock_period: SimTime::from_ns(10),
            matrix_h: 256,
            matrix_w: 256,
            vec_count: 1,
        }
    }
}

impl CimConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let check = |param: &'static str, value: u64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ProtocolError::InvalidParameter { param, value })
            }
        };
        check("input_res", self.input_res.into(), (1..=32).contains(&self.input_res))?;
        check("weight_res", self.weight_res.into(), (1..=32).contains(&self.weight_res))?;
        check("output_res", self.output_res.into(), (1..=64).contains(&self.output_res))?;
        for (name, w) in [("in_port_width", self.in_port_width), ("out_port_width", self.out_port_width)] {
            check(name, w.into(), w % 8 == 0 && (8..=64).contains(&w))?;
        }
        check("op_cycles", self.op_cycles, self.op_cycles > 0)?;
        check("clock_period", self.clock_period.as_ps(), !self.clock_period.is_zero())?;
        check("matrix_h", self.matrix_h.into(), self.matrix_h > 0)?;
        check("matrix_w", self.matrix_w.into(), self.matrix_w > 0)?;
        if self.matrix_h > self.rows || self.matrix_w > self.cols {
            return Err(ProtocolError::MatrixTooLarge {
                h: self.matrix_h,
                w: self.matrix_w,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Port cycles to stream an input vector of `vec_len` values.
    pub fn in_cycles(&self, vec_len: u32) -> u64 {
        in_cycles(self, vec_len)
    }

    /// Port cycles to drain `outputs` results.
    pub fn out_cycles(&self, outputs: u32) -> u64 {
        (u64::from(outputs) * u64::from(self.output_res)).div_ceil(u64::from(self.out_port_width))
    }

    pub fn weight_words_per_column(&self) -> usize {
        pack::words_needed(self.matrix_h as usize, self.weight_res, self.in_port_width)
    }
}

/// `ceil(vec_len * input_res / in_port_width)`.
pub fn in_cycles(cfg: &CimConfig, vec_len: u32) -> u64 {
    (u64::from(vec_len) * u64::from(cfg.input_res)).div_ceil(u64::from(cfg.in_port_width))
}

/// Functional crossbar: `out[j] = min(sum_k input[k] * weights[k][j], 2^output_res - 1)`,
/// with `weights` row-major `h x w`.
pub fn crossbar_vmm(weights: &[u64], h: usize, w: usize, input: &[u64], output_res: u32) -> Vec<u64> {
    debug_assert_eq!(weights.len(), h * w);
    debug_assert_eq!(input.len(), h);
    let max = if output_res >= 64 {
        u128::from(u64::MAX)
    } else {
        (1u128 << output_res) - 1
    };
    let mut acc = vec![0u128; w];
    for (k, &x) in input.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let row = &weights[k * w..(k + 1) * w];
        for (a, &g) in acc.iter_mut().zip(row) {
            *a += u128::from(x) * u128::from(g);
        }
    }
    acc.into_iter().map(|s| s.min(max) as u64).collect()
}

/// Per-state durations of one IDLE..IDLE traversal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmTiming {
    pub in_cycles: u64,
    pub op_cycles: u64,
    pub out_cycles: u64,
    pub in_time: SimTime,
    pub op_time: SimTime,
    pub out_time: SimTime,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CimStats {
    pub vectors: u64,
    pub weight_loads: u64,
    pub weight_words: u64,
    pub input_words: u64,
    pub output_words: u64,
    pub status_reads: u64,
}

#[derive(Debug, Clone)]
pub struct CimUnit {
    name: String,
    base: u64,
    hw: CimConfig,
    // accumulated by CONFIG writes, latched by INITIALIZE
    pending: CimConfig,
    active: CimConfig,
    fsm: FsmState,
    weights: Vec<u64>,
    weight_words: Vec<u64>,
    loading: bool,
    weights_ready: bool,
    in_words: Vec<u64>,
    out_words: VecDeque<u64>,
    op_done_at: SimTime,
    cur: FsmTiming,
    last: Option<FsmTiming>,
    log: Vec<(SimTime, FsmState)>,
    stats: CimStats,
}

impl CimUnit {
    pub fn new(name: impl Into<String>, base: u64, hw: CimConfig) -> Self {
        CimUnit {
            name: name.into(),
            base,
            hw,
            pending: hw,
            active: hw,
            fsm: FsmState::Idle,
            weights: Vec::new(),
            weight_words: Vec::new(),
            loading: false,
            weights_ready: false,
            in_words: Vec::new(),
            out_words: VecDeque::new(),
            op_done_at: SimTime::ZERO,
            cur: FsmTiming::default(),
            last: None,
            log: vec![(SimTime::ZERO, FsmState::Idle)],
            stats: CimStats::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn state(&self) -> FsmState {
        self.fsm
    }

    /// Latched configuration of the current weight set.
    pub fn active_config(&self) -> &CimConfig {
        &self.active
    }

    pub fn stats(&self) -> CimStats {
        self.stats
    }

    /// Every state entered, with its entry time, starting from IDLE at 0.
    pub fn fsm_log(&self) -> &[(SimTime, FsmState)] {
        &self.log
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn cycle(&self) -> SimTime {
        self.hw.clock_period
    }

    /// Durations of the most recent complete IDLE..IDLE traversal.
    pub fn fsm_timing(&self) -> Option<FsmTiming> {
        self.last
    }

    fn enter(&mut self, at: SimTime, s: FsmState) {
        debug_assert_eq!(self.fsm.successor(), s);
        self.fsm = s;
        self.log.push((at, s));
    }

    /// Applies the timed OP→OUT transition if it is due at `now`.
    pub fn advance(&mut self, now: SimTime) {
        if self.fsm == FsmState::Op && now >= self.op_done_at {
            let at = self.op_done_at;
            self.enter(at, FsmState::Out);
        }
    }

    /// Register write arriving at `now`; returns the access latency.
    pub fn write(&mut self, offset: u64, value: u64, now: SimTime) -> Result<SimTime, ProtocolError> {
        self.advance(now);
        let cycle = self.hw.clock_period;
        let done = now + cycle;
        match offset {
            REG_CONFIG => {
                if self.fsm != FsmState::Idle {
                    return Err(ProtocolError::ConfigNotIdle(self.fsm.name()));
                }
                let v = value as u32;
                match value >> 32 {
                    param::MATRIX_H => self.pending.matrix_h = v,
                    param::MATRIX_W => self.pending.matrix_w = v,
                    param::INPUT_RES => self.pending.input_res = v,
                    param::OUTPUT_RES => self.pending.output_res = v,
                    param::WEIGHT_RES => self.pending.weight_res = v,
                    param::VEC_COUNT => self.pending.vec_count = v,
                    other => return Err(ProtocolError::UnknownParameter(other)),
                }
            }
            REG_CMD => match value {
                cmd::INITIALIZE => {
                    if self.fsm != FsmState::Idle {
                        return Err(ProtocolError::CommandNotAllowed {
                            cmd: "INITIALIZE",
                            state: self.fsm.name(),
                        });
                    }
                    self.pending.validate()?;
                    self.active = self.pending;
                    self.weights.clear();
                    self.weight_words.clear();
                    self.loading = true;
                    self.weights_ready = false;
                    self.stats.weight_loads += 1;
                }
                cmd::COMPUTE => {
                    if self.fsm != FsmState::Idle {
                        return Err(ProtocolError::CommandNotAllowed {
                            cmd: "COMPUTE",
                            state: self.fsm.name(),
                        });
                    }
                    if !self.weights_ready {
                        return Err(ProtocolError::WeightsIncomplete);
                    }
                    self.in_words.clear();
                    self.cur = FsmTiming::default();
                    self.enter(done, FsmState::In);
                }
                other => return Err(ProtocolError::UnknownCommand(other)),
            },
            REG_DATA_IN => match self.fsm {
                FsmState::Idle if self.loading => self.load_weight_word(value),
                FsmState::In => {
                    self.stats.input_words += 1;
                    self.cur.in_cycles += 1;
                    self.in_words.push(value);
                    if self.in_words.len() as u64 == self.active.in_cycles(self.active.matrix_h) {
                        self.start_op(done);
                    }
                }
                s => return Err(ProtocolError::UnexpectedInput(s.name())),
            },
            REG_STATUS | REG_DATA_OUT => return Err(ProtocolError::ReadOnly(offset)),
            _ => return Err(ProtocolError::BadOffset(offset)),
        }
        Ok(cycle)
    }

    /// Register read arriving at `now`; returns the value and access latency.
    pub fn read(&mut self, offset: u64, now: SimTime) -> Result<(u64, SimTime), ProtocolError> {
        self.advance(now);
        let cycle = self.hw.clock_period;
        match offset {
            REG_STATUS => {
                self.stats.status_reads += 1;
                Ok((self.fsm as u64, cycle))
            }
            REG_DATA_OUT => {
                if self.fsm != FsmState::Out {
                    return Err(ProtocolError::NoOutput(self.fsm.name()));
                }
                let w = self.out_words.pop_front().unwrap_or(0);
                self.stats.output_words += 1;
                self.cur.out_cycles += 1;
                if self.out_words.is_empty() {
                    let c = self.active.clock_period;
                    self.cur.op_cycles = self.active.op_cycles;
                    self.cur.in_time = c.times(self.cur.in_cycles);
                    self.cur.op_time = c.times(self.cur.op_cycles);
                    self.cur.out_time = c.times(self.cur.out_cycles);
                    self.last = Some(self.cur);
                    self.enter(now + cycle, FsmState::Idle);
                }
                Ok((w, cycle))
            }
            REG_CONFIG | REG_DATA_IN | REG_CMD => Err(ProtocolError::WriteOnly(offset)),
            _ => Err(ProtocolError::BadOffset(offset)),
        }
    }

    fn load_weight_word(&mut self, value: u64) {
        let cfg = self.active;
        self.stats.weight_words += 1;
        self.weight_words.push(value);
        let per_col = cfg.weight_words_per_column();
        let cols = cfg.matrix_w as usize;
        if self.weight_words.len() == per_col * cols {
            let (h, w) = (cfg.matrix_h as usize, cols);
            let mut weights = vec![0u64; h * w];
            for j in 0..w {
                let col = pack::unpack(
                    &self.weight_words[j * per_col..(j + 1) * per_col],
                    cfg.weight_res,
                    cfg.in_port_width,
                    h,
                );
                for (k, v) in col.into_iter().enumerate() {
                    weights[k * w + j] = v;
                }
            }
            self.weights = weights;
            self.weight_words.clear();
            self.loading = false;
            self.weights_ready = true;
        }
    }

    fn start_op(&mut self, at: SimTime) {
        let cfg = self.active;
        self.enter(at, FsmState::Op);
        let input = pack::unpack(&self.in_words, cfg.input_res, cfg.in_port_width, cfg.matrix_h as usize);
        let out = self.compute_vmm(&input);
        self.out_words = pack::pack(&out, cfg.output_res, cfg.out_port_width).into();
        self.op_done_at = at + cfg.clock_period.times(cfg.op_cycles);
        self.stats.vectors += 1;
    }

    /// Crossbar evaluation of one input vector against the loaded weights.
    pub fn compute_vmm(&self, input: &[u64]) -> Vec<u64> {
        let cfg = &self.active;
        crossbar_vmm(
            &self.weights,
            cfg.matrix_h as usize,
            cfg.matrix_w as usize,
            input,
            cfg.output_res,
        )
    }

    /// Folds architecturally visible state into `h`.
    pub fn digest(&self, h: &mut crate::digest::Fnv) {
        h.write_u64(self.fsm as u64);
        h.write_u64(self.stats.vectors);
        h.write_u64(self.stats.weight_loads);
        for &w in &self.weights {
            h.write_u64(w);
        }
        for &(t, s) in &self.log {
            h.write_u64(t.as_ps());
            h.write_u64(s as u64);
        }
    }
}

/// Whether a state sequence is a prefix of `(IDLE IN OP OUT)*`.
pub fn is_valid_traversal(states: impl IntoIterator<Item = FsmState>) -> bool {
    let mut expect = FsmState::Idle;
    for s in states {
        if s != expect {
            return false;
        }
        expect = s.successor();
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(cfg: CimConfig) -> CimUnit {
        CimUnit::new("cim0", 0x8000_0000, cfg)
    }

    fn t(ns: u64) -> SimTime {
        SimTime::from_ns(ns)
    }

    fn program(u: &mut CimUnit, h: u32, w: u32, weights_rowmajor: &[u64], now: &mut u64) {
        u.write(REG_CONFIG, param::word(param::MATRIX_H, h), t(*now)).unwrap();
        u.write(REG_CONFIG, param::word(param::MATRIX_W, w), t(*now)).unwrap();
        u.write(REG_CMD, cmd::INITIALIZE, t(*now)).unwrap();
        let cfg = *u.active_config();
        for j in 0..w as usize {
            let col: Vec<u64> = (0..h as usize).map(|k| weights_rowmajor[k * w as usize + j]).collect();
            for word in pack::pack(&col, cfg.weight_res, cfg.in_port_width) {
                *now += 10;
                u.write(REG_DATA_IN, word, t(*now)).unwrap();
            }
        }
    }

    fn run_vector(u: &mut CimUnit, input: &[u64], now: &mut u64) -> Vec<u64> {
        let cfg = *u.active_config();
        u.write(REG_CMD, cmd::COMPUTE, t(*now)).unwrap();
        for word in pack::pack(input, cfg.input_res, cfg.in_port_width) {
            *now += 10;
            u.write(REG_DATA_IN, word, t(*now)).unwrap();
        }
        assert_eq!(u.state(), FsmState::Op);
        *now += 10_000;
        assert_eq!(u.read(REG_STATUS, t(*now)).unwrap().0, FsmState::Out as u64);
        let mut words = Vec::new();
        while u.state() == FsmState::Out {
            *now += 10;
            words.push(u.read(REG_DATA_OUT, t(*now)).unwrap().0);
        }
        pack::unpack(&words, cfg.output_res, cfg.out_port_width, cfg.matrix_w as usize)
    }

    #[test]
    fn identity_weights_pass_inputs_through() {
        let mut u = unit(CimConfig::default());
        let mut id = vec![0u64; 16];
        for i in 0..4 {
            id[i * 4 + i] = 1;
        }
        let mut now = 0;
        program(&mut u, 4, 4, &id, &mut now);
        assert_eq!(run_vector(&mut u, &[1, 2, 3, 4], &mut now), [1, 2, 3, 4]);
        assert!(is_valid_traversal(u.fsm_log().iter().map(|e| e.1)));
    }

    #[test]
    fn small_matmul_matches_hand_values() {
        // W[k][j]: column j holds A row j, so out = A . in
        // A = [[1,2],[3,4]] => W = [[1,3],[2,4]]; in = [5,6] => [17, 39]
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        program(&mut u, 2, 2, &[1, 3, 2, 4], &mut now);
        assert_eq!(run_vector(&mut u, &[5, 6], &mut now), [17, 39]);
    }

    #[test]
    fn output_saturates_at_resolution() {
        assert_eq!(crossbar_vmm(&[4, 4], 2, 1, &[2, 3], 4), [15]);
        assert_eq!(crossbar_vmm(&[4, 4], 2, 1, &[2, 3], 5), [20]);
    }

    #[test]
    fn full_vector_reaches_op() {
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        let w = vec![1u64; 256 * 256];
        program(&mut u, 256, 256, &w, &mut now);
        u.write(REG_CMD, cmd::COMPUTE, t(now)).unwrap();
        for i in 0..32 {
            assert_eq!(u.state(), FsmState::In, "word {i}");
            u.write(REG_DATA_IN, 0x0101_0101_0101_0101, t(now)).unwrap();
        }
        assert_eq!(u.state(), FsmState::Op);
        assert!(matches!(u.read(REG_DATA_OUT, t(now)), Err(ProtocolError::NoOutput("OP"))));
    }

    #[test]
    fn protocol_errors() {
        let mut u = unit(CimConfig::default());
        assert!(matches!(
            u.write(REG_DATA_IN, 1, t(0)),
            Err(ProtocolError::UnexpectedInput("IDLE"))
        ));
        assert!(matches!(u.write(REG_CMD, cmd::COMPUTE, t(0)), Err(ProtocolError::WeightsIncomplete)));
        u.write(REG_CONFIG, param::word(param::MATRIX_H, 257), t(0)).unwrap();
        assert!(matches!(
            u.write(REG_CMD, cmd::INITIALIZE, t(0)),
            Err(ProtocolError::MatrixTooLarge { h: 257, .. })
        ));
        assert!(matches!(u.write(REG_CONFIG, 99 << 32, t(0)), Err(ProtocolError::UnknownParameter(99))));
        assert!(matches!(u.write(REG_STATUS, 0, t(0)), Err(ProtocolError::ReadOnly(_))));
        assert!(matches!(u.read(REG_CMD, t(0)), Err(ProtocolError::WriteOnly(_))));
        assert!(matches!(u.read(0x28, t(0)), Err(ProtocolError::BadOffset(0x28))));
    }

    #[test]
    fn config_rejected_outside_idle() {
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        program(&mut u, 1, 1, &[1], &mut now);
        u.write(REG_CMD, cmd::COMPUTE, t(now)).unwrap();
        assert!(matches!(
            u.write(REG_CONFIG, param::word(param::MATRIX_H, 1), t(now)),
            Err(ProtocolError::ConfigNotIdle("IN"))
        ));
    }

    #[test]
    fn status_tracks_states_and_returns_to_idle() {
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        assert_eq!(u.read(REG_STATUS, t(0)).unwrap().0, 0);
        program(&mut u, 2, 2, &[1, 0, 0, 1], &mut now);
        run_vector(&mut u, &[3, 4], &mut now);
        assert_eq!(u.state(), FsmState::Idle);
        let states: Vec<_> = u.fsm_log().iter().map(|e| e.1).collect();
        assert_eq!(states, [FsmState::Idle, FsmState::In, FsmState::Op, FsmState::Out, FsmState::Idle]);
    }

    #[test]
    fn in_cycle_formula_examples() {
        let cfg = CimConfig::default();
        assert_eq!(in_cycles(&cfg, 256), 32);
        assert_eq!(in_cycles(&cfg, 1), 1);
        let narrow = CimConfig {
            in_port_width: 16,
            ..cfg
        };
        assert_eq!(in_cycles(&narrow, 3), 2);
    }

    #[test]
    fn fsm_timing_for_full_crossbar() {
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        program(&mut u, 256, 256, &vec![0; 256 * 256], &mut now);
        run_vector(&mut u, &vec![0; 256], &mut now);
        let timing = u.fsm_timing().unwrap();
        assert_eq!(timing.in_time, SimTime::from_ns(320));
        assert_eq!(timing.op_time, SimTime::from_ns(640));
        assert_eq!(timing.out_cycles, 64);
        assert_eq!(timing.out_time, SimTime::from_ns(640));
    }

    #[test]
    fn op_to_out_happens_after_op_cycles() {
        let mut u = unit(CimConfig::default());
        let mut now = 0;
        program(&mut u, 1, 1, &[2], &mut now);
        u.write(REG_CMD, cmd::COMPUTE, t(now)).unwrap();
        now += 10;
        u.write(REG_DATA_IN, 3, t(now)).unwrap();
        // last input arrives at `now`, OP starts one cycle later and lasts 640 ns
        let op_start = now + 10;
        assert_eq!(u.read(REG_STATUS, t(op_start + 639)).unwrap().0, 2);
        assert_eq!(u.read(REG_STATUS, t(op_start + 640)).unwrap().0, 3);
        assert_eq!(u.fsm_log().last().unwrap().0, t(op_start + 640));
    }

    #[test]
    fn traversal_checker() {
        use FsmState::*;
        assert!(is_valid_traversal([Idle, In, Op, Out, Idle, In]));
        assert!(!is_valid_traversal([Idle, Op]));
        assert!(!is_valid_traversal([In]));
    }
}

//! Benchmark runs, comparisons and quantum sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cimvp_core::config::{build, Platform, Quantum, ValidationError, VpConfig};
use cimvp_core::digest::Fnv;
use cimvp_core::interconnect::{histogram, HistogramKey, TraceRecord};
use cimvp_core::td::StopReason;
use cimvp_core::workload::{gen_vmm_workload, LayerSpec, Workload, WorkloadError, WorkloadMode};
use cimvp_core::SimError;
use serde::{Deserialize, Serialize};

use crate::exec::{self, Mode};
use crate::trace_io;

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Published speedups the comparison is read against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoints {
    pub uniform: f64,
    pub load_oriented: f64,
}

pub const REFERENCE: ReferencePoints = ReferencePoints {
    uniform: 2.3,
    load_oriented: 3.3,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Config(#[from] ValidationError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("result mismatch: O[{index}] is {got}, expected {want}")]
    ResultMismatch { index: usize, got: u64, want: u64 },
    #[error("cores still running when the simulation stopped ({0:?})")]
    Unfinished(StopReason),
    #[error("reports are not comparable: {0}")]
    IncomparableRuns(String),
    #[error("a sweep needs at least two quanta")]
    TooFewQuanta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub id: u16,
    pub busy_ms: f64,
    pub sync_waits: u64,
    pub waiting_rounds: u64,
    pub quanta: u64,
    pub events: u64,
    pub messages_out: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub by_target: BTreeMap<String, u64>,
    pub by_command: BTreeMap<String, u64>,
    pub by_initiator: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub layer: LayerSpec,
    pub mode: Mode,
    pub workload: WorkloadMode,
    pub seed: u64,
    pub quantum_ps: u64,
    pub wall_clock_ms: f64,
    pub simulated_time_ps: u64,
    pub instruction_count: u64,
    pub transactions: u64,
    pub dram_transactions: u64,
    pub histogram: Histograms,
    pub sync_waits: u64,
    pub rounds: u64,
    pub stop: StopReason,
    pub segments: Vec<SegmentReport>,
    pub trace_digest: String,
    pub state_digest: String,
    pub result_digest: String,
}

impl RunReport {
    /// Copy with every host-dependent field cleared.
    pub fn simulated_fields(&self) -> RunReport {
        let mut r = self.clone();
        r.mode = Mode::Seq;
        r.wall_clock_ms = 0.0;
        for s in &mut r.segments {
            s.busy_ms = 0.0;
        }
        r
    }

    pub const CSV_HEADER: &'static str = "config,layer,mode,workload,quantum_ps,wall_clock_ms,simulated_time_ps,instruction_count,transactions,dram_transactions,sync_waits,rounds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{},{},{},{},{},{}",
            self.config,
            self.layer.id(),
            self.mode.as_str(),
            self.workload.as_str(),
            self.quantum_ps,
            self.wall_clock_ms,
            self.simulated_time_ps,
            self.instruction_count,
            self.transactions,
            self.dram_transactions,
            self.sync_waits,
            self.rounds
        )
    }
}

/// A finished benchmark with everything needed for deeper inspection.
#[derive(Debug)]
pub struct BenchRun {
    pub report: RunReport,
    pub platform: Platform,
    pub workload: Workload,
    pub result: Vec<u64>,
    pub trace: Vec<TraceRecord>,
}

fn hex(v: u64) -> String {
    format!("{v:016x}")
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Returns `config` with the quantum replaced by `insns` instructions.
pub fn with_quantum(config: &VpConfig, insns: Option<u64>) -> VpConfig {
    let mut c = config.clone();
    if let Some(n) = insns {
        c.quantum = Quantum::Insns(n);
    }
    c
}

/// Builds, loads, runs and verifies one benchmark.
pub fn execute(
    config: &VpConfig,
    layer: &LayerSpec,
    workload: WorkloadMode,
    mode: Mode,
    quantum_insns: Option<u64>,
    seed: u64,
) -> Result<BenchRun, BenchError> {
    let config = with_quantum(config, quantum_insns);
    let wl = gen_vmm_workload(&config, layer, workload, seed)?;
    let mut platform = build(&config)?;
    wl.install(&mut platform).map_err(SimError::from)?;
    let sim = exec::run(&mut platform, mode)?;
    if !platform.cores().all(|c| c.halted()) {
        return Err(BenchError::Unfinished(sim.summary.stop));
    }
    let result = wl.result(&platform).map_err(SimError::from)?;
    if let Some(index) = (0..result.len()).find(|&i| result[i] != wl.expected[i]) {
        return Err(BenchError::ResultMismatch {
            index,
            got: result[index],
            want: wl.expected[index],
        });
    }

    let trace = trace_io::collect(&platform);
    let names = platform.names().to_vec();
    let by_target = histogram(&trace, HistogramKey::Target, &names);
    let dram_name = config
        .components()
        .find(|(_, c)| matches!(c, cimvp_core::config::ComponentSpec::Dram { .. }))
        .map(|(_, c)| c.id().to_string())
        .unwrap_or_default();
    let mut state = Fnv::default();
    for s in &platform.segments {
        state.write_u64(s.digest());
    }
    let mut res = Fnv::default();
    for v in &result {
        res.write_u64(*v);
    }
    let segments = platform
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| SegmentReport {
            id: s.id(),
            busy_ms: ms(sim.busy[i]),
            sync_waits: sim.summary.sync_waits[i],
            waiting_rounds: sim.summary.waiting_rounds[i],
            quanta: sim.summary.quanta[i],
            events: s.stats().events,
            messages_out: s.stats().messages_out,
        })
        .collect();
    let report = RunReport {
        config: config.name.clone(),
        layer: layer.clone(),
        mode,
        workload,
        seed,
        quantum_ps: config.quantum_time().as_ps(),
        wall_clock_ms: ms(sim.wall_clock),
        simulated_time_ps: sim.simulated_time.as_ps(),
        instruction_count: platform.cores().map(|c| c.instruction_count()).sum(),
        transactions: trace.len() as u64,
        dram_transactions: by_target.get(&dram_name).copied().unwrap_or(0),
        histogram: Histograms {
            by_target,
            by_command: histogram(&trace, HistogramKey::Command, &names),
            by_initiator: histogram(&trace, HistogramKey::Initiator, &names),
        },
        sync_waits: sim.summary.sync_waits.iter().sum(),
        rounds: sim.summary.rounds,
        stop: sim.summary.stop,
        segments,
        trace_digest: hex(trace_io::digest(&trace)),
        state_digest: hex(state.finish()),
        result_digest: hex(res.finish()),
    };
    Ok(BenchRun {
        report,
        platform,
        workload: wl,
        result,
        trace,
    })
}

pub fn run_bench(
    config: &VpConfig,
    layer: &LayerSpec,
    workload: WorkloadMode,
    mode: Mode,
    quantum_insns: Option<u64>,
    seed: u64,
) -> Result<RunReport, BenchError> {
    execute(config, layer, workload, mode, quantum_insns, seed).map(|r| r.report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub seq: RunReport,
    pub pll: RunReport,
    pub speedup: f64,
    pub reference: ReferencePoints,
}

pub fn compare(seq: &RunReport, pll: &RunReport) -> Result<CompareReport, BenchError> {
    if seq.mode != Mode::Seq || pll.mode != Mode::Pll {
        return Err(BenchError::IncomparableRuns(format!(
            "expected a seq and a pll report, got {} and {}",
            seq.mode.as_str(),
            pll.mode.as_str()
        )));
    }
    let (a, b) = (seq.simulated_fields(), pll.simulated_fields());
    if a != b {
        let what = if a.simulated_time_ps != b.simulated_time_ps {
            "simulated_time"
        } else if a.instruction_count != b.instruction_count {
            "instruction_count"
        } else if a.trace_digest != b.trace_digest {
            "transaction trace"
        } else if a.result_digest != b.result_digest {
            "result"
        } else {
            "simulated fields"
        };
        return Err(BenchError::IncomparableRuns(format!("{what} differs")));
    }
    let speedup = seq.wall_clock_ms / pll.wall_clock_ms.max(1e-9);
    Ok(CompareReport {
        seq: seq.clone(),
        pll: pll.clone(),
        speedup,
        reference: REFERENCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub quantum_insns: u64,
    pub workload: WorkloadMode,
    pub compare: CompareReport,
}

pub fn quantum_sweep(
    config: &VpConfig,
    layer: &LayerSpec,
    workloads: &[WorkloadMode],
    quanta: &[u64],
    seed: u64,
) -> Result<Vec<SweepRow>, BenchError> {
    if quanta.len() < 2 {
        return Err(BenchError::TooFewQuanta);
    }
    let mut rows = Vec::new();
    for &workload in workloads {
        for &q in quanta {
            let seq = run_bench(config, layer, workload, Mode::Seq, Some(q), seed)?;
            let pll = run_bench(config, layer, workload, Mode::Pll, Some(q), seed)?;
            log::info!("sweep {} q={q}: {} sync waits", workload.as_str(), seq.sync_waits);
            rows.push(SweepRow {
                quantum_insns: q,
                workload,
                compare: compare(&seq, &pll)?,
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "quantum_insns,quantum_ps,workload,sync_waits,rounds,dram_transactions,simulated_time_ps,seq_wall_ms,pll_wall_ms,speedup";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.compare.seq;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{:.3},{:.3}",
            r.quantum_insns,
            s.quantum_ps,
            r.workload.as_str(),
            s.sync_waits,
            s.rounds,
            s.dram_transactions,
            s.simulated_time_ps,
            s.wall_clock_ms,
            r.compare.pll.wall_clock_ms,
            r.compare.speedup
        );
    }
    out
}

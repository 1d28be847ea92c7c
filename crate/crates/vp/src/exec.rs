//! Sequential and thread-per-segment execution of a platform.

use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use cimvp_core::config::Platform;
use cimvp_core::segment::{QuantumJob, QuantumResult, Segment};
use cimvp_core::td::{Dispatcher, RunSummary};
use cimvp_core::{SimError, SimTime};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[value(name = "seq")]
    Seq,
    #[value(name = "pll")]
    Pll,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Seq => "seq",
            Mode::Pll => "pll",
        }
    }
}

/// CPU time consumed by the calling thread.
fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid out-pointer for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "thread cpu clock unavailable");
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

fn timed_exec(seg: &mut Segment, job: QuantumJob, busy: &mut Duration) -> Result<QuantumResult, SimError> {
    let t0 = thread_cpu_time();
    let r = seg.exec(job);
    *busy += thread_cpu_time() - t0;
    r
}

struct Sequential {
    segments: Vec<Segment>,
    busy: Vec<Duration>,
}

impl Dispatcher for Sequential {
    fn run_round(&mut self, jobs: Vec<(usize, QuantumJob)>) -> Result<Vec<(usize, QuantumResult)>, SimError> {
        jobs.into_iter()
            .map(|(i, job)| Ok((i, timed_exec(&mut self.segments[i], job, &mut self.busy[i])?)))
            .collect()
    }
}

struct Worker {
    jobs: mpsc::Sender<QuantumJob>,
    results: mpsc::Receiver<Result<QuantumResult, SimError>>,
}

struct Threaded {
    workers: Vec<Worker>,
}

impl Dispatcher for Threaded {
    fn run_round(&mut self, jobs: Vec<(usize, QuantumJob)>) -> Result<Vec<(usize, QuantumResult)>, SimError> {
        let ids: Vec<usize> = jobs.iter().map(|(i, _)| *i).collect();
        for (i, job) in jobs {
            self.workers[i].jobs.send(job).expect("segment worker exited early");
        }
        let mut out = Vec::with_capacity(ids.len());
        let mut first_err = None;
        for i in ids {
            match self.workers[i].results.recv().expect("segment worker exited early") {
                Ok(r) => out.push((i, r)),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

/// Outcome of one simulation, simulated and host-side.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub mode: Mode,
    pub summary: RunSummary,
    pub simulated_time: SimTime,
    /// Host time spent in the round loop.
    pub wall_clock: Duration,
    /// Per segment host CPU time spent executing quanta.
    pub busy: Vec<Duration>,
}

/// Runs the platform to completion in `mode`.
pub fn run(platform: &mut Platform, mode: Mode) -> Result<SimulationReport, SimError> {
    let n = platform.segments.len();
    let segments = std::mem::take(&mut platform.segments);
    let start = Instant::now();
    let (result, segments, busy) = match mode {
        Mode::Seq => {
            let mut d = Sequential {
                segments,
                busy: vec![Duration::ZERO; n],
            };
            let r = platform.coordinator.run(&mut d);
            (r, d.segments, d.busy)
        }
        Mode::Pll => thread::scope(|s| {
            let mut workers = Vec::with_capacity(n);
            let mut handles = Vec::with_capacity(n);
            for (i, mut seg) in segments.into_iter().enumerate() {
                let (jtx, jrx) = mpsc::channel::<QuantumJob>();
                let (rtx, rrx) = mpsc::channel();
                let h = thread::Builder::new()
                    .name(format!("segment-{i}"))
                    .spawn_scoped(s, move || {
                        let mut busy = Duration::ZERO;
                        for job in jrx {
                            let r = timed_exec(&mut seg, job, &mut busy);
                            if rtx.send(r).is_err() {
                                break;
                            }
                        }
                        (seg, busy)
                    })
                    .expect("spawn segment worker");
                workers.push(Worker {
                    jobs: jtx,
                    results: rrx,
                });
                handles.push(h);
            }
            let mut d = Threaded { workers };
            let r = platform.coordinator.run(&mut d);
            drop(d);
            let (segs, busy) = handles
                .into_iter()
                .map(|h| h.join().expect("segment worker panicked"))
                .unzip();
            (r, segs, busy)
        }),
    };
    let wall_clock = start.elapsed();
    platform.segments = segments;
    let summary = result?;
    Ok(SimulationReport {
        mode,
        summary,
        simulated_time: platform.simulated_time(),
        wall_clock,
        busy,
    })
}

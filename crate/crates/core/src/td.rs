//! Time-decoupled, conservative coordination of segments.
//!
//! Every round the coordinator computes each segment's limit
//! `min(end, min over incoming channels (commit(src) + latency))`, hands each
//! segment that is behind its limit a quantum `[commit, min(commit + q, limit))`
//! together with the channel messages due in that window, and after all
//! quanta finish publishes the new commit times and the messages sent.
//!
//! A message sent at `t >= commit(src)` is delivered no earlier than
//! `commit(src) + latency`, so no segment can ever receive a message in its
//! past. Rounds are identical whether segments execute one after another or
//! concurrently, which is what makes the two modes produce the same results.
//!
//! A segment with nothing due before its target (no inbound message, no
//! pending event) is not dispatched; its commit time simply moves on.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::segment::{Message, QuantumJob, QuantumResult, Segment, SegmentId};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub src: SegmentId,
    pub dst: SegmentId,
    pub latency: SimTime,
}

#[derive(Debug, Clone)]
struct Channel {
    spec: ChannelSpec,
    queue: BTreeMap<(SimTime, u64), Message>,
    seq: u64,
}

/// Runs one round of quanta. Implementations may execute jobs in any order
/// or concurrently but must return one result per job.
pub trait Dispatcher {
    fn run_round(&mut self, jobs: Vec<(usize, QuantumJob)>) -> Result<Vec<(usize, QuantumResult)>, SimError>;
}

/// Executes quanta one after another on the calling thread.
#[derive(Debug, Clone)]
pub struct Inline {
    pub segments: Vec<Segment>,
}

impl Dispatcher for Inline {
    fn run_round(&mut self, jobs: Vec<(usize, QuantumJob)>) -> Result<Vec<(usize, QuantumResult)>, SimError> {
        jobs.into_iter()
            .map(|(i, job)| Ok((i, self.segments[i].exec(job)?)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No pending events anywhere and all channels empty.
    Quiescent,
    EndTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds: u64,
    pub stop: StopReason,
    pub commits: Vec<SimTime>,
    /// Per segment: component-quanta spent blocked on a peer's response.
    pub sync_waits: Vec<u64>,
    /// Per segment: rounds skipped because the segment sat at its limit.
    pub waiting_rounds: Vec<u64>,
    pub quanta: Vec<u64>,
    pub messages: u64,
    pub violations: u64,
}

#[derive(Debug, Clone)]
pub struct Coordinator {
    channels: Vec<Channel>,
    incoming: Vec<Vec<usize>>,
    commits: Vec<SimTime>,
    idle: Vec<bool>,
    next_event: Vec<Option<SimTime>>,
    blocked: Vec<u32>,
    quantum: SimTime,
    end_time: SimTime,
    summary: RunSummary,
}

impl Coordinator {
    pub fn new(segments: usize, channels: &[ChannelSpec], quantum: SimTime, end_time: SimTime) -> Self {
        assert!(!quantum.is_zero() && !end_time.is_zero());
        let mut incoming = vec![Vec::new(); segments];
        for (i, c) in channels.iter().enumerate() {
            assert!((c.src as usize) < segments && (c.dst as usize) < segments);
            incoming[c.dst as usize].push(i);
        }
        Coordinator {
            channels: channels
                .iter()
                .map(|&spec| Channel {
                    spec,
                    queue: BTreeMap::new(),
                    seq: 0,
                })
                .collect(),
            incoming,
            commits: vec![SimTime::ZERO; segments],
            idle: vec![false; segments],
            // unknown until the first quantum
            next_event: vec![Some(SimTime::ZERO); segments],
            blocked: vec![0; segments],
            quantum,
            end_time,
            summary: RunSummary {
                rounds: 0,
                stop: StopReason::Quiescent,
                commits: vec![SimTime::ZERO; segments],
                sync_waits: vec![0; segments],
                waiting_rounds: vec![0; segments],
                quanta: vec![0; segments],
                messages: 0,
                violations: 0,
            },
        }
    }

    pub fn quantum(&self) -> SimTime {
        self.quantum
    }

    pub fn end_time(&self) -> SimTime {
        self.end_time
    }

    pub fn commits(&self) -> &[SimTime] {
        &self.commits
    }

    /// How far `seg` may run without risking a message in its past.
    pub fn compute_limit(&self, seg: usize) -> SimTime {
        self.incoming[seg]
            .iter()
            .map(|&c| {
                let ch = &self.channels[c];
                self.commits[ch.spec.src as usize].saturating_add(ch.spec.latency)
            })
            .fold(self.end_time, SimTime::min)
    }

    fn channels_empty(&self) -> bool {
        self.channels.iter().all(|c| c.queue.is_empty())
    }

    fn quiescent(&self) -> bool {
        self.idle.iter().all(|&i| i) && self.channels_empty()
    }

    /// Pops every message for `seg` due before `target`, in delivery order.
    fn take_inbound(&mut self, seg: usize, target: SimTime) -> Vec<Message> {
        let mut due = Vec::new();
        for &c in &self.incoming[seg] {
            let q = &mut self.channels[c].queue;
            while let Some(e) = q.first_entry() {
                if e.key().0 >= target {
                    break;
                }
                let (t, s) = *e.key();
                due.push(((t, c, s), e.remove()));
            }
        }
        due.sort_by_key(|(k, _)| *k);
        due.into_iter().map(|(_, m)| m).collect()
    }

    fn publish(&mut self, msg: Message) {
        self.summary.messages += 1;
        let Some(ch) = self
            .channels
            .iter_mut()
            .find(|c| c.spec.src == msg.src && c.spec.dst == msg.dst)
        else {
            unreachable!("segment {} sent over a channel that does not exist", msg.src);
        };
        if msg.delivery_time - msg.send_time != ch.spec.latency {
            self.summary.violations += 1;
        }
        ch.seq += 1;
        ch.queue.insert((msg.delivery_time, ch.seq), msg);
    }

    /// Runs rounds until quiescence, end time, or deadlock.
    pub fn run<D: Dispatcher>(&mut self, d: &mut D) -> Result<RunSummary, SimError> {
        let n = self.commits.len();
        loop {
            let limits: Vec<SimTime> = (0..n).map(|i| self.compute_limit(i)).collect();
            let mut jobs = Vec::new();
            let mut targets = vec![None; n];
            let mut skipped = Vec::new();
            for i in 0..n {
                if self.commits[i] >= self.end_time {
                    continue;
                }
                let target = self.commits[i].saturating_add(self.quantum).min(limits[i]);
                if target <= self.commits[i] {
                    self.summary.waiting_rounds[i] += 1;
                    continue;
                }
                targets[i] = Some(target);
                let inbound = self.take_inbound(i, target);
                if inbound.is_empty() && self.next_event[i].is_none_or(|t| t >= target) {
                    skipped.push(i);
                    continue;
                }
                jobs.push((
                    i,
                    QuantumJob {
                        start: self.commits[i],
                        target,
                        inbound,
                    },
                ));
            }
            if jobs.is_empty() && skipped.is_empty() {
                if self.quiescent() {
                    self.summary.stop = StopReason::Quiescent;
                } else if self.commits.iter().all(|&c| c >= self.end_time) {
                    self.summary.stop = StopReason::EndTime;
                } else {
                    return Err(SimError::Deadlock {
                        round: self.summary.rounds,
                        commits: self.commits.clone(),
                    });
                }
                break;
            }
            self.summary.rounds += 1;
            let mut results = if jobs.is_empty() {
                Vec::new()
            } else {
                d.run_round(jobs)?
            };
            for &i in &skipped {
                self.commits[i] = targets[i].unwrap();
                self.summary.sync_waits[i] += u64::from(self.blocked[i]);
                self.summary.quanta[i] += 1;
            }
            results.sort_by_key(|(i, _)| *i);
            let mut outboxes = Vec::with_capacity(results.len());
            for (i, r) in results {
                let target = targets[i].expect("result for a segment that was not dispatched");
                if target > limits[i] {
                    self.summary.violations += 1;
                }
                self.commits[i] = target;
                self.idle[i] = r.idle;
                self.next_event[i] = r.next_event;
                self.blocked[i] = r.blocked;
                self.summary.sync_waits[i] += u64::from(r.blocked);
                self.summary.quanta[i] += 1;
                self.summary.violations += r.violations;
                outboxes.push(r.outbox);
            }
            for msg in outboxes.into_iter().flatten() {
                self.publish(msg);
            }
            log::debug!(
                "round {} commits {:?} waiting {:?}",
                self.summary.rounds,
                self.commits,
                (0..n).filter(|&i| targets[i].is_none()).collect::<Vec<_>>()
            );
            if self.quiescent() {
                self.summary.stop = StopReason::Quiescent;
                break;
            }
        }
        self.summary.commits = self.commits.clone();
        Ok(self.summary.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(src: SegmentId, dst: SegmentId, ns: u64) -> ChannelSpec {
        ChannelSpec {
            src,
            dst,
            latency: SimTime::from_ns(ns),
        }
    }

    #[test]
    fn limit_examples() {
        let mut c = Coordinator::new(2, &[ch(0, 1, 100)], SimTime::from_ns(10), SimTime::from_us(100));
        c.commits[0] = SimTime::from_ns(1000);
        assert_eq!(c.compute_limit(1), SimTime::from_ns(1100));
        assert_eq!(c.compute_limit(0), SimTime::from_us(100));

        let mut c = Coordinator::new(3, &[ch(0, 2, 1000), ch(1, 2, 2000)], SimTime::from_ns(10), SimTime::from_us(100));
        c.commits[0] = SimTime::from_us(5);
        c.commits[1] = SimTime::from_us(3);
        assert_eq!(c.compute_limit(2), SimTime::from_us(5));
    }

    #[test]
    fn empty_platform_stops_quiescent() {
        let mut c = Coordinator::new(0, &[], SimTime::from_ns(10), SimTime::from_us(1));
        let s = c.run(&mut Inline { segments: Vec::new() }).unwrap();
        assert_eq!(s.rounds, 0);
    }
}

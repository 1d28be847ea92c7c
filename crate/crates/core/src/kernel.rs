//! Sequential discrete-event kernel, one instance per segment.
//!
//! Events are totally ordered by `(time, seq)`: `seq` is a per-kernel insertion
//! counter, so two events scheduled for the same instant run in the order they
//! were scheduled. There is no delta-cycle notion.

use alloc::collections::BTreeMap;

use crate::time::SimTime;
use crate::txn::ComponentId;

/// Handle to a scheduled event, usable with [`Kernel::cancel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub time: SimTime,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub target: ComponentId,
    pub payload: P,
}

/// Result of [`Kernel::run_until`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub local_time: SimTime,
    pub executed: u64,
    pub quiescent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("event scheduled at {at} but kernel time is already {now}")]
pub struct CausalityError {
    pub now: SimTime,
    pub at: SimTime,
}

pub trait Handler<P> {
    fn handle(&mut self, kernel: &mut Kernel<P>, event: Event<P>);
}

impl<P, F> Handler<P> for F
where
    F: FnMut(&mut Kernel<P>, Event<P>),
{
    fn handle(&mut self, kernel: &mut Kernel<P>, event: Event<P>) {
        self(kernel, event)
    }
}

#[derive(Debug, Clone)]
pub struct Kernel<P> {
    now: SimTime,
    next_seq: u64,
    queue: BTreeMap<(SimTime, u64), (ComponentId, P)>,
    executed: u64,
    // Upper bound of the current `run_until` call; `now` otherwise.
    horizon: SimTime,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BTreeMap::new(),
            executed: 0,
            horizon: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Total number of events executed since construction.
    pub fn event_count(&self) -> u64 {
        self.executed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.keys().next().map(|&(t, _)| t)
    }

    /// The limit of the `run_until` call in progress.
    pub fn horizon(&self) -> SimTime {
        self.horizon
    }

    pub fn schedule(&mut self, delay: SimTime, target: ComponentId, payload: P) -> EventId {
        let time = self.now + delay;
        self.insert(time, target, payload)
    }

    pub fn schedule_at(
        &mut self,
        time: SimTime,
        target: ComponentId,
        payload: P,
    ) -> Result<EventId, CausalityError> {
        if time < self.now {
            return Err(CausalityError { now: self.now, at: time });
        }
        Ok(self.insert(time, target, payload))
    }

    fn insert(&mut self, time: SimTime, target: ComponentId, payload: P) -> EventId {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.insert((time, seq), (target, payload));
        EventId { time, seq }
    }

    pub fn cancel(&mut self, id: EventId) -> bool {
        self.queue.remove(&(id.time, id.seq)).is_some()
    }

    /// Moves `now` forward to `t` without executing anything, as long as that
    /// skips no pending event and stays within the current horizon. Used by
    /// components that batch several of their own steps into one event.
    pub fn try_advance(&mut self, t: SimTime) -> bool {
        if t < self.now || t > self.horizon {
            return false;
        }
        if matches!(self.peek_time(), Some(next) if next <= t) {
            return false;
        }
        self.now = t;
        true
    }

    /// Executes every event with `time <= limit` in `(time, seq)` order,
    /// including events scheduled by handlers during the call, then sets the
    /// local time to `limit`.
    pub fn run_until<H: Handler<P>>(&mut self, limit: SimTime, handler: &mut H) -> StepOutcome {
        debug_assert!(limit >= self.now, "run_until({limit}) behind now={}", self.now);
        let limit = limit.max(self.now);
        self.horizon = limit;
        let mut executed = 0;
        loop {
            let Some(entry) = self.queue.first_entry() else {
                break;
            };
            let (time, seq) = *entry.key();
            if time > limit {
                break;
            }
            let (target, payload) = entry.remove();
            self.now = time;
            self.executed += 1;
            executed += 1;
            handler.handle(
                self,
                Event {
                    time,
                    seq,
                    target,
                    payload,
                },
            );
        }
        self.now = limit;
        self.horizon = limit;
        StepOutcome {
            local_time: self.now,
            executed,
            quiescent: self.queue.is_empty(),
        }
    }
}

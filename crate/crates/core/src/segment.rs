//! A segment: one event kernel plus the components it owns.
//!
//! Components reach targets in their own segment through the local bus. An
//! access to a target owned by another segment becomes a request message on
//! the channel to that segment; the target's segment answers with a response
//! message on the reverse channel.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::cim::CimUnit;
use crate::cpu::{Core, CoreStatus, MemPort, PortResult};
use crate::digest::Fnv;
use crate::error::SimError;
use crate::interconnect::{AddressMap, TraceRecord, TraceSink};
use crate::kernel::{Event, Handler, Kernel};
use crate::mem::Dram;
use crate::rng::SplitMix64;
use crate::time::SimTime;
use crate::txn::{Command, ComponentId, Transaction};

pub type SegmentId = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Request { req_id: u64, txn: Transaction },
    Response { req_id: u64, txn: Transaction },
    /// Synthetic traffic; bounced back while `ttl > 0`.
    Ping { ttl: u32, nonce: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub src: SegmentId,
    pub dst: SegmentId,
    pub send_time: SimTime,
    pub delivery_time: SimTime,
    pub payload: Payload,
}

#[derive(Debug, Clone)]
pub enum Ev {
    Step,
    Deliver(Message),
    Tick,
}

/// Sentinel target for events owned by the segment itself.
pub const SEGMENT_TARGET: ComponentId = ComponentId(u32::MAX);

/// Platform-wide wiring every segment shares.
#[derive(Debug, Clone)]
pub struct Topology {
    pub map: AddressMap,
    /// Owning segment of every component, indexed by id.
    pub owner: Vec<SegmentId>,
    pub names: Vec<String>,
    /// Ids of components whose addresses may be cached.
    pub cacheable: Vec<bool>,
}

/// Emits pings to random peer segments at random intervals.
#[derive(Debug, Clone)]
pub struct TrafficGen {
    pub id: ComponentId,
    rng: SplitMix64,
    peers: Vec<SegmentId>,
    remaining: u32,
    max_gap: SimTime,
}

impl TrafficGen {
    pub fn new(id: ComponentId, seed: u64, peers: Vec<SegmentId>, count: u32, max_gap: SimTime) -> Self {
        TrafficGen {
            id,
            rng: SplitMix64::new(seed),
            peers,
            remaining: count,
            max_gap: max_gap.max(SimTime::from_ps(1)),
        }
    }

    fn gap(&mut self) -> SimTime {
        SimTime::from_ps(self.rng.range(1, self.max_gap.as_ps()))
    }
}

/// Counters a segment accumulates over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentStats {
    pub events: u64,
    pub quanta: u64,
    pub messages_in: u64,
    pub messages_out: u64,
    /// Quantum boundaries summed over components blocked on a remote response.
    pub sync_waits: u64,
    pub violations: u64,
}

/// Work for one quantum.
#[derive(Debug, Clone, Default)]
pub struct QuantumJob {
    /// Commit time the coordinator holds for the segment.
    pub start: SimTime,
    pub target: SimTime,
    pub inbound: Vec<Message>,
}

#[derive(Debug, Clone, Default)]
pub struct QuantumResult {
    pub outbox: Vec<Message>,
    pub idle: bool,
    /// Components waiting on a remote response at the end of the quantum.
    pub blocked: u32,
    pub events: u64,
    pub violations: u64,
    pub next_event: Option<SimTime>,
}

#[derive(Debug, Clone, Copy)]
struct Outstanding {
    initiator: ComponentId,
    target: ComponentId,
    address: u64,
    command: Command,
    byte_len: u32,
    issue_time: SimTime,
    posted: bool,
}

/// Everything a core may touch while it executes: local targets, the trace
/// and the outbox.
#[derive(Debug, Clone)]
struct Fabric {
    seg: SegmentId,
    topo: Arc<Topology>,
    routes: BTreeMap<SegmentId, SimTime>,
    bus_latency: SimTime,
    post_device_writes: bool,
    dram: Option<(ComponentId, Dram)>,
    cims: Vec<(ComponentId, CimUnit)>,
    trace: TraceSink,
    outbox: Vec<Message>,
    next_req: u64,
    outstanding: BTreeMap<u64, Outstanding>,
    violations: u64,
}

impl Fabric {
    fn send(&mut self, dst: SegmentId, at: SimTime, payload: Payload) -> Result<(), SimError> {
        let lat = *self.routes.get(&dst).ok_or(SimError::Unreachable {
            from: self.seg,
            to: dst,
        })?;
        self.outbox.push(Message {
            src: self.seg,
            dst,
            send_time: at,
            delivery_time: at + lat,
            payload,
        });
        Ok(())
    }

    /// Performs `txn` on a target owned by this segment, arriving at `at`.
    fn serve(&mut self, target: ComponentId, txn: &Transaction, at: SimTime) -> Result<(SimTime, Vec<u8>), SimError> {
        let bus = self.bus_latency;
        if let Some((id, dram)) = &mut self.dram {
            if *id == target {
                let r = dram.access(txn)?;
                return Ok((bus + r.latency, r.data));
            }
        }
        let (_, cim) = self
            .cims
            .iter_mut()
            .find(|(id, _)| *id == target)
            .expect("address map points at a component this segment does not own");
        let off = txn.address - cim.base();
        if txn.byte_len != 8 {
            return Err(crate::error::AddressError {
                address: txn.address,
                byte_len: txn.byte_len,
                reason: "device registers take 8-byte accesses",
            }
            .into());
        }
        let r = match txn.command {
            Command::Write => cim
                .write(off, txn.data_u64(), at + bus)
                .map(|lat| (bus + lat, Vec::new())),
            Command::Read => cim
                .read(off, at + bus)
                .map(|(v, lat)| (bus + lat, v.to_le_bytes().to_vec())),
        };
        r.map_err(|e| SimError::Protocol {
            unit: String::from(cim.name()),
            source: e,
        })
    }
}

impl MemPort for Fabric {
    fn access(&mut self, mut txn: Transaction) -> Result<PortResult, SimError> {
        let target = self.topo.map.decode_access(txn.address, txn.byte_len)?.target;
        let owner = self.topo.owner[target.0 as usize];
        let at = txn.issue_time;
        if owner == self.seg {
            let (latency, data) = self.serve(target, &txn, at)?;
            self.trace.record(TraceRecord {
                timestamp: at,
                initiator: txn.initiator,
                target,
                address: txn.address,
                command: txn.command,
                byte_len: txn.byte_len,
                latency,
            });
            return Ok(PortResult::Done { latency, data });
        }
        let req_id = self.next_req;
        self.next_req += 1;
        txn.id = req_id;
        let posted = self.post_device_writes
            && txn.command == Command::Write
            && !self.topo.cacheable[target.0 as usize];
        self.outstanding.insert(
            req_id,
            Outstanding {
                initiator: txn.initiator,
                target,
                address: txn.address,
                command: txn.command,
                byte_len: txn.byte_len,
                issue_time: at,
                posted,
            },
        );
        self.send(owner, at, Payload::Request { req_id, txn })?;
        if posted {
            Ok(PortResult::Done {
                latency: self.bus_latency,
                data: Vec::new(),
            })
        } else {
            Ok(PortResult::Pending)
        }
    }

    fn cacheable(&self, address: u64) -> bool {
        self.topo
            .map
            .lookup(address)
            .is_some_and(|r| self.topo.cacheable[r.target.0 as usize])
    }
}

#[derive(Debug, Clone, Copy)]
enum Local {
    Core(usize),
    Traffic(usize),
}

/// Component state visible to the event handler.
#[derive(Debug, Clone)]
struct Parts {
    cores: Vec<Core>,
    traffic: Vec<TrafficGen>,
    local: BTreeMap<ComponentId, Local>,
    fabric: Fabric,
    last_activity: SimTime,
    error: Option<SimError>,
    commit: SimTime,
}

#[derive(Debug, Clone)]
pub struct Segment {
    id: SegmentId,
    kernel: Kernel<Ev>,
    parts: Parts,
    stats: SegmentStats,
}

/// Components handed to [`Segment::new`].
#[derive(Debug, Clone, Default)]
pub struct SegmentParts {
    pub cores: Vec<Core>,
    pub dram: Option<(ComponentId, Dram)>,
    pub cims: Vec<(ComponentId, CimUnit)>,
    pub traffic: Vec<TrafficGen>,
}

impl Segment {
    pub fn new(
        id: SegmentId,
        topo: Arc<Topology>,
        routes: BTreeMap<SegmentId, SimTime>,
        bus_latency: SimTime,
        post_device_writes: bool,
        parts: SegmentParts,
    ) -> Self {
        let mut kernel = Kernel::new();
        let mut local = BTreeMap::new();
        for (i, c) in parts.cores.iter().enumerate() {
            local.insert(c.id(), Local::Core(i));
            if !c.halted() {
                kernel.schedule(SimTime::ZERO, c.id(), Ev::Step);
            }
        }
        for (i, t) in parts.traffic.iter().enumerate() {
            local.insert(t.id, Local::Traffic(i));
            if t.remaining > 0 && !t.peers.is_empty() {
                kernel.schedule(SimTime::ZERO, t.id, Ev::Tick);
            }
        }
        Segment {
            id,
            kernel,
            parts: Parts {
                cores: parts.cores,
                traffic: parts.traffic,
                local,
                fabric: Fabric {
                    seg: id,
                    topo,
                    routes,
                    bus_latency,
                    post_device_writes,
                    dram: parts.dram,
                    cims: parts.cims,
                    trace: TraceSink::default(),
                    outbox: Vec::new(),
                    next_req: 0,
                    outstanding: BTreeMap::new(),
                    violations: 0,
                },
                last_activity: SimTime::ZERO,
                error: None,
                commit: SimTime::ZERO,
            },
            stats: SegmentStats::default(),
        }
    }

    pub fn id(&self) -> SegmentId {
        self.id
    }

    pub fn commit_time(&self) -> SimTime {
        self.parts.commit
    }

    pub fn kernel_now(&self) -> SimTime {
        self.kernel.now()
    }

    pub fn is_idle(&self) -> bool {
        self.kernel.is_idle()
    }

    /// Time of the last event or instruction this segment executed.
    pub fn last_activity(&self) -> SimTime {
        self.parts.last_activity
    }

    pub fn stats(&self) -> SegmentStats {
        self.stats
    }

    pub fn cores(&self) -> &[Core] {
        &self.parts.cores
    }

    pub fn dram(&self) -> Option<&Dram> {
        self.parts.fabric.dram.as_ref().map(|(_, d)| d)
    }

    pub fn dram_mut(&mut self) -> Option<&mut Dram> {
        self.parts.fabric.dram.as_mut().map(|(_, d)| d)
    }

    pub fn cims(&self) -> impl Iterator<Item = &CimUnit> {
        self.parts.fabric.cims.iter().map(|(_, c)| c)
    }

    pub fn trace(&self) -> &TraceSink {
        &self.parts.fabric.trace
    }

    /// Components blocked on a response from another segment.
    pub fn blocked_components(&self) -> u32 {
        self.parts
            .fabric
            .outstanding
            .values()
            .filter(|o| !o.posted)
            .count() as u32
    }

    /// Fingerprint of every component's architectural end state.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::default();
        for c in &self.parts.cores {
            c.digest(&mut h);
        }
        if let Some((_, d)) = &self.parts.fabric.dram {
            d.digest(&mut h);
        }
        for (_, c) in &self.parts.fabric.cims {
            c.digest(&mut h);
        }
        h.finish()
    }

    /// Injects `job.inbound` and executes every event strictly before
    /// `job.target`. Afterwards the segment's local time is `job.target`.
    pub fn exec(&mut self, job: QuantumJob) -> Result<QuantumResult, SimError> {
        let start = job.start;
        debug_assert!(start >= self.parts.commit);
        self.parts.commit = start;
        let mut violations = 0;
        assert!(job.target > start, "quantum must move time forward");
        for msg in job.inbound {
            if msg.delivery_time < start || msg.delivery_time >= job.target || msg.dst != self.id {
                violations += 1;
            }
            self.stats.messages_in += 1;
            let at = msg.delivery_time.max(self.kernel.now());
            self.kernel
                .schedule_at(at, SEGMENT_TARGET, Ev::Deliver(msg))
                .expect("delivery clamped to kernel time");
        }
        let before = self.kernel.event_count();
        self.kernel.run_until(job.target - SimTime::from_ps(1), &mut self.parts);
        self.parts.commit = job.target;
        if let Some(e) = self.parts.error.take() {
            return Err(e);
        }
        violations += core::mem::take(&mut self.parts.fabric.violations);
        let outbox = core::mem::take(&mut self.parts.fabric.outbox);
        let events = self.kernel.event_count() - before;
        let blocked = self.blocked_components();
        self.stats.events += events;
        self.stats.quanta += 1;
        self.stats.messages_out += outbox.len() as u64;
        self.stats.sync_waits += u64::from(blocked);
        self.stats.violations += violations;
        Ok(QuantumResult {
            outbox,
            idle: self.kernel.is_idle(),
            blocked,
            events,
            violations,
            next_event: self.kernel.peek_time(),
        })
    }
}

impl Parts {
    fn drive(&mut self, kernel: &mut Kernel<Ev>, idx: usize, mut status: Result<CoreStatus, SimError>) {
        loop {
            match status {
                Err(e) => {
                    self.error.get_or_insert(e);
                    return;
                }
                Ok(CoreStatus::Blocked) => return,
                Ok(CoreStatus::Halted(t)) => {
                    self.last_activity = self.last_activity.max(t);
                    return;
                }
                Ok(CoreStatus::Next(t)) => {
                    self.last_activity = self.last_activity.max(t);
                    if kernel.try_advance(t) {
                        status = self.cores[idx].step(t, &mut self.fabric);
                    } else {
                        let id = self.cores[idx].id();
                        if let Err(e) = kernel.schedule_at(t, id, Ev::Step) {
                            self.error.get_or_insert(e.into());
                        }
                        return;
                    }
                }
            }
        }
    }

    fn deliver(&mut self, kernel: &mut Kernel<Ev>, now: SimTime, msg: Message) -> Result<(), SimError> {
        if now != msg.delivery_time {
            self.fabric.violations += 1;
        }
        match msg.payload {
            Payload::Request { req_id, txn } => {
                let target = self.fabric.topo.map.decode(txn.address)?;
                let (latency, data) = self.fabric.serve(target, &txn, now)?;
                let mut resp = txn;
                resp.data = data;
                resp.completion_time = now + latency;
                resp.latency_annotation = latency;
                self.fabric.send(msg.src, now + latency, Payload::Response { req_id, txn: resp })?;
            }
            Payload::Response { req_id, txn } => {
                let o = self
                    .fabric
                    .outstanding
                    .remove(&req_id)
                    .expect("response without a matching request");
                self.fabric.trace.record(TraceRecord {
                    timestamp: o.issue_time,
                    initiator: o.initiator,
                    target: o.target,
                    address: o.address,
                    command: o.command,
                    byte_len: o.byte_len,
                    latency: now - o.issue_time,
                });
                if !o.posted {
                    let Some(&Local::Core(i)) = self.local.get(&o.initiator) else {
                        unreachable!("only cores issue memory transactions");
                    };
                    let status = self.cores[i].resume(now, &txn.data, &mut self.fabric);
                    self.drive(kernel, i, status);
                }
            }
            Payload::Ping { ttl, nonce } => {
                if ttl > 0 && self.fabric.routes.contains_key(&msg.src) {
                    self.fabric.send(msg.src, now, Payload::Ping { ttl: ttl - 1, nonce })?;
                }
            }
        }
        Ok(())
    }
}

impl Handler<Ev> for Parts {
    fn handle(&mut self, kernel: &mut Kernel<Ev>, event: Event<Ev>) {
        if self.error.is_some() {
            return;
        }
        let now = event.time;
        self.last_activity = self.last_activity.max(now);
        match event.payload {
            Ev::Step => {
                let Some(&Local::Core(i)) = self.local.get(&event.target) else {
                    unreachable!("step for unknown core {}", event.target);
                };
                let status = self.cores[i].step(now, &mut self.fabric);
                self.drive(kernel, i, status);
            }
            Ev::Deliver(msg) => {
                if let Err(e) = self.deliver(kernel, now, msg) {
                    self.error.get_or_insert(e);
                }
            }
            Ev::Tick => {
                let Some(&Local::Traffic(i)) = self.local.get(&event.target) else {
                    unreachable!("tick for unknown generator {}", event.target);
                };
                let g = &mut self.traffic[i];
                let dst = g.peers[g.rng.range(0, g.peers.len() as u64 - 1) as usize];
                let ttl = g.rng.range(0, 3) as u32;
                let nonce = g.rng.next_u64();
                g.remaining -= 1;
                if g.remaining > 0 {
                    let gap = g.gap();
                    kernel.schedule(gap, g.id, Ev::Tick);
                }
                if let Err(e) = self.fabric.send(dst, now, Payload::Ping { ttl, nonce }) {
                    self.error.get_or_insert(e);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble;
    use crate::cpu::CoreConfig;
    use crate::interconnect::{AddressRange, DRAM_BASE};
    use crate::mem::DramConfig;
    use alloc::string::ToString;
    use alloc::vec;

    fn topo() -> Arc<Topology> {
        let mut map = AddressMap::new();
        map.insert(AddressRange {
            base: DRAM_BASE,
            size: DramConfig::default().capacity,
            target: ComponentId(1),
        })
        .unwrap();
        Arc::new(Topology {
            map,
            owner: vec![0, 0],
            names: vec!["cpu0".to_string(), "dram".to_string()],
            cacheable: vec![false, true],
        })
    }

    #[test]
    fn single_segment_runs_program_to_halt() {
        let prog = assemble("ADDI r1, r0, 3\nADDI r2, r0, 4\nMUL r3, r1, r2\nST r3, 0x2000(r0)\nHALT", 0x1000).unwrap();
        let mut dram = Dram::new(0, DramConfig::default());
        dram.load(0x1000, &prog.bytes()).unwrap();
        let core = Core::new(
            ComponentId(0),
            "cpu0",
            CoreConfig {
                entry: 0x1000,
                ..CoreConfig::default()
            },
        );
        let mut seg = Segment::new(
            0,
            topo(),
            BTreeMap::new(),
            SimTime::from_ns(2),
            true,
            SegmentParts {
                cores: vec![core],
                dram: Some((ComponentId(1), dram)),
                ..SegmentParts::default()
            },
        );
        let r = seg
            .exec(QuantumJob {
                start: SimTime::ZERO,
                target: SimTime::from_us(10),
                inbound: Vec::new(),
            })
            .unwrap();
        assert!(r.idle);
        assert!(r.outbox.is_empty());
        assert!(seg.cores()[0].halted());
        assert_eq!(seg.dram().unwrap().peek_u64(0x2000).unwrap(), 12);
        assert_eq!(seg.commit_time(), SimTime::from_us(10));
        // one line fill for the program, one write
        assert_eq!(seg.trace().len(), 2);
    }
}

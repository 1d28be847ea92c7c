//! Platform description, validation, presets and construction.
//!
//! A configuration lists segments (each with its components) and directed
//! channels between them. Component ids are free-form strings; the builder
//! numbers components in declaration order. The single DRAM sits at address
//! 0 and CIM unit `k` (the k-th CIM declared) at [`cim_base`]`(k)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cache::CacheConfig;
use crate::cim::{CimConfig, CimUnit, WINDOW};
use crate::cpu::{Core, CoreConfig};
use crate::error::SimError;
use crate::interconnect::{cim_base, AddressMap, AddressRange, DEFAULT_BUS_LATENCY, DRAM_BASE};
use crate::mem::{Dram, DramConfig};
use crate::segment::{Segment, SegmentId, SegmentParts, Topology, TrafficGen};
use crate::td::{ChannelSpec, Coordinator, Inline, RunSummary};
use crate::time::{SimTime, CPU_CLOCK_PERIOD};
use crate::txn::ComponentId;

/// Cross-segment latency used by the presets: 10K CPU cycles.
pub const DEFAULT_CHANNEL_LATENCY: SimTime = SimTime::from_ps(10_000 * 588);
pub const DEFAULT_QUANTUM_INSNS: u64 = 10_000;
pub const DEFAULT_END_TIME: SimTime = SimTime::from_ps(1_000_000_000_000_000);

/// Base address of CPU `c`'s program in the benchmark memory layout.
pub const fn program_base(c: usize) -> u64 {
    0x0001_0000 + c as u64 * 0x1_0000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantum {
    Insns(u64),
    Ps(u64),
}

impl Quantum {
    pub fn to_time(self, cpu_clock: SimTime) -> SimTime {
        match self {
            Quantum::Insns(n) => cpu_clock.times(n),
            Quantum::Ps(p) => SimTime::from_ps(p),
        }
    }
}

fn l1i() -> CacheConfig {
    CacheConfig::L1I
}
fn l1d() -> CacheConfig {
    CacheConfig::L1D
}
fn budget() -> u64 {
    CoreConfig::default().insn_budget
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ComponentSpec {
    Cpu {
        id: String,
        /// Defaults to the CPU's program base in the benchmark layout.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entry: Option<u64>,
        #[serde(default = "l1i")]
        icache: CacheConfig,
        #[serde(default = "l1d")]
        dcache: CacheConfig,
        #[serde(default = "budget")]
        insn_budget: u64,
    },
    Dram {
        id: String,
        #[serde(default)]
        params: DramConfig,
    },
    Cim {
        id: String,
        #[serde(default)]
        params: CimConfig,
    },
    /// Synthetic ping source for stress tests.
    Traffic {
        id: String,
        seed: u64,
        count: u32,
        max_gap: SimTime,
    },
}

impl ComponentSpec {
    pub fn id(&self) -> &str {
        match self {
            ComponentSpec::Cpu { id, .. }
            | ComponentSpec::Dram { id, .. }
            | ComponentSpec::Cim { id, .. }
            | ComponentSpec::Traffic { id, .. } => id,
        }
    }

    pub fn cpu(id: &str) -> Self {
        ComponentSpec::Cpu {
            id: id.to_string(),
            entry: None,
            icache: CacheConfig::L1I,
            dcache: CacheConfig::L1D,
            insn_budget: budget(),
        }
    }

    pub fn dram(id: &str) -> Self {
        ComponentSpec::Dram {
            id: id.to_string(),
            params: DramConfig::default(),
        }
    }

    pub fn cim(id: &str) -> Self {
        ComponentSpec::Cim {
            id: id.to_string(),
            params: CimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub id: SegmentId,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryImage {
    pub address: u64,
    pub words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VpConfig {
    #[serde(default)]
    pub name: String,
    pub segments: Vec<SegmentSpec>,
    pub channels: Vec<ChannelSpec>,
    pub quantum: Quantum,
    pub end_time: SimTime,
    #[serde(default = "cpu_clock")]
    pub cpu_clock: SimTime,
    #[serde(default = "bus_latency")]
    pub bus_latency: SimTime,
    /// Stores to device registers in another segment do not wait for the
    /// acknowledgement.
    #[serde(default = "yes")]
    pub post_device_writes: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<MemoryImage>,
}

fn cpu_clock() -> SimTime {
    CPU_CLOCK_PERIOD
}
fn bus_latency() -> SimTime {
    DEFAULT_BUS_LATENCY
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("platform needs exactly one dram, found {0}")]
    DramCount(usize),
    #[error("duplicate component id {0:?}")]
    DuplicateComponent(String),
    #[error("segment ids must be 0..n in order; position {pos} has id {id}")]
    SegmentOrder { pos: usize, id: SegmentId },
    #[error("channel {src}->{dst} names a segment that does not exist")]
    DanglingChannel { src: SegmentId, dst: SegmentId },
    #[error("channel {src}->{dst} is declared twice")]
    DuplicateChannel { src: SegmentId, dst: SegmentId },
    #[error("channel {src}->{dst} connects a segment to itself")]
    SelfChannel { src: SegmentId, dst: SegmentId },
    #[error("segment {from} reaches segment {to} but has no {dir} channel")]
    MissingChannel {
        from: SegmentId,
        to: SegmentId,
        dir: &'static str,
    },
    #[error("cim {0:?} has no cpu that can reach it")]
    OrphanCim(String),
    #[error("quantum must be positive")]
    ZeroQuantum,
    #[error("end time must be positive")]
    ZeroEndTime,
    #[error("cpu clock period must be positive")]
    ZeroClock,
    #[error("component {id:?}: {reason}")]
    Component { id: String, reason: String },
    #[error("traffic generator {0:?} has no outgoing channel")]
    IsolatedTraffic(String),
}

/// Position of a component after numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub id: ComponentId,
    pub segment: SegmentId,
}

impl VpConfig {
    pub fn quantum_time(&self) -> SimTime {
        self.quantum.to_time(self.cpu_clock)
    }

    pub fn channel(&self, src: SegmentId, dst: SegmentId) -> Option<&ChannelSpec> {
        self.channels.iter().find(|c| c.src == src && c.dst == dst)
    }

    /// Components in numbering order with their segments.
    pub fn components(&self) -> impl Iterator<Item = (SegmentId, &ComponentSpec)> {
        self.segments
            .iter()
            .flat_map(|s| s.components.iter().map(move |c| (s.id, c)))
    }

    pub fn placement(&self, name: &str) -> Option<Placement> {
        self.components()
            .enumerate()
            .find(|(_, (_, c))| c.id() == name)
            .map(|(i, (segment, _))| Placement {
                id: ComponentId(i as u32),
                segment,
            })
    }

    pub fn dram_segment(&self) -> Option<SegmentId> {
        self.components()
            .find(|(_, c)| matches!(c, ComponentSpec::Dram { .. }))
            .map(|(s, _)| s)
    }

    /// Segments holding at least one CPU, in order.
    pub fn cpu_segments(&self) -> Vec<SegmentId> {
        let mut v: Vec<SegmentId> = self
            .components()
            .filter(|(_, c)| matches!(c, ComponentSpec::Cpu { .. }))
            .map(|(s, _)| s)
            .collect();
        v.dedup();
        v
    }

    fn linked(&self, a: SegmentId, b: SegmentId) -> bool {
        self.channel(a, b).is_some() && self.channel(b, a).is_some()
    }

    /// Checks every structural rule; returns warnings that do not prevent a build.
    pub fn validate(&self) -> Result<Vec<String>, ValidationError> {
        if self.quantum_time().is_zero() {
            return Err(ValidationError::ZeroQuantum);
        }
        if self.end_time.is_zero() {
            return Err(ValidationError::ZeroEndTime);
        }
        if self.cpu_clock.is_zero() {
            return Err(ValidationError::ZeroClock);
        }
        for (pos, s) in self.segments.iter().enumerate() {
            if s.id as usize != pos {
                return Err(ValidationError::SegmentOrder { pos, id: s.id });
            }
        }
        let mut seen = BTreeSet::new();
        for (_, c) in self.components() {
            if !seen.insert(c.id()) {
                return Err(ValidationError::DuplicateComponent(c.id().to_string()));
            }
            let bad = |reason: &str| ValidationError::Component {
                id: c.id().to_string(),
                reason: reason.to_string(),
            };
            match c {
                ComponentSpec::Cpu { icache, dcache, .. } => {
                    icache.validate().map_err(bad)?;
                    dcache.validate().map_err(bad)?;
                }
                ComponentSpec::Dram { params, .. } => params.validate().map_err(bad)?,
                ComponentSpec::Cim { params, .. } => {
                    params.validate().map_err(|e| bad(&e.to_string()))?
                }
                ComponentSpec::Traffic { .. } => {}
            }
        }
        let drams = self
            .components()
            .filter(|(_, c)| matches!(c, ComponentSpec::Dram { .. }))
            .count();
        if drams != 1 {
            return Err(ValidationError::DramCount(drams));
        }
        let n = self.segments.len();
        let mut pairs = BTreeSet::new();
        for c in &self.channels {
            if c.src as usize >= n || c.dst as usize >= n {
                return Err(ValidationError::DanglingChannel { src: c.src, dst: c.dst });
            }
            if c.src == c.dst {
                return Err(ValidationError::SelfChannel { src: c.src, dst: c.dst });
            }
            if !pairs.insert((c.src, c.dst)) {
                return Err(ValidationError::DuplicateChannel { src: c.src, dst: c.dst });
            }
        }
        let dram_seg = self.dram_segment().unwrap();
        for s in self.cpu_segments() {
            if s == dram_seg {
                continue;
            }
            if self.channel(s, dram_seg).is_none() {
                return Err(ValidationError::MissingChannel {
                    from: s,
                    to: dram_seg,
                    dir: "request",
                });
            }
            if self.channel(dram_seg, s).is_none() {
                return Err(ValidationError::MissingChannel {
                    from: s,
                    to: dram_seg,
                    dir: "response",
                });
            }
        }
        let cpu_segs = self.cpu_segments();
        for (s, c) in self.components() {
            match c {
                ComponentSpec::Cim { id, .. }
                    if !cpu_segs.iter().any(|&cs| cs == s || self.linked(cs, s)) =>
                {
                    return Err(ValidationError::OrphanCim(id.clone()));
                }
                ComponentSpec::Traffic { id, .. } if !self.channels.iter().any(|ch| ch.src == s) => {
                    return Err(ValidationError::IsolatedTraffic(id.clone()));
                }
                _ => {}
            }
        }
        Ok(self.zero_latency_cycles())
    }

    fn zero_latency_cycles(&self) -> Vec<String> {
        // a cycle of zero-latency channels leaves every segment on it without lookahead
        let n = self.segments.len();
        let zero: Vec<&ChannelSpec> = self.channels.iter().filter(|c| c.latency.is_zero()).collect();
        let mut warnings = Vec::new();
        for start in 0..n as SegmentId {
            let mut stack = vec![start];
            let mut seen = BTreeSet::new();
            let mut cyclic = false;
            while let Some(s) = stack.pop() {
                for c in zero.iter().filter(|c| c.src == s) {
                    if c.dst == start {
                        cyclic = true;
                    } else if seen.insert(c.dst) {
                        stack.push(c.dst);
                    }
                }
            }
            if cyclic {
                warnings.push(format!(
                    "segment {start} lies on a cycle of zero-latency channels; the run may deadlock"
                ));
            }
        }
        warnings
    }

    /// For each CIM (in numbering order) the CPU that drives it: a CPU in the
    /// same segment, else the first CPU with channels both ways. Units are
    /// spread evenly over the CPUs of a segment.
    pub fn cim_drivers(&self) -> Vec<(String, String)> {
        let cpus: Vec<(SegmentId, &str)> = self
            .components()
            .filter(|(_, c)| matches!(c, ComponentSpec::Cpu { .. }))
            .map(|(s, c)| (s, c.id()))
            .collect();
        let mut per_seg_count: BTreeMap<SegmentId, usize> = BTreeMap::new();
        let mut out = Vec::new();
        for (s, c) in self.components() {
            if !matches!(c, ComponentSpec::Cim { .. }) {
                continue;
            }
            let local: Vec<&str> = cpus.iter().filter(|(cs, _)| *cs == s).map(|(_, id)| *id).collect();
            let driver = if !local.is_empty() {
                let k = per_seg_count.entry(s).or_insert(0);
                let d = local[*k % local.len()];
                *k += 1;
                Some(d)
            } else {
                cpus.iter().find(|(cs, _)| self.linked(*cs, s)).map(|(_, id)| *id)
            };
            if let Some(d) = driver {
                out.push((c.id().to_string(), d.to_string()));
            }
        }
        out
    }
}

/// A constructed platform ready to run.
#[derive(Debug, Clone)]
pub struct Platform {
    pub config: VpConfig,
    pub topology: Arc<Topology>,
    pub coordinator: Coordinator,
    pub segments: Vec<Segment>,
    pub warnings: Vec<String>,
}

impl Platform {
    pub fn names(&self) -> &[String] {
        &self.topology.names
    }

    pub fn dram(&self) -> &Dram {
        self.segments.iter().find_map(|s| s.dram()).expect("validated platform has a dram")
    }

    pub fn dram_mut(&mut self) -> &mut Dram {
        self.segments
            .iter_mut()
            .find_map(|s| s.dram_mut())
            .expect("validated platform has a dram")
    }

    pub fn cores(&self) -> impl Iterator<Item = &Core> {
        self.segments.iter().flat_map(|s| s.cores().iter())
    }

    pub fn cims(&self) -> impl Iterator<Item = &CimUnit> {
        self.segments.iter().flat_map(|s| s.cims())
    }

    /// Runs every quantum on the calling thread.
    pub fn run_sequential(&mut self) -> Result<RunSummary, SimError> {
        let mut d = Inline {
            segments: core::mem::take(&mut self.segments),
        };
        let r = self.coordinator.run(&mut d);
        self.segments = d.segments;
        r
    }

    /// Simulated time at which the last activity happened anywhere.
    pub fn simulated_time(&self) -> SimTime {
        self.segments
            .iter()
            .map(|s| s.last_activity())
            .max()
            .unwrap_or(SimTime::ZERO)
    }
}

/// Validates `config` and constructs every segment.
pub fn build(config: &VpConfig) -> Result<Platform, ValidationError> {
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut map = AddressMap::new();
    let mut owner = Vec::new();
    let mut names = Vec::new();
    let mut cacheable = Vec::new();
    let mut cim_k = 0u32;
    let mut cpu_k = 0usize;
    let mut parts: Vec<SegmentParts> = vec![SegmentParts::default(); config.segments.len()];

    for (i, (seg, c)) in config.components().enumerate() {
        let id = ComponentId(i as u32);
        owner.push(seg);
        names.push(c.id().to_string());
        let p = &mut parts[seg as usize];
        match c {
            ComponentSpec::Cpu {
                id: name,
                entry,
                icache,
                dcache,
                insn_budget,
            } => {
                let cfg = CoreConfig {
                    clock_period: config.cpu_clock,
                    icache: *icache,
                    dcache: *dcache,
                    entry: entry.unwrap_or(program_base(cpu_k)),
                    insn_budget: *insn_budget,
                };
                cpu_k += 1;
                p.cores.push(Core::new(id, name.clone(), cfg));
                cacheable.push(false);
            }
            ComponentSpec::Dram { params, .. } => {
                map.insert(AddressRange {
                    base: DRAM_BASE,
                    size: params.capacity,
                    target: id,
                })
                .map_err(|e| ValidationError::Component {
                    id: c.id().to_string(),
                    reason: e.to_string(),
                })?;
                p.dram = Some((id, Dram::new(DRAM_BASE, *params)));
                cacheable.push(true);
            }
            ComponentSpec::Cim { id: name, params } => {
                let base = cim_base(cim_k);
                cim_k += 1;
                map.insert(AddressRange {
                    base,
                    size: WINDOW,
                    target: id,
                })
                .map_err(|e| ValidationError::Component {
                    id: c.id().to_string(),
                    reason: e.to_string(),
                })?;
                p.cims.push((id, CimUnit::new(name.clone(), base, *params)));
                cacheable.push(false);
            }
            ComponentSpec::Traffic {
                seed, count, max_gap, ..
            } => {
                let peers = config.channels.iter().filter(|c| c.src == seg).map(|c| c.dst).collect();
                p.traffic.push(TrafficGen::new(id, *seed, peers, *count, *max_gap));
                cacheable.push(false);
            }
        }
    }

    let topology = Arc::new(Topology {
        map,
        owner,
        names,
        cacheable,
    });
    let segments: Vec<Segment> = parts
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let routes = config
                .channels
                .iter()
                .filter(|c| c.src as usize == i)
                .map(|c| (c.dst, c.latency))
                .collect();
            Segment::new(
                i as SegmentId,
                topology.clone(),
                routes,
                config.bus_latency,
                config.post_device_writes,
                p,
            )
        })
        .collect();
    let mut platform = Platform {
        config: config.clone(),
        coordinator: Coordinator::new(
            segments.len(),
            &config.channels,
            config.quantum_time(),
            config.end_time,
        ),
        topology,
        segments,
        warnings,
    };
    for img in &config.images {
        let bytes: Vec<u8> = img.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        platform
            .dram_mut()
            .load(img.address, &bytes)
            .map_err(|e| ValidationError::Component {
                id: "dram".to_string(),
                reason: e.to_string(),
            })?;
    }
    Ok(platform)
}

fn both_ways(a: SegmentId, b: SegmentId, latency: SimTime) -> [ChannelSpec; 2] {
    [
        ChannelSpec { src: a, dst: b, latency },
        ChannelSpec { src: b, dst: a, latency },
    ]
}

fn preset(name: &str, segments: Vec<Vec<ComponentSpec>>, links: &[(SegmentId, SegmentId)]) -> VpConfig {
    VpConfig {
        name: name.to_string(),
        segments: segments
            .into_iter()
            .enumerate()
            .map(|(i, components)| SegmentSpec {
                id: i as SegmentId,
                components,
            })
            .collect(),
        channels: links
            .iter()
            .flat_map(|&(a, b)| both_ways(a, b, DEFAULT_CHANNEL_LATENCY))
            .collect(),
        quantum: Quantum::Insns(DEFAULT_QUANTUM_INSNS),
        end_time: DEFAULT_END_TIME,
        cpu_clock: CPU_CLOCK_PERIOD,
        bus_latency: DEFAULT_BUS_LATENCY,
        post_device_writes: true,
        images: Vec::new(),
    }
}

/// Two segments, each with a CPU and two CIM units; segment 0 also holds DRAM.
pub fn preset_uniform() -> VpConfig {
    use ComponentSpec as C;
    preset(
        "uniform",
        vec![
            vec![C::cpu("cpu0"), C::dram("dram"), C::cim("cim0"), C::cim("cim1")],
            vec![C::cpu("cpu1"), C::cim("cim2"), C::cim("cim3")],
        ],
        &[(0, 1)],
    )
}

/// CPU + DRAM, a second CPU, and two segments of two CIM units each, all
/// linked to segment 0.
pub fn preset_load_oriented() -> VpConfig {
    use ComponentSpec as C;
    preset(
        "load-oriented",
        vec![
            vec![C::cpu("cpu0"), C::dram("dram")],
            vec![C::cpu("cpu1")],
            vec![C::cim("cim0"), C::cim("cim1")],
            vec![C::cim("cim2"), C::cim("cim3")],
        ],
        &[(0, 1), (0, 2), (0, 3)],
    )
}

pub const PRESET_NAMES: [&str; 2] = ["uniform", "load-oriented"];

pub fn preset_by_name(name: &str) -> Option<VpConfig> {
    match name {
        "uniform" => Some(preset_uniform()),
        "load-oriented" | "load_oriented" => Some(preset_load_oriented()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(cfg: &VpConfig, seg: usize) -> Vec<&'static str> {
        cfg.segments[seg]
            .components
            .iter()
            .map(|c| match c {
                ComponentSpec::Cpu { .. } => "cpu",
                ComponentSpec::Dram { .. } => "dram",
                ComponentSpec::Cim { .. } => "cim",
                ComponentSpec::Traffic { .. } => "traffic",
            })
            .collect()
    }

    #[test]
    fn uniform_layout() {
        let c = preset_uniform();
        assert_eq!(c.segments.len(), 2);
        assert_eq!(kinds(&c, 0), ["cpu", "dram", "cim", "cim"]);
        assert_eq!(kinds(&c, 1), ["cpu", "cim", "cim"]);
        assert_eq!(c.cpu_segments(), [0, 1]);
        assert!(c.validate().unwrap().is_empty());
        let p = build(&c).unwrap();
        assert_eq!(p.segments.len(), 2);
        assert_eq!(p.cores().count(), 2);
    }

    #[test]
    fn load_oriented_layout() {
        let c = preset_load_oriented();
        assert_eq!(c.segments.len(), 4);
        assert_eq!(kinds(&c, 0), ["cpu", "dram"]);
        assert_eq!(kinds(&c, 1), ["cpu"]);
        assert_eq!(kinds(&c, 2), ["cim", "cim"]);
        assert_eq!(kinds(&c, 3), ["cim", "cim"]);
        for (a, b) in [(0, 1), (0, 2), (0, 3)] {
            assert!(c.channel(a, b).is_some() && c.channel(b, a).is_some());
        }
        assert_eq!(c.channels.len(), 6);
        let drivers = c.cim_drivers();
        assert!(drivers.iter().all(|(_, d)| d == "cpu0"));
        assert_eq!(drivers.len(), 4);
    }

    #[test]
    fn uniform_drivers_are_local() {
        let d = preset_uniform().cim_drivers();
        let want: Vec<(String, String)> = [("cim0", "cpu0"), ("cim1", "cpu0"), ("cim2", "cpu1"), ("cim3", "cpu1")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(d, want);
    }

    #[test]
    fn quantum_conversion() {
        assert_eq!(preset_uniform().quantum_time(), SimTime::from_ps(5_880_000));
        assert_eq!(Quantum::Ps(42).to_time(CPU_CLOCK_PERIOD), SimTime::from_ps(42));
    }

    #[test]
    fn validation_rules() {
        let mut c = preset_uniform();
        c.segments[1].components.push(ComponentSpec::dram("dram2"));
        assert_eq!(c.validate(), Err(ValidationError::DramCount(2)));

        let mut c = preset_uniform();
        c.channels.retain(|ch| !(ch.src == 0 && ch.dst == 1));
        assert!(matches!(
            c.validate(),
            Err(ValidationError::MissingChannel { dir: "response", .. })
        ));

        let mut c = preset_uniform();
        c.channels.push(ChannelSpec {
            src: 0,
            dst: 7,
            latency: SimTime::from_ns(1),
        });
        assert!(matches!(c.validate(), Err(ValidationError::DanglingChannel { .. })));

        let mut c = preset_uniform();
        c.segments[1].components.push(ComponentSpec::cim("cim0"));
        assert!(matches!(c.validate(), Err(ValidationError::DuplicateComponent(_))));

        let mut c = preset_uniform();
        c.quantum = Quantum::Insns(0);
        assert_eq!(c.validate(), Err(ValidationError::ZeroQuantum));

        let mut c = preset_uniform();
        c.end_time = SimTime::ZERO;
        assert_eq!(c.validate(), Err(ValidationError::ZeroEndTime));
    }

    #[test]
    fn zero_latency_cycle_is_only_a_warning() {
        let mut c = preset_uniform();
        for ch in &mut c.channels {
            ch.latency = SimTime::ZERO;
        }
        let w = c.validate().unwrap();
        assert_eq!(w.len(), 2);
        assert!(build(&c).is_ok());
    }

    #[test]
    fn three_segment_custom_config_builds() {
        let mut c = preset_uniform();
        c.segments.push(SegmentSpec {
            id: 2,
            components: vec![ComponentSpec::cpu("cpu2")],
        });
        c.channels.extend(both_ways(0, 2, SimTime::from_us(1)));
        let p = build(&c).unwrap();
        assert_eq!(p.segments.len(), 3);
        assert_eq!(p.cores().count(), 3);
    }

    #[test]
    fn cim_addresses_follow_declaration_order() {
        let p = build(&preset_load_oriented()).unwrap();
        let bases: Vec<u64> = p.cims().map(|c| c.base()).collect();
        assert_eq!(bases, [cim_base(0), cim_base(1), cim_base(2), cim_base(3)]);
    }
}

//! Direct-mapped, write-through, no-write-allocate L1 cache.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mem::Sram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    pub size_bytes: u32,
    #[serde(default = "default_line")]
    pub line_bytes: u32,
    #[serde(default = "default_enabled")]
    pub enabled: bool,
}

fn default_line() -> u32 {
    64
}

fn default_enabled() -> bool {
    true
}

impl CacheConfig {
    pub const L1I: CacheConfig = CacheConfig {
        size_bytes: 16 << 10,
        line_bytes: 64,
        enabled: true,
    };
    pub const L1D: CacheConfig = CacheConfig {
        size_bytes: 32 << 10,
        line_bytes: 64,
        enabled: true,
    };

    pub fn disabled(self) -> Self {
        CacheConfig {
            enabled: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.line_bytes.is_power_of_two() || self.line_bytes < 8 {
            return Err("cache line size must be a power of two of at least 8 bytes");
        }
        if !self.size_bytes.is_power_of_two() || self.size_bytes < self.line_bytes {
            return Err("cache size must be a power of two and a multiple of the line size");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone)]
pub struct Cache {
    cfg: CacheConfig,
    tags: Vec<Option<u64>>,
    data: Sram,
    stats: CacheStats,
}

impl Cache {
    pub fn new(cfg: CacheConfig) -> Self {
        let lines = (cfg.size_bytes / cfg.line_bytes) as usize;
        Cache {
            cfg,
            tags: vec![None; lines],
            data: Sram::new(0, cfg.size_bytes as usize),
            stats: CacheStats::default(),
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn enabled(&self) -> bool {
        self.cfg.enabled
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn line_bytes(&self) -> u32 {
        self.cfg.line_bytes
    }

    pub fn line_base(&self, addr: u64) -> u64 {
        addr & !(u64::from(self.cfg.line_bytes) - 1)
    }

    fn index(&self, addr: u64) -> (usize, u64) {
        let line = addr / u64::from(self.cfg.line_bytes);
        let sets = self.tags.len() as u64;
        ((line % sets) as usize, line / sets)
    }

    /// Returns the cached bytes on a hit. The access must not cross a line.
    pub fn read(&mut self, addr: u64, len: usize) -> Option<&[u8]> {
        let (set, tag) = self.index(addr);
        if self.tags[set] == Some(tag) {
            self.stats.hits += 1;
            let off = set * self.cfg.line_bytes as usize
                + (addr % u64::from(self.cfg.line_bytes)) as usize;
            Some(self.data.slice(off, len))
        } else {
            self.stats.misses += 1;
            None
        }
    }

    pub fn contains(&self, addr: u64) -> bool {
        let (set, tag) = self.index(addr);
        self.tags[set] == Some(tag)
    }

    /// Installs a full line, evicting whatever shared its set.
    pub fn fill(&mut self, line_addr: u64, bytes: &[u8]) {
        debug_assert_eq!(bytes.len(), self.cfg.line_bytes as usize);
        let (set, tag) = self.index(line_addr);
        self.tags[set] = Some(tag);
        let lb = self.cfg.line_bytes as usize;
        self.data.slice_mut(set * lb, lb).copy_from_slice(bytes);
    }

    /// Write-through update: refreshes the line if present, never allocates.
    pub fn write_hit(&mut self, addr: u64, bytes: &[u8]) -> bool {
        let (set, tag) = self.index(addr);
        if self.tags[set] != Some(tag) {
            return false;
        }
        let off =
            set * self.cfg.line_bytes as usize + (addr % u64::from(self.cfg.line_bytes)) as usize;
        self.data.slice_mut(off, bytes.len()).copy_from_slice(bytes);
        true
    }
}

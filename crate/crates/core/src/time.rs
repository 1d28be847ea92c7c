use core::fmt;
use core::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// A point in (or span of) simulated time, in integer picoseconds.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000_000)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// `self * n`, e.g. a cycle count times a clock period.
    pub const fn times(self, n: u64) -> SimTime {
        SimTime(self.0 * n)
    }

    /// Number of whole `period`s needed to cover `self`.
    pub fn cycles_ceil(self, period: SimTime) -> u64 {
        debug_assert!(!period.is_zero());
        self.0.div_ceil(period.0)
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

/// CPU clock period of the modeled 1.7 GHz cores, rounded to whole picoseconds.
pub const CPU_CLOCK_PERIOD: SimTime = SimTime::from_ps(588);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_cycles() {
        assert_eq!(SimTime::from_ns(32).cycles_ceil(CPU_CLOCK_PERIOD), 55);
        assert_eq!(SimTime::from_ps(588).cycles_ceil(CPU_CLOCK_PERIOD), 1);
        assert_eq!(SimTime::ZERO.cycles_ceil(CPU_CLOCK_PERIOD), 0);
    }

    #[test]
    fn ten_thousand_cycles_is_5_88_us() {
        assert_eq!(CPU_CLOCK_PERIOD.times(10_000), SimTime::from_ps(5_880_000));
    }
}

//! Core of a parallel virtual platform for compute-in-memory accelerators.
//!
//! Everything here is `no_std` (with `alloc`): the event kernel, the
//! time-decoupled coordinator, the component models and the benchmark
//! workload generators. Threads, files and the command line live in the
//! `cimvp` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asm;
pub mod cache;
pub mod cim;
pub mod config;
pub mod cpu;
pub mod digest;
pub mod error;
pub mod interconnect;
pub mod isa;
pub mod kernel;
pub mod mem;
pub mod rng;
pub mod segment;
pub mod td;
pub mod time;
pub mod txn;
pub mod workload;

pub use error::SimError;
pub use time::SimTime;
pub use txn::{Command, ComponentId, Transaction};

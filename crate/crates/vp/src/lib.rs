//! Host side of the cimvp virtual platform: parallel execution, config and
//! trace files, and the benchmark harness behind the `cimvp` command.

pub mod bench;
pub mod config_io;
pub mod exec;
pub mod trace_io;

pub use cimvp_core as core;

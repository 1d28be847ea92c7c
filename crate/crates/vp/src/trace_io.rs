//! Platform-wide transaction traces.

use std::fs;
use std::io;
use std::path::Path;

use cimvp_core::config::Platform;
use cimvp_core::digest::Fnv;
use cimvp_core::interconnect::{write_csv_rows, TraceRecord, TRACE_CSV_HEADER};

/// All records of all segments, sorted.
pub fn collect(platform: &Platform) -> Vec<TraceRecord> {
    let mut v: Vec<TraceRecord> = platform
        .segments
        .iter()
        .flat_map(|s| s.trace().records().iter().copied())
        .collect();
    v.sort();
    v
}

/// Order-independent fingerprint of a trace multiset.
pub fn digest(records: &[TraceRecord]) -> u64 {
    let mut sorted = records.to_vec();
    sorted.sort();
    let mut h = Fnv::default();
    for r in &sorted {
        h.write_u64(r.timestamp.as_ps());
        h.write_u64(u64::from(r.initiator.0));
        h.write_u64(u64::from(r.target.0));
        h.write_u64(r.address);
        h.write_u64(r.command as u64);
        h.write_u64(u64::from(r.byte_len));
        h.write_u64(r.latency.as_ps());
    }
    h.finish()
}

pub fn to_csv(records: &[TraceRecord], names: &[String]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    write_csv_rows(records, &mut out, names).expect("writing to a String cannot fail");
    out
}

pub fn write_csv(platform: &Platform, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, to_csv(&collect(platform), platform.names()))
}

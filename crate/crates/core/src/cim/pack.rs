//! Bit-contiguous packing of fixed-resolution values into port-width words.
//!
//! Value `i` occupies bits `[i*res, (i+1)*res)` of the stream, and stream bit
//! `b` lives in word `b / port`, bit `b % port` (LSB first). A stream of `n`
//! values therefore needs exactly `ceil(n * res / port)` words.

use alloc::vec;
use alloc::vec::Vec;

pub fn words_needed(count: usize, res: u32, port: u32) -> usize {
    (count as u64 * u64::from(res)).div_ceil(u64::from(port)) as usize
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Packs `values` (each truncated to `res` bits).
pub fn pack(values: &[u64], res: u32, port: u32) -> Vec<u64> {
    let mut words = vec![0u64; words_needed(values.len(), res, port)];
    let port = u64::from(port);
    for (i, &v) in values.iter().enumerate() {
        let mut v = v & mask(res);
        let mut bit = i as u64 * u64::from(res);
        let mut left = u64::from(res);
        while left > 0 {
            let (w, off) = ((bit / port) as usize, bit % port);
            let take = left.min(port - off);
            words[w] |= (v & mask(take as u32)) << off;
            v = if take >= 64 { 0 } else { v >> take };
            bit += take;
            left -= take;
        }
    }
    words
}

/// Inverse of [`pack`]; bits of each word above `port` are ignored.
pub fn unpack(words: &[u64], res: u32, port: u32, count: usize) -> Vec<u64> {
    let port64 = u64::from(port);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut bit = i as u64 * u64::from(res);
        let mut left = u64::from(res);
        let mut got = 0u32;
        let mut v = 0u64;
        while left > 0 {
            let (w, off) = ((bit / port64) as usize, bit % port64);
            let take = left.min(port64 - off);
            let word = words.get(w).copied().unwrap_or(0) & mask(port);
            v |= ((word >> off) & mask(take as u32)) << got;
            got += take as u32;
            bit += take;
            left -= take;
        }
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bytes_into_u64_words_are_little_endian() {
        let w = pack(&[1, 2, 3, 4, 5, 6, 7, 8, 9], 8, 64);
        assert_eq!(w, [u64::from_le_bytes([1, 2, 3, 4, 5, 6, 7, 8]), 9]);
    }

    #[test]
    fn values_can_straddle_words() {
        let w = pack(&[0xabc, 0xdef], 12, 16);
        assert_eq!(w.len(), 2);
        assert_eq!(unpack(&w, 12, 16, 2), [0xabc, 0xdef]);
    }

    proptest! {
        #[test]
        fn roundtrip(res in 1u32..=64, port_bytes in 1u32..=8, raw in proptest::collection::vec(any::<u64>(), 0..40)) {
            let port = port_bytes * 8;
            let vals: Vec<u64> = raw.iter().map(|v| v & mask(res)).collect();
            let w = pack(&vals, res, port);
            prop_assert_eq!(w.len(), words_needed(vals.len(), res, port));
            prop_assert!(w.iter().all(|&x| x & !mask(port) == 0));
            prop_assert_eq!(unpack(&w, res, port, vals.len()), vals);
        }
    }
}

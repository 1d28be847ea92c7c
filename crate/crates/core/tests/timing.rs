//! DRAM and CIM timing against closed-form references.

use cimvp_core::cim::{self, cmd, is_valid_traversal, pack, param, CimConfig, CimUnit, FsmState};
use cimvp_core::mem::{Dram, DramConfig};
use cimvp_core::time::SimTime;
use cimvp_core::txn::{ComponentId, Transaction};
use cimvp_testkit::{cim_in_cycles, cim_out_cycles, DramOracle, ROW_BYTES};
use proptest::prelude::*;

fn access() -> impl Strategy<Value = (u64, bool)> {
    // a handful of rows so hits, switches and turnarounds all show up
    (0u64..6, 0u64..ROW_BYTES / 8, any::<bool>()).prop_map(|(row, word, w)| (row * ROW_BYTES + word * 8, w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn dram_latency_matches_state_machine(seq in prop::collection::vec(access(), 1..40)) {
        let mut dram = Dram::new(0, DramConfig::default());
        let mut oracle = DramOracle::default();
        for (i, &(addr, write)) in seq.iter().enumerate() {
            let txn = if write {
                Transaction::write(i as u64, ComponentId(0), addr, vec![i as u8; 8], SimTime::ZERO)
            } else {
                Transaction::read(i as u64, ComponentId(0), addr, 8, SimTime::ZERO)
            };
            let got = dram.access(&txn).unwrap().latency.as_ps();
            prop_assert_eq!(got, oracle.access(addr, write), "access {}", i);
            prop_assert!(DramOracle::allowed(write).contains(&got));
        }
    }
}

#[derive(Debug, Clone)]
struct Shape {
    h: u32,
    w: u32,
    input_res: u32,
    output_res: u32,
    in_port: u32,
    out_port: u32,
    op_cycles: u64,
    seed: u64,
}

fn shape() -> impl Strategy<Value = Shape> {
    (
        1u32..=256,
        1u32..=256,
        1u32..=16,
        8u32..=48,
        (1u32..=8).prop_map(|k| 8 * k),
        (1u32..=8).prop_map(|k| 8 * k),
        1u64..200,
        any::<u64>(),
    )
        .prop_map(|(h, w, input_res, output_res, in_port, out_port, op_cycles, seed)| Shape {
            h,
            w,
            input_res,
            output_res,
            in_port,
            out_port,
            op_cycles,
            seed,
        })
}

/// Drives one unit through a full weight load and one vector. Returns the
/// words sent, the words read and the unit for inspection.
fn drive(s: &Shape) -> (u64, u64, CimUnit) {
    let hw = CimConfig {
        in_port_width: s.in_port,
        out_port_width: s.out_port,
        op_cycles: s.op_cycles,
        ..CimConfig::default()
    };
    let period = hw.clock_period.as_ps();
    let mut u = CimUnit::new("cim", 0, hw);
    let mut now = 0u64;
    let mut t = || {
        now += period;
        SimTime::from_ps(now)
    };
    for (p, v) in [
        (param::MATRIX_H, s.h),
        (param::MATRIX_W, s.w),
        (param::INPUT_RES, s.input_res),
        (param::OUTPUT_RES, s.output_res),
        (param::WEIGHT_RES, 1),
    ] {
        u.write(cim::REG_CONFIG, param::word(p, v), t()).unwrap();
    }
    u.write(cim::REG_CMD, cmd::INITIALIZE, t()).unwrap();
    let col = vec![1u64; s.h as usize];
    for _ in 0..s.w {
        for word in pack::pack(&col, 1, s.in_port) {
            u.write(cim::REG_DATA_IN, word, t()).unwrap();
        }
    }
    let mask = (1u64 << s.input_res) - 1;
    let input: Vec<u64> = (0..s.h as u64).map(|k| s.seed.rotate_left(k as u32) & mask).collect();
    u.write(cim::REG_CMD, cmd::COMPUTE, t()).unwrap();
    let mut sent = 0;
    for word in pack::pack(&input, s.input_res, s.in_port) {
        assert_eq!(u.state(), FsmState::In);
        u.write(cim::REG_DATA_IN, word, t()).unwrap();
        sent += 1;
    }
    assert_eq!(u.state(), FsmState::Op);
    let mut read = 0;
    let mut words = Vec::new();
    loop {
        let (st, _) = u.read(cim::REG_STATUS, t()).unwrap();
        if st == FsmState::Out as u64 {
            break;
        }
    }
    while u.state() == FsmState::Out {
        words.push(u.read(cim::REG_DATA_OUT, t()).unwrap().0);
        read += 1;
    }
    // all-ones weights: every output is the saturated input sum
    let sum: u64 = input.iter().sum();
    let max = (1u64 << s.output_res) - 1;
    let out = pack::unpack(&words, s.output_res, s.out_port, s.w as usize);
    assert!(out.iter().all(|&o| o == sum.min(max)));
    (sent, read, u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn cim_port_cycles_match_ceiling_formulas(s in shape()) {
        let (sent, read, u) = drive(&s);
        let want_in = cim_in_cycles(s.h.into(), s.input_res.into(), s.in_port.into());
        let want_out = cim_out_cycles(s.w.into(), s.output_res.into(), s.out_port.into());
        prop_assert_eq!(sent, want_in);
        prop_assert_eq!(read, want_out);
        let t = u.fsm_timing().unwrap();
        prop_assert_eq!(t.in_cycles, want_in);
        prop_assert_eq!(t.out_cycles, want_out);
        prop_assert_eq!(t.op_cycles, s.op_cycles);
        let c = u.cycle().as_ps();
        prop_assert_eq!(t.in_time.as_ps(), c * want_in);
        prop_assert_eq!(t.op_time.as_ps(), c * s.op_cycles);
        prop_assert_eq!(t.out_time.as_ps(), c * want_out);

        // OP lasts exactly op_cycles clocks in the state log
        let log = u.fsm_log();
        prop_assert!(is_valid_traversal(log.iter().map(|e| e.1)));
        let op = log.iter().position(|e| e.1 == FsmState::Op).unwrap();
        prop_assert_eq!((log[op + 1].0 - log[op].0).as_ps(), c * s.op_cycles);
        prop_assert_eq!(log.last().unwrap().1, FsmState::Idle);
    }
}

#[test]
fn traversal_checker_rejects_skips_and_reorderings() {
    use FsmState::*;
    assert!(is_valid_traversal([Idle, In, Op, Out, Idle, In]));
    assert!(is_valid_traversal([]));
    assert!(!is_valid_traversal([Idle, Op]));
    assert!(!is_valid_traversal([In, Op, Out]));
    assert!(!is_valid_traversal([Idle, In, Op, Out, In]));
}

#[test]
fn default_delay_sums() {
    let allowed = DramOracle::allowed(false);
    assert_eq!(allowed, [30_000, 45_000, 37_000, 52_000]);
    assert_eq!(DramOracle::allowed(true), [30_000, 45_000, 37_000, 52_000]);
}

use cimvp_core::kernel::{Event, Kernel};
use cimvp_core::time::SimTime;
use cimvp_core::txn::ComponentId;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Schedule(u64),
    Cancel(usize),
    Run(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0u64..500).prop_map(Op::Schedule),
        1 => any::<prop::sample::Index>().prop_map(|i| Op::Cancel(i.index(1 << 16))),
        2 => (0u64..300).prop_map(Op::Run),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    /// Against a list model: events fire in (time, insertion) order, exactly
    /// once, never before `now`, and cancelled events never fire.
    #[test]
    fn kernel_matches_list_model(ops in prop::collection::vec(op(), 1..80)) {
        let mut k: Kernel<usize> = Kernel::new();
        let mut ids = Vec::new();
        let mut live: Vec<(u64, usize)> = Vec::new();
        let mut fired = Vec::new();
        let mut n = 0usize;
        for o in ops {
            match o {
                Op::Schedule(d) => {
                    let now = k.now().as_ps();
                    ids.push(k.schedule(SimTime::from_ps(d), ComponentId(0), n));
                    live.push((now + d, n));
                    n += 1;
                }
                Op::Cancel(i) if !ids.is_empty() => {
                    let id = ids[i % ids.len()];
                    let was_live = live.iter().any(|&(_, p)| p == i % ids.len());
                    prop_assert_eq!(k.cancel(id), was_live);
                    live.retain(|&(_, p)| p != i % ids.len());
                }
                Op::Cancel(_) => {}
                Op::Run(d) => {
                    let limit = k.now().as_ps() + d;
                    let mut got = Vec::new();
                    k.run_until(SimTime::from_ps(limit), &mut |k: &mut Kernel<usize>, e: Event<usize>| {
                        assert_eq!(k.now(), e.time);
                        got.push((e.time.as_ps(), e.payload));
                    });
                    live.sort();
                    let due: Vec<_> = live.iter().copied().filter(|&(t, _)| t <= limit).collect();
                    live.retain(|&(t, _)| t > limit);
                    prop_assert_eq!(&got, &due);
                    prop_assert_eq!(k.now().as_ps(), limit);
                    fired.extend(got);
                }
            }
            prop_assert_eq!(k.pending(), live.len());
        }
        let mut seen: Vec<usize> = fired.iter().map(|&(_, p)| p).collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), fired.len());
    }

    #[test]
    fn schedule_at_rejects_the_past(now in 1u64..1000, back in 1u64..1000) {
        let mut k: Kernel<()> = Kernel::new();
        k.run_until(SimTime::from_ps(now), &mut |_: &mut Kernel<()>, _: Event<()>| {});
        let at = SimTime::from_ps(now.saturating_sub(back));
        prop_assert!(k.schedule_at(at, ComponentId(0), ()).is_err());
        prop_assert!(k.schedule_at(SimTime::from_ps(now), ComponentId(0), ()).is_ok());
    }
}

#[test]
fn events_scheduled_during_a_run_fire_in_the_same_run() {
    let mut k: Kernel<u32> = Kernel::new();
    k.schedule(SimTime::from_ps(10), ComponentId(0), 3);
    let mut log = Vec::new();
    k.run_until(SimTime::from_ps(100), &mut |k: &mut Kernel<u32>, e: Event<u32>| {
        log.push((e.time.as_ps(), e.payload));
        if e.payload > 0 {
            k.schedule(SimTime::ZERO, ComponentId(0), e.payload - 1);
        }
    });
    assert_eq!(log, [(10, 3), (10, 2), (10, 1), (10, 0)]);
}

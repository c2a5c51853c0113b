//! Property checks over randomized fractional instances: bookkeeping
//! identities, conservation, metric factorizations, determinism.

mod common;

use proptest::prelude::*;

use common::{balance_residual, conservation_residual, generate_fractional_instance};
use railsched_core::flow::{awt, awt_to_horizon, load_passengers, FlowOptions};
use railsched_core::metrics::summarize;

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    })]

    #[test]
    fn split_and_sum_identities_stay_tight(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let flow = load_passengers(&inst.od, &inst.timetable, &inst.line, &FlowOptions::default())
            .unwrap();
        prop_assert!(balance_residual(&flow) <= 1e-9);
    }

    #[test]
    fn passengers_are_conserved_per_pair(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let flow = load_passengers(&inst.od, &inst.timetable, &inst.line, &FlowOptions::default())
            .unwrap();
        prop_assert_eq!(conservation_residual(&flow), 0.0);
    }

    #[test]
    fn tensors_stay_in_range(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let flow = load_passengers(&inst.od, &inst.timetable, &inst.line, &FlowOptions::default())
            .unwrap();
        for train in &flow.trains {
            for values in [
                &train.arrived,
                &train.new_boarded,
                &train.new_left,
                &train.waiting,
                &train.waiting_boarded,
                &train.waiting_left,
                &train.boarded,
            ] {
                for &v in values {
                    prop_assert!(v >= -1e-9, "negative passenger count {}", v);
                }
            }
            for &fs in &train.free_capacity {
                prop_assert!((0.0..=train.capacity).contains(&fs));
            }
        }
        for &v in &flow.leftover {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn load_factor_splits_into_vertical_and_horizontal(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let flow = load_passengers(&inst.od, &inst.timetable, &inst.line, &FlowOptions::default())
            .unwrap();
        let breakdown = awt_to_horizon(&flow, &inst.od, &inst.line).unwrap();
        let metrics = summarize(
            &flow,
            &inst.line,
            &breakdown,
            &inst.timetable.interdeparture_times(),
        )
        .unwrap();
        for train in &metrics.trains {
            let product = train.vertical_load_factor * train.horizontal_load_factor;
            prop_assert!(
                (train.load_factor - product).abs() <= 1e-9,
                "lf {} vs vlf*hlf {}",
                train.load_factor,
                product
            );
        }
    }

    #[test]
    fn waiting_average_matches_its_components(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let flow = load_passengers(&inst.od, &inst.timetable, &inst.line, &FlowOptions::default())
            .unwrap();
        let open = awt(&flow, &inst.od, &inst.line).unwrap();
        let closed = awt_to_horizon(&flow, &inst.od, &inst.line).unwrap();
        for b in [&open, &closed] {
            let rebuilt = (b.waiting_component + b.arrival_component) / b.total_demand;
            prop_assert_eq!(b.total_awt, rebuilt);
            prop_assert!(b.waiting_component >= 0.0);
            prop_assert!(b.arrival_component >= 0.0);
        }
        prop_assert!(closed.total_awt >= open.total_awt - 1e-12);
        prop_assert_eq!(closed.total_demand, open.total_demand);
    }

    #[test]
    fn loading_is_deterministic(seed in any::<u64>()) {
        let inst = generate_fractional_instance(seed);
        let opts = FlowOptions::default();
        let a = load_passengers(&inst.od, &inst.timetable, &inst.line, &opts).unwrap();
        let b = load_passengers(&inst.od, &inst.timetable, &inst.line, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn demand_curves_never_decrease(seed in any::<u64>(), a in 0.0..300.0f64, b in 0.0..300.0f64) {
        let inst = generate_fractional_instance(seed);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for (i, j, curve) in inst.od.pairs() {
            prop_assert!(
                curve.interval(lo, hi) >= 0.0,
                "pair ({}, {}) shrank between {} and {}",
                i, j, lo, hi
            );
        }
    }
}

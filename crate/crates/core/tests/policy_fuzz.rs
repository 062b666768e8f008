//! Cross-module checks over whole simulated episodes: every policy only
//! ever returns assignable slots, commitments never mutate, and the
//! scalar-generic pipeline runs end to end on `f32`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use slotroute_core::bench::PolicySpec;
use slotroute_core::domain::SystemParams;
use slotroute_core::engine::{run_episode, EpochKind, HeuristicRouter};
use slotroute_core::instance::{generate_instance, GenParams, SystemPreset};
use slotroute_core::routing::SolveBudget;

fn small_gen() -> GenParams<f64> {
    let mut gen = SystemPreset::S1.gen_params();
    gen.horizon_days = 3;
    gen.n_pre_mean = 4.0;
    gen.n_daily_mean = 3.0;
    gen.count_sd = 1.5;
    gen
}

fn specs() -> Vec<PolicySpec> {
    vec![
        PolicySpec::Ran,
        PolicySpec::Seg,
        PolicySpec::RanRe { m: 2 },
        PolicySpec::SegRe { m: 2 },
        PolicySpec::Sbp {
            q: 3,
            sampling_horizon: 1,
            infinite_future_windows: true,
        },
    ]
}

#[test]
fn every_policy_stays_inside_the_assignable_window() {
    // run_episode rejects any out-of-window decision, so a fuzz over
    // random instances passing at all is the legality check.
    let system: SystemParams<f64> = SystemPreset::S1.system_params();
    let mut gen = small_gen();
    for spec in specs() {
        for seed in 0..8u64 {
            let inst = generate_instance(&system, &gen, 1_000 + seed);
            let policy = spec.build(&system, &gen, SolveBudget::fast(3));
            let router = HeuristicRouter::new(SolveBudget::sweeps(20));
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let result = run_episode(&inst, policy.as_ref(), &router, &mut rng)
                .unwrap_or_else(|e| panic!("policy {} broke legality: {e}", spec.label()));
            for record in &result.ledger {
                if let EpochKind::Tsa { chosen, .. } = &record.kind {
                    assert!(system.calendar.is_assignable(record.day, *chosen));
                }
            }
        }
    }
    // Pool-mode instances keep the same guarantees.
    gen.location_pool = Some(vec![
        slotroute_core::domain::Point::new(0.3, 0.3),
        slotroute_core::domain::Point::new(1.5, 1.8),
        slotroute_core::domain::Point::new(0.9, 1.1),
    ]);
    let inst = generate_instance(&system, &gen, 5);
    let policy = PolicySpec::Ran.build(&system, &gen, SolveBudget::fast(3));
    let router = HeuristicRouter::new(SolveBudget::sweeps(20));
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    run_episode(&inst, policy.as_ref(), &router, &mut rng).unwrap();
}

#[test]
fn commitments_never_mutate_after_the_assignment_epoch() {
    let system: SystemParams<f64> = SystemPreset::S1.system_params();
    let gen = small_gen();
    let inst = generate_instance(&system, &gen, 77);
    let policy = PolicySpec::Ran.build(&system, &gen, SolveBudget::fast(3));
    let router = HeuristicRouter::new(SolveBudget::sweeps(50));
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let result = run_episode(&inst, policy.as_ref(), &router, &mut rng).unwrap();

    // Diff the ledger against the final assignment table: every TSA epoch
    // appears exactly once per customer with exactly the recorded slot.
    let mut seen = std::collections::HashMap::new();
    for record in &result.ledger {
        if let EpochKind::Tsa {
            customer, chosen, ..
        } = &record.kind
        {
            assert!(
                seen.insert(*customer, *chosen).is_none(),
                "customer {customer} decided twice"
            );
        }
    }
    for assignment in result.assignments.iter().filter(|a| a.dynamic) {
        assert_eq!(
            seen.get(&assignment.customer),
            Some(&assignment.decision),
            "assignment table disagrees with the ledger for {}",
            assignment.customer
        );
    }
    assert_eq!(seen.len(), result.dynamic_customers());
}

#[test]
fn the_pipeline_is_generic_over_f32() {
    let system: SystemParams<f32> = SystemPreset::S1.system_params();
    let mut gen: GenParams<f32> = SystemPreset::S1.gen_params();
    gen.horizon_days = 2;
    gen.n_pre_mean = 3.0;
    gen.n_daily_mean = 2.0;
    gen.count_sd = 1.0;
    let inst = generate_instance(&system, &gen, 9);
    let policy = PolicySpec::RanRe { m: 2 }.build(&system, &gen, SolveBudget::fast(3));
    let router = HeuristicRouter::new(SolveBudget::sweeps(20));
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let result = run_episode(&inst, policy.as_ref(), &router, &mut rng).unwrap();
    assert!(result.totals.total >= 0.0f32);
    let refold: f32 = result
        .ledger
        .iter()
        .map(slotroute_core::engine::epoch_cost)
        .sum();
    assert_eq!(refold, result.totals.total);
}

use std::collections::BTreeMap;

use mansfield_core::exec::Execution;
use mansfield_core::poolmodel::{
    allocate_pools, diverse_hire_rate, gap_to_nominal, hire_rate_monte_carlo, PoolPolicy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Allocation by brute force: among all multisets of per-pool counts using
/// only floor/ceil of f*n, pick the one whose total is nearest f*n*K
/// (ties go to the larger total).
fn brute_rate(n: u32, f: f64, pools: u32, probs: &BTreeMap<u32, f64>) -> f64 {
    let target = f * n as f64 * pools as f64;
    let lo = (f * n as f64 + 1e-9).floor() as u32;
    let hi = (f * n as f64 - 1e-9).ceil() as u32;
    let mut best: Option<(f64, u32)> = None;
    for ceil_pools in 0..=pools {
        let total = lo * (pools - ceil_pools) + hi * ceil_pools;
        let err = (total as f64 - target).abs();
        if best.is_none_or(|(e, _)| err <= e + 1e-12) {
            best = Some((err, ceil_pools));
        }
    }
    let ceil_pools = best.unwrap().1;
    let p = |d: u32| if d == 0 { 0.0 } else { probs[&d] };
    ((pools - ceil_pools) as f64 * p(lo) + ceil_pools as f64 * p(hi)) / pools as f64
}

fn random_policy(rng: &mut ChaCha8Rng) -> PoolPolicy {
    let n = rng.random_range(1..=12u32);
    let pools = rng.random_range(1..=20u32);
    let f = rng.random_range(0..=100u32) as f64 / 100.0;
    let probs: BTreeMap<u32, f64> = (1..=n).map(|d| (d, rng.random_range(0.0..=1.0))).collect();
    PoolPolicy::new(n, f, pools, probs).unwrap()
}

#[test]
fn worked_example() {
    let p = PoolPolicy::hbr_2016();
    assert_eq!(allocate_pools(&p).unwrap(), vec![1, 1, 1, 1, 2]);
    assert!((diverse_hire_rate(&p).unwrap() - 0.10).abs() < 1e-15);
    assert!((gap_to_nominal(&p).unwrap() + 0.20).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn exact_rate_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_policy(&mut rng);
        let got = diverse_hire_rate(&p).unwrap();
        let want = brute_rate(p.pool_size(), p.diversity_share(), p.num_pools(), p.hire_prob());
        prop_assert!((got - want).abs() < 1e-12, "{:?}: {} vs {}", p, got, want);
    }

    #[test]
    fn allocation_uses_floor_then_ceil(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_policy(&mut rng);
        let alloc = allocate_pools(&p).unwrap();
        prop_assert_eq!(alloc.len(), p.num_pools() as usize);
        prop_assert!(alloc.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(alloc.last().unwrap() - alloc.first().unwrap() <= 1);
    }

    #[test]
    fn proportional_lottery_is_neutral(n in 1u32..12, pools in 1u32..20, pick in 0.0f64..=1.0) {
        // a share whose total f*n*K is a whole number of candidates
        let diverse = (pick * (n * pools) as f64).round();
        let f = diverse / (n * pools) as f64;
        let probs: BTreeMap<u32, f64> = (1..=n).map(|d| (d, d as f64 / n as f64)).collect();
        let p = PoolPolicy::new(n, f, pools, probs).unwrap();
        prop_assert!(gap_to_nominal(&p).unwrap().abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_agrees_on_random_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut within = 0;
    for i in 0..50 {
        let p = random_policy(&mut rng);
        let exact = diverse_hire_rate(&p).unwrap();
        let mc = hire_rate_monte_carlo(&p, i, 100_000, Execution::Parallel).unwrap();
        if (mc.mean - exact).abs() <= 3.0 * mc.std_error + 1e-12 {
            within += 1;
        }
    }
    assert!(within >= 48, "{within}/50 within 3 SE");
}

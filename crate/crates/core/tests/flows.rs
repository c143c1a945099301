use mansfield_core::domain::{AtomicSegment, Band, JobLevel, PopulationSnapshot};
use mansfield_core::exec::Execution;
use mansfield_core::flows::{
    simulate_agent_years, simulate_agents, step, AgentOptions, FlowKind, FlowRates, Sampling,
    StepConfig,
};
use mansfield_core::ingest::fixture;
use mansfield_core::projection::{project, RateBasis, Scenario};
use mansfield_core::synth;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use JobLevel::*;

fn random_case(seed: u64, total: f64) -> (PopulationSnapshot, FlowRates) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = synth::population(&mut rng, total, 0.1);
    let r = synth::rates(&mut rng, &s);
    (s, r)
}

/// The four recurrences written out cell by cell, without any shared helper
/// from the library.
fn reference_step(s: &PopulationSnapshot, r: &FlowRates) -> [[f64; 4]; 6] {
    let mut out = [[0.0; 4]; 6];
    for seg in AtomicSegment::ALL {
        let n = |l: JobLevel| s.count(l, seg);
        let f = |l: JobLevel, k: FlowKind| r.get(l, seg, k);
        let promoted =
            |l: JobLevel| f(l, FlowKind::PromotionRate) * f(l, FlowKind::Retention) * n(l);
        let p = |from: JobLevel, to: JobLevel| f(from, FlowKind::Promotion(to));

        let j = n(JuniorAssociate) - f(JuniorAssociate, FlowKind::Attrition)
            + f(JuniorAssociate, FlowKind::Lateral)
            - promoted(JuniorAssociate);
        let m = n(MidAssociate) - f(MidAssociate, FlowKind::Attrition)
            + f(MidAssociate, FlowKind::Lateral)
            + promoted(JuniorAssociate)
            - promoted(MidAssociate);
        let sa = n(SeniorAssociate) - f(SeniorAssociate, FlowKind::Attrition)
            + f(SeniorAssociate, FlowKind::Lateral)
            + promoted(MidAssociate)
            - p(SeniorAssociate, Counsel)
            - p(SeniorAssociate, NonEquityPartner)
            - p(SeniorAssociate, EquityPartner);
        let c = n(Counsel) + f(Counsel, FlowKind::Lateral) + p(SeniorAssociate, Counsel)
            - p(Counsel, NonEquityPartner)
            - p(Counsel, EquityPartner)
            - f(Counsel, FlowKind::Attrition)
            - f(Counsel, FlowKind::Retirement);
        let ne = n(NonEquityPartner)
            + f(NonEquityPartner, FlowKind::Lateral)
            + p(SeniorAssociate, NonEquityPartner)
            + p(Counsel, NonEquityPartner)
            - p(NonEquityPartner, EquityPartner)
            - f(NonEquityPartner, FlowKind::Attrition)
            - f(NonEquityPartner, FlowKind::Retirement);
        let eq = n(EquityPartner)
            + f(EquityPartner, FlowKind::Lateral)
            + p(SeniorAssociate, EquityPartner)
            + p(Counsel, EquityPartner)
            + p(NonEquityPartner, EquityPartner)
            - f(EquityPartner, FlowKind::Attrition)
            - f(EquityPartner, FlowKind::Retirement);
        for (i, v) in [j, m, sa, c, ne, eq].into_iter().enumerate() {
            out[i][seg.index()] = v;
        }
    }
    out
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_matches_reference(seed in any::<u64>()) {
        let (s, r) = random_case(seed, 50_000.0);
        let next = step(&s, &r, StepConfig::default()).unwrap();
        let expected = reference_step(&s, &r);
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                prop_assert!(close(next.count(level, seg), expected[level.index()][seg.index()], 1e-12));
            }
        }
        prop_assert_eq!(next.t(), s.t() + 1);
    }

    #[test]
    fn conservation(seed in any::<u64>()) {
        let (s, r) = random_case(seed, 80_000.0);
        let next = step(&s, &r, StepConfig::default()).unwrap();
        let mut expected = s.total();
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let c = r.cell(level, seg);
                expected += c.lateral_in - c.attrition - c.retirement;
            }
        }
        prop_assert!(close(next.total(), expected, 1e-9), "{} vs {}", next.total(), expected);
    }

    #[test]
    fn linearity(seed in any::<u64>(), alpha in 0.1f64..5.0, beta in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = synth::population(&mut rng, 20_000.0, 0.1);
        let q = synth::population(&mut rng, 20_000.0, 0.1);
        let per_capita = synth::rates(&mut rng, &PopulationSnapshot::from_grid(0, [[1.0; 4]; 6]).unwrap());
        let rates_for = |x: &PopulationSnapshot, lateral_scale: f64| {
            per_capita.map_headcounts(|level, seg, kind, v| match kind {
                FlowKind::Lateral => v * lateral_scale,
                _ => v * x.count(level, seg),
            })
        };
        let combined = &p.scaled(alpha) + &q.scaled(beta);
        let lhs = step(&combined, &rates_for(&combined, alpha + 2.0 * beta), StepConfig::default()).unwrap();
        let sp = step(&p, &rates_for(&p, 1.0), StepConfig::default()).unwrap();
        let sq = step(&q, &rates_for(&q, 2.0), StepConfig::default()).unwrap();
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let rhs = alpha * sp.count(level, seg) + beta * sq.count(level, seg);
                prop_assert!(close(lhs.count(level, seg), rhs, 1e-9), "{} {}", level, seg);
            }
        }
    }

    #[test]
    fn lateral_increase_moves_one_cell(seed in any::<u64>(), pick in 0usize..24, delta in 0.0f64..500.0) {
        let (s, r) = random_case(seed, 30_000.0);
        let level = JobLevel::from_index(pick / 4).unwrap();
        let seg = AtomicSegment::from_index(pick % 4).unwrap();
        let mut bumped = r.clone();
        bumped.add(level, seg, FlowKind::Lateral, delta).unwrap();
        let a = step(&s, &r, StepConfig::default()).unwrap();
        let b = step(&s, &bumped, StepConfig::default()).unwrap();
        for l in JobLevel::ALL {
            for g in AtomicSegment::ALL {
                let d = b.count(l, g) - a.count(l, g);
                let want = if (l, g) == (level, seg) { delta } else { 0.0 };
                prop_assert!((d - want).abs() <= 1e-9 * a.count(l, g).max(1.0));
            }
        }
    }
}

#[test]
fn oracle_agrees_on_random_rates() {
    let mut hits = 0.0;
    let cases = 20;
    for seed in 0..cases {
        let (s, r) = random_case(1000 + seed, 100_000.0);
        let expected = step(&s, &r, StepConfig::default()).unwrap();
        let est = simulate_agents(&s, &r, &AgentOptions::new(seed, 200)).unwrap();
        hits += est.agreement(&expected, 3.0);
    }
    let rate = hits / cases as f64;
    assert!(rate >= 0.95, "agreement {rate}");
}

#[test]
fn oracle_agrees_with_fixture_over_four_years() {
    let data = fixture::bundled(Band::B501To750);
    let rates = data.flows.unwrap();
    let scenario = Scenario::new("flat", 4).with_basis(RateBasis::PerCapita);
    let traj = project(&data.population, &rates, &scenario, StepConfig::default()).unwrap();
    let est =
        simulate_agent_years(&data.population, &rates, 4, &AgentOptions::new(11, 300)).unwrap();
    let agreement = est.agreement(&traj.snapshots()[4], 3.0);
    assert!(agreement >= 0.95, "agreement {agreement}");
}

#[test]
fn grouped_and_per_agent_sampling_agree() {
    let (s, r) = random_case(77, 3_000.0);
    let grouped = simulate_agents(&s, &r, &AgentOptions::new(3, 400)).unwrap();
    let per_agent = simulate_agents(
        &s,
        &r,
        &AgentOptions::new(3, 400).sampling(Sampling::PerAgent),
    )
    .unwrap();
    let mut within = 0;
    for level in JobLevel::ALL {
        for seg in AtomicSegment::ALL {
            let se = grouped
                .std_error(level, seg)
                .hypot(per_agent.std_error(level, seg));
            if (grouped.mean(level, seg) - per_agent.mean(level, seg)).abs() <= 3.0 * se + 1e-9 {
                within += 1;
            }
        }
    }
    assert!(within >= 22, "{within}/24 cells agree");
}

#[test]
fn oracle_is_deterministic_across_execution_modes() {
    let (s, r) = random_case(5, 10_000.0);
    let a = simulate_agents(
        &s,
        &r,
        &AgentOptions::new(9, 1000).execution(Execution::Parallel),
    )
    .unwrap();
    let b = simulate_agents(
        &s,
        &r,
        &AgentOptions::new(9, 1000).execution(Execution::Sequential),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_agent_promoted_with_certainty() {
    let mut s = PopulationSnapshot::zeros(0);
    s.set(Counsel, AtomicSegment::MINORITY_FEMALE, 1.0).unwrap();
    let mut r = FlowRates::zero();
    r.set(
        Counsel,
        AtomicSegment::MINORITY_FEMALE,
        FlowKind::Promotion(EquityPartner),
        1.0,
    )
    .unwrap();
    let est = simulate_agents(&s, &r, &AgentOptions::new(1, 10)).unwrap();
    assert_eq!(est.mean(EquityPartner, AtomicSegment::MINORITY_FEMALE), 1.0);
    assert_eq!(est.mean(Counsel, AtomicSegment::MINORITY_FEMALE), 0.0);
}

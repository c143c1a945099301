use mansfield_core::domain::{
    AtomicSegment, Band, FirmSizeBand, JobLevel, PopulationSnapshot, Segment,
};
use mansfield_core::equilibrium::{available, demand};
use mansfield_core::ingest::calibrate::apportion;
use mansfield_core::ingest::{
    build_fixture_rates, fixture, parse, parse_pool_policy, parse_scenario, serialize,
    CalibrationError, CalibrationTargets, CellTarget, DatasetFile, Metadata, PublishedColumn,
    HEADER,
};
use mansfield_core::synth;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use JobLevel::*;

fn random_dataset(seed: u64, with_flows: bool) -> DatasetFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rng.random_range(10.0..1e6);
    let mut population = synth::population(&mut rng, total, 0.2);
    // exercise non-integer headcounts too
    population
        .set(
            Counsel,
            AtomicSegment::WHITE_MALE,
            rng.random_range(0.0..1e4),
        )
        .unwrap();
    let flows = with_flows.then(|| synth::rates(&mut rng, &population));
    DatasetFile {
        metadata: Metadata {
            source: format!("synthetic {seed}"),
            year: rng.random_range(1990..2100),
            cohort: FirmSizeBand {
                band: Band::ALL[rng.random_range(0..3)],
                firm_count: rng.random_range(1..500),
            },
        },
        population: population.with_t(0),
        flows,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_parse_round_trip(seed in any::<u64>(), with_flows in any::<bool>()) {
        let original = random_dataset(seed, with_flows);
        let text = serialize(&original);
        let parsed = parse(text.as_bytes()).unwrap();
        prop_assert_eq!(&parsed.metadata, &original.metadata);
        prop_assert_eq!(parsed.population.grid(), original.population.grid());
        prop_assert_eq!(parsed.population.t(), original.metadata.year);
        prop_assert_eq!(&parsed.flows, &original.flows);
        prop_assert_eq!(serialize(&parsed), text);
    }

    #[test]
    fn parse_never_panics_on_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let _ = parse(&bytes);
        let _ = parse_scenario(&bytes);
        let _ = parse_pool_policy(&bytes);
    }

    #[test]
    fn parse_never_panics_on_mutated_fixture(line in 0usize..120, field in 0usize..6, junk in "[-a-z0-9:.,*#e+ ]{0,12}") {
        let text = fixture::bundled_text(Band::B501To750);
        let mutated: String = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                if i == line {
                    let mut parts: Vec<String> = l.split(',').map(str::to_string).collect();
                    let k = field % parts.len();
                    parts[k] = junk.clone();
                    parts.join(",")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        if let Err(errs) = parse(mutated.as_bytes()) {
            prop_assert!(!errs.0.is_empty());
        }
    }

    #[test]
    fn calibration_reproduces_random_targets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut targets = CalibrationTargets::default();
        for level in JobLevel::LEADERSHIP {
            for seg in AtomicSegment::ALL {
                let demand = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..5000.0) };
                let available = rng.random_range(-500.0..5000.0);
                targets.set(level, seg, CellTarget { demand, available });
            }
        }
        let rates = build_fixture_rates(&targets).unwrap();
        rates.validate().unwrap();
        for level in JobLevel::LEADERSHIP {
            for seg in AtomicSegment::ALL {
                let t = targets.get(level, seg);
                let d = demand(level, &rates, Segment::Atomic(seg)).unwrap();
                let a = available(level, &rates, Segment::Atomic(seg)).unwrap();
                prop_assert!((d - t.demand).abs() <= 1e-9 * t.demand.abs().max(1.0));
                prop_assert!((a - t.available).abs() <= 1e-9 * t.available.abs().max(1.0));
            }
        }
    }

    #[test]
    fn apportion_preserves_total(total in 0.0f64..1e6, w in proptest::collection::vec(0.0f64..1e5, 1..6)) {
        let parts = apportion(total, &w);
        let sum: f64 = parts.iter().sum();
        prop_assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
    }
}

#[test]
fn fixtures_validate_and_carry_flows() {
    for band in Band::ALL {
        let d = fixture::bundled(band);
        assert_eq!(d.band(), band);
        assert!(d.flows.is_some());
        d.flows.unwrap().validate().unwrap();
    }
}

#[test]
fn printed_inconsistent_subtotals_are_rejected() {
    // equity-partner demand as printed for 251-500 disagrees with the partner subtotal
    let col =
        PublishedColumn::new(1072.0, 1477.0, 1848.0).with_subtotals(Some(3324.0), Some(4396.0));
    let mut published = fixture::inputs(Band::B251To500).published;
    published.demand = col;
    let problems = published.inconsistencies();
    assert_eq!(
        problems,
        vec!["demand: partner 3324 != non-equity + equity 3325".to_string()]
    );
    let pop = fixture::population(&fixture::inputs(Band::B251To500));
    assert!(matches!(
        published.split(&pop),
        Err(CalibrationError::Inconsistent(_))
    ));

    let mut published = fixture::inputs(Band::B501To750).published;
    published.available_minority.total = Some(443.0);
    assert_eq!(published.inconsistencies().len(), 1);
}

fn pct(part: f64, whole: f64) -> i64 {
    (100.0 * part / whole).round() as i64
}

struct Row {
    levels: &'static [JobLevel],
    share: Option<i64>,
    female: i64,
    minority: i64,
}

const ASSOC: &[JobLevel] = &[JuniorAssociate, MidAssociate, SeniorAssociate];
const COUNSEL: &[JobLevel] = &[Counsel];
const PARTNER: &[JobLevel] = &[NonEquityPartner, EquityPartner];
const NE: &[JobLevel] = &[NonEquityPartner];
const EQ: &[JobLevel] = &[EquityPartner];
const LEAD: &[JobLevel] = &[Counsel, NonEquityPartner, EquityPartner];
const ALL: &[JobLevel] = &JobLevel::ALL;

fn row(levels: &'static [JobLevel], share: Option<i64>, female: i64, minority: i64) -> Row {
    Row {
        levels,
        share,
        female,
        minority,
    }
}

fn check_demographics(pop: &PopulationSnapshot, total: f64, rows: &[Row]) {
    assert_eq!(pop.total(), total);
    for r in rows {
        let n = pop.aggregate(r.levels, Segment::All).unwrap();
        if let Some(s) = r.share {
            assert_eq!(pct(n, total), s, "{:?} share", r.levels);
        }
        assert_eq!(
            pct(pop.aggregate(r.levels, Segment::Female).unwrap(), n),
            r.female,
            "{:?} female",
            r.levels
        );
        assert_eq!(
            pct(pop.aggregate(r.levels, Segment::MinorityAll).unwrap(), n),
            r.minority,
            "{:?} minority",
            r.levels
        );
    }
}

#[test]
fn demographic_repartition_matches_published_percentages() {
    let big = fixture::bundled(Band::B751Plus).population;
    check_demographics(
        &big,
        154687.0,
        &[
            row(ALL, None, 37, 19),
            row(ASSOC, Some(48), 47, 27),
            row(COUNSEL, Some(13), 40, 14),
            row(PARTNER, Some(40), 24, 11),
            row(NE, Some(9), 31, 12),
            row(EQ, Some(31), 22, 10),
            row(LEAD, Some(52), 28, 12),
        ],
    );
    let mid = fixture::bundled(Band::B501To750).population;
    check_demographics(
        &mid,
        37721.0,
        &[
            row(ALL, None, 37, 18),
            row(ASSOC, Some(47), 47, 26),
            row(COUNSEL, Some(14), 43, 14),
            row(PARTNER, Some(39), 24, 9),
            row(NE, Some(10), 30, 11),
            row(EQ, Some(29), 22, 9),
            row(LEAD, Some(53), 29, 11),
        ],
    );
    let small = fixture::bundled(Band::B251To500).population;
    check_demographics(
        &small,
        56220.0,
        &[
            row(ALL, None, 34, 14),
            row(ASSOC, Some(37), 45, 21),
            row(COUNSEL, Some(14), 38, 12),
            row(PARTNER, Some(49), 24, 9),
            row(NE, Some(18), 30, 11),
            row(EQ, Some(31), 21, 8),
            row(LEAD, Some(63), 27, 9),
        ],
    );
    let all = fixture::combined_population();
    check_demographics(
        &all,
        248628.0,
        &[
            row(ALL, None, 37, 18),
            row(ASSOC, Some(45), 47, 26),
            row(COUNSEL, Some(13), 40, 14),
            row(PARTNER, Some(42), 24, 10),
            row(NE, Some(11), 30, 12),
            row(EQ, Some(31), 22, 10),
            row(LEAD, Some(55), 28, 11),
        ],
    );
    assert_eq!(all.aggregate(ASSOC, Segment::All).unwrap(), 112089.0);
    assert_eq!(all.aggregate(COUNSEL, Segment::All).unwrap(), 33063.0);
    assert_eq!(all.aggregate(PARTNER, Segment::All).unwrap(), 103476.0);
    assert_eq!(all.aggregate(LEAD, Segment::All).unwrap(), 136539.0);
    let female = all.share(ALL, Segment::Female, ALL, Segment::All).unwrap();
    assert!((female - 0.3656).abs() < 5e-5, "{female}");
}

#[test]
fn header_constant_is_the_documented_one() {
    assert_eq!(HEADER, "record,level,gender,race,kind,value");
}

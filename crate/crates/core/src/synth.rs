//! Random but valid populations and flow tables, for property tests and
//! benchmarks.

use rand::Rng;

use crate::domain::{AtomicSegment, JobLevel, PopulationSnapshot};
use crate::flows::{FlowKind, FlowRates};

/// Headcounts summing to roughly `total`, with a fraction `empty` of cells
/// left at zero. Counts are integers.
pub fn population<R: Rng + ?Sized>(rng: &mut R, total: f64, empty: f64) -> PopulationSnapshot {
    let mut weights = [[0.0; 4]; 6];
    let mut sum = 0.0;
    for row in weights.iter_mut() {
        for w in row.iter_mut() {
            if !rng.random_bool(empty.clamp(0.0, 1.0)) {
                *w = rng.random_range(0.05..1.0);
                sum += *w;
            }
        }
    }
    let mut snap = PopulationSnapshot::zeros(0);
    if sum == 0.0 {
        return snap;
    }
    for level in JobLevel::ALL {
        for seg in AtomicSegment::ALL {
            let w = weights[level.index()][seg.index()];
            snap.set(level, seg, (total * w / sum).round())
                .expect("non-negative");
        }
    }
    snap
}

/// Flows whose combined outflow from every cell stays below its headcount,
/// so a deterministic step never goes negative.
pub fn rates<R: Rng + ?Sized>(rng: &mut R, snapshot: &PopulationSnapshot) -> FlowRates {
    let mut rates = FlowRates::zero();
    for level in JobLevel::ALL {
        for seg in AtomicSegment::ALL {
            let n = snapshot.count(level, seg);
            let mut set = |kind: FlowKind, v: f64| {
                rates
                    .set(level, seg, kind, v)
                    .expect("generated flow is valid")
            };
            set(
                FlowKind::Lateral,
                rng.random_range(0.0..0.1) * n + rng.random_range(0.0..5.0),
            );
            if level.is_leadership() {
                set(FlowKind::Attrition, rng.random_range(0.0..0.15) * n);
                set(FlowKind::Retirement, rng.random_range(0.0..0.05) * n);
            } else {
                set(FlowKind::Attrition, rng.random_range(0.0..0.2) * n);
                set(FlowKind::Retention, rng.random_range(0.7..=1.0));
            }
            match level {
                JobLevel::JuniorAssociate | JobLevel::MidAssociate => {
                    set(FlowKind::PromotionRate, rng.random_range(0.0..0.4));
                }
                JobLevel::SeniorAssociate => {
                    set(FlowKind::Reo, rng.random_range(0.0..0.05) * n);
                }
                _ => {}
            }
            for dest in JobLevel::LEADERSHIP {
                if level.may_promote_to(dest) {
                    set(FlowKind::Promotion(dest), rng.random_range(0.0..0.1) * n);
                }
            }
        }
    }
    rates
}

//! Turns published demand/availability aggregates into a concrete flow table.
//!
//! Published tables give only sums per level group; the flows behind them are
//! not unique. The choices here (a 60% internal share of openings, 30% of
//! available leaders moving upward) are one consistent reading, and the
//! resulting table reproduces every target exactly up to 1/64 quantisation of
//! the intermediate splits.

use thiserror::Error;

use crate::domain::{AtomicSegment, JobLevel, PopulationSnapshot};
use crate::flows::{FlowError, FlowKind, FlowRates};

const QUANTUM: f64 = 64.0;
const INTERNAL_SHARE: f64 = 0.6;
const UPWARD_SHARE: f64 = 0.3;
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("published targets are inconsistent: {}", .0.join("; "))]
    Inconsistent(Vec<String>),
    #[error("demand for {level}/{segment} is negative ({value})")]
    NegativeDemand {
        level: JobLevel,
        segment: AtomicSegment,
        value: f64,
    },
    #[error("target for {level}/{segment} is not finite")]
    NotFinite {
        level: JobLevel,
        segment: AtomicSegment,
    },
    #[error("{level}/{segment} would need a promotion rate of {value}")]
    PromotionRate {
        level: JobLevel,
        segment: AtomicSegment,
        value: f64,
    },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn q(x: f64) -> f64 {
    (x * QUANTUM).round() / QUANTUM
}

/// Demand (Y+) and availability (Y-) for one leadership cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellTarget {
    pub demand: f64,
    pub available: f64,
}

/// Per-cell targets for counsel, non-equity and equity partners.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationTargets {
    pub cells: [[CellTarget; 4]; 3],
}

impl CalibrationTargets {
    pub fn get(&self, level: JobLevel, segment: AtomicSegment) -> CellTarget {
        self.cells[level.index() - 3][segment.index()]
    }

    pub fn set(&mut self, level: JobLevel, segment: AtomicSegment, target: CellTarget) {
        self.cells[level.index() - 3][segment.index()] = target;
    }
}

/// One published row: the three leadership levels plus the printed
/// Partner (NE + E) and Total subtotals when the source reports them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedColumn {
    pub counsel: f64,
    pub non_equity: f64,
    pub equity: f64,
    pub partner: Option<f64>,
    pub total: Option<f64>,
}

impl PublishedColumn {
    pub fn new(counsel: f64, non_equity: f64, equity: f64) -> Self {
        PublishedColumn {
            counsel,
            non_equity,
            equity,
            partner: None,
            total: None,
        }
    }

    pub fn with_subtotals(mut self, partner: Option<f64>, total: Option<f64>) -> Self {
        self.partner = partner;
        self.total = total;
        self
    }

    pub fn level(&self, level: JobLevel) -> f64 {
        match level {
            JobLevel::Counsel => self.counsel,
            JobLevel::NonEquityPartner => self.non_equity,
            JobLevel::EquityPartner => self.equity,
            _ => 0.0,
        }
    }

    fn check(&self, name: &str, out: &mut Vec<String>) {
        let partner = self.non_equity + self.equity;
        if let Some(p) = self.partner {
            if (p - partner).abs() > SUM_TOLERANCE {
                out.push(format!(
                    "{name}: partner {p} != non-equity + equity {partner}"
                ));
            }
        }
        if let Some(t) = self.total {
            let sum = self.counsel + self.partner.unwrap_or(partner);
            if (t - sum).abs() > SUM_TOLERANCE {
                out.push(format!("{name}: total {t} != counsel + partner {sum}"));
            }
        }
        for (label, v) in [
            ("counsel", self.counsel),
            ("non-equity", self.non_equity),
            ("equity", self.equity),
        ] {
            if !v.is_finite() {
                out.push(format!("{name}: {label} is not finite"));
            }
        }
    }
}

/// Published per-band aggregates: overall demand and availability for the
/// overall, white-female and minority views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedTargets {
    pub demand: PublishedColumn,
    pub available: PublishedColumn,
    pub available_white_female: PublishedColumn,
    pub available_minority: PublishedColumn,
}

impl PublishedTargets {
    /// Every printed subtotal that disagrees with its parts.
    pub fn inconsistencies(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.demand.check("demand", &mut out);
        self.available.check("available", &mut out);
        self.available_white_female
            .check("white-female available", &mut out);
        self.available_minority
            .check("minority available", &mut out);
        for level in JobLevel::LEADERSHIP {
            let d = self.demand.level(level);
            if d < 0.0 {
                out.push(format!("demand for {level} is negative ({d})"));
            }
        }
        out
    }

    /// Spreads the published rows over atomic cells. Demand and minority
    /// availability follow each cell's share of the level population;
    /// white-female availability is taken as printed and white-male
    /// availability absorbs the remainder.
    pub fn split(
        &self,
        population: &PopulationSnapshot,
    ) -> Result<CalibrationTargets, CalibrationError> {
        let problems = self.inconsistencies();
        if !problems.is_empty() {
            return Err(CalibrationError::Inconsistent(problems));
        }
        let mut targets = CalibrationTargets::default();
        for level in JobLevel::LEADERSHIP {
            let weights = AtomicSegment::ALL.map(|s| population.count(level, s));
            let demand = apportion(self.demand.level(level), &weights);
            let minority = apportion(
                self.available_minority.level(level),
                &[
                    weights[AtomicSegment::MINORITY_FEMALE.index()],
                    weights[AtomicSegment::MINORITY_MALE.index()],
                ],
            );
            let wf = self.available_white_female.level(level);
            let wm = self.available.level(level) - wf - self.available_minority.level(level);
            let available = [wf, wm, minority[0], minority[1]];
            for seg in AtomicSegment::ALL {
                targets.set(
                    level,
                    seg,
                    CellTarget {
                        demand: demand[seg.index()],
                        available: available[seg.index()],
                    },
                );
            }
        }
        Ok(targets)
    }
}

/// Splits `total` in proportion to `weights`; the heaviest weight takes the
/// remainder so the parts sum back to `total`.
pub fn apportion(total: f64, weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    let n = weights.len();
    let share = |w: f64| if sum > 0.0 { w / sum } else { 1.0 / n as f64 };
    let heaviest = weights
        .iter()
        .enumerate()
        .fold(0, |best, (i, w)| if *w > weights[best] { i } else { best });
    let mut parts: Vec<f64> = weights.iter().map(|w| q(total * share(*w))).collect();
    let others: f64 = parts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != heaviest)
        .map(|(_, v)| v)
        .sum();
    parts[heaviest] = total - others;
    parts
}

/// Builds leadership flows whose demand and availability equal `targets`.
///
/// Per segment: negative availability becomes retirement; otherwise 30% of
/// the available counsel and non-equity partners move up (capped by the
/// receiving level's demand) and the rest leave as attrition. At least 60%
/// of each level's demand is filled internally, senior associates covering
/// what upward moves do not, and laterals fill the rest.
pub fn build_fixture_rates(targets: &CalibrationTargets) -> Result<FlowRates, CalibrationError> {
    let mut rates = FlowRates::zero();
    for seg in AtomicSegment::ALL {
        for level in JobLevel::LEADERSHIP {
            let t = targets.get(level, seg);
            if !t.demand.is_finite() || !t.available.is_finite() {
                return Err(CalibrationError::NotFinite {
                    level,
                    segment: seg,
                });
            }
            if t.demand < 0.0 {
                return Err(CalibrationError::NegativeDemand {
                    level,
                    segment: seg,
                    value: t.demand,
                });
            }
        }
        let c = targets.get(JobLevel::Counsel, seg);
        let ne = targets.get(JobLevel::NonEquityPartner, seg);
        let eq = targets.get(JobLevel::EquityPartner, seg);
        let upward = |a: f64| {
            if a > 0.0 {
                q(UPWARD_SHARE * a).min(a)
            } else {
                0.0
            }
        };

        let ne_to_eq = upward(ne.available).min(eq.demand);
        let cap_ne = ne.demand;
        let cap_eq = eq.demand - ne_to_eq;
        let c_out = upward(c.available).min(cap_ne + cap_eq);
        let c_to_ne = if c_out > 0.0 {
            let hi = cap_ne.min(c_out);
            q(c_out * cap_ne / (cap_ne + cap_eq))
                .max(c_out - cap_eq)
                .min(hi)
                .max(0.0)
        } else {
            0.0
        };
        let c_to_eq = c_out - c_to_ne;

        rates.set(
            JobLevel::Counsel,
            seg,
            FlowKind::Promotion(JobLevel::NonEquityPartner),
            c_to_ne,
        )?;
        rates.set(
            JobLevel::Counsel,
            seg,
            FlowKind::Promotion(JobLevel::EquityPartner),
            c_to_eq,
        )?;
        rates.set(
            JobLevel::NonEquityPartner,
            seg,
            FlowKind::Promotion(JobLevel::EquityPartner),
            ne_to_eq,
        )?;

        for (level, target, internal, out) in [
            (JobLevel::Counsel, c, 0.0, c_out),
            (JobLevel::NonEquityPartner, ne, c_to_ne, ne_to_eq),
            (JobLevel::EquityPartner, eq, c_to_eq + ne_to_eq, 0.0),
        ] {
            let filled = q(INTERNAL_SHARE * target.demand)
                .max(internal)
                .min(target.demand);
            let from_associates = (filled - internal).max(0.0);
            rates.set(
                JobLevel::SeniorAssociate,
                seg,
                FlowKind::Promotion(level),
                from_associates,
            )?;
            rates.set(level, seg, FlowKind::Lateral, target.demand - filled)?;
            if target.available < 0.0 {
                rates.set(level, seg, FlowKind::Retirement, -target.available)?;
            } else {
                rates.set(level, seg, FlowKind::Attrition, target.available - out)?;
            }
        }
    }
    Ok(rates)
}

/// Attrition shares for junior, mid and senior associates in the bundled
/// fixtures.
pub const ASSOCIATE_ATTRITION: [f64; 3] = [0.15, 0.12, 0.10];

/// Associate flows that hold each associate level at steady state given the
/// senior-associate promotions already in `rates`: mid and junior promotion
/// rates replace the level above, and junior laterals replace the juniors.
pub fn add_associate_flows(
    rates: &mut FlowRates,
    population: &PopulationSnapshot,
) -> Result<(), CalibrationError> {
    for seg in AtomicSegment::ALL {
        let [aj, am, as_] = JobLevel::ASSOCIATES.map(|l| population.count(l, seg));
        let att = [
            q(ASSOCIATE_ATTRITION[0] * aj),
            q(ASSOCIATE_ATTRITION[1] * am),
            q(ASSOCIATE_ATTRITION[2] * as_),
        ];
        for (i, level) in JobLevel::ASSOCIATES.into_iter().enumerate() {
            rates.set(level, seg, FlowKind::Attrition, att[i])?;
            rates.set(
                level,
                seg,
                FlowKind::Retention,
                1.0 - ASSOCIATE_ATTRITION[i],
            )?;
        }
        let senior_out = att[2] + rates.promotion_out(JobLevel::SeniorAssociate, seg);
        let p_mid = rate(
            senior_out,
            (1.0 - ASSOCIATE_ATTRITION[1]) * am,
            JobLevel::MidAssociate,
            seg,
        )?;
        let mid_out = att[1] + p_mid * (1.0 - ASSOCIATE_ATTRITION[1]) * am;
        let p_junior = rate(
            mid_out,
            (1.0 - ASSOCIATE_ATTRITION[0]) * aj,
            JobLevel::JuniorAssociate,
            seg,
        )?;
        let junior_out = att[0] + p_junior * (1.0 - ASSOCIATE_ATTRITION[0]) * aj;
        rates.set(JobLevel::MidAssociate, seg, FlowKind::PromotionRate, p_mid)?;
        rates.set(
            JobLevel::JuniorAssociate,
            seg,
            FlowKind::PromotionRate,
            p_junior,
        )?;
        rates.set(
            JobLevel::JuniorAssociate,
            seg,
            FlowKind::Lateral,
            q(junior_out),
        )?;
    }
    Ok(())
}

fn rate(
    needed: f64,
    base: f64,
    level: JobLevel,
    segment: AtomicSegment,
) -> Result<f64, CalibrationError> {
    let p = if base > 0.0 {
        needed / base
    } else if needed > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if p > 1.0 {
        return Err(CalibrationError::PromotionRate {
            level,
            segment,
            value: p,
        });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Segment;
    use crate::equilibrium::{available, demand};

    fn targets(values: [[(f64, f64); 4]; 3]) -> CalibrationTargets {
        let mut t = CalibrationTargets::default();
        for (li, row) in values.iter().enumerate() {
            for (si, (d, a)) in row.iter().enumerate() {
                t.cells[li][si] = CellTarget {
                    demand: *d,
                    available: *a,
                };
            }
        }
        t
    }

    #[test]
    fn reproduces_targets() {
        let t = targets([
            [(100.0, 80.0), (300.0, 250.5), (20.0, 3.0), (0.0, 0.0)],
            [(50.0, -10.0), (90.0, 120.0), (7.0, 9.0), (1.0, 0.0)],
            [(200.0, 300.0), (10.0, 0.0), (0.0, 12.0), (3.0, 4.0)],
        ]);
        let r = build_fixture_rates(&t).unwrap();
        r.validate().unwrap();
        for level in JobLevel::LEADERSHIP {
            for seg in AtomicSegment::ALL {
                let target = t.get(level, seg);
                let seg_view = Segment::Atomic(seg);
                assert!(
                    (demand(level, &r, seg_view).unwrap() - target.demand).abs() < 1e-9,
                    "{level} {seg}"
                );
                assert!(
                    (available(level, &r, seg_view).unwrap() - target.available).abs() < 1e-9,
                    "{level} {seg}"
                );
            }
        }
    }

    #[test]
    fn inconsistent_sums_are_listed() {
        let p = PublishedTargets {
            demand: PublishedColumn::new(1.0, 2.0, 3.0).with_subtotals(Some(5.0), Some(7.0)),
            available: PublishedColumn::new(1.0, 2.0, 3.0).with_subtotals(Some(6.0), Some(9.0)),
            available_white_female: PublishedColumn::new(0.0, 0.0, 0.0),
            available_minority: PublishedColumn::new(0.0, 0.0, 0.0),
        };
        let problems = p.inconsistencies();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(matches!(
            p.split(&PopulationSnapshot::zeros(0)),
            Err(CalibrationError::Inconsistent(_))
        ));
    }

    #[test]
    fn negative_demand_rejected() {
        let mut t = CalibrationTargets::default();
        t.set(
            JobLevel::Counsel,
            AtomicSegment::WHITE_MALE,
            CellTarget {
                demand: -1.0,
                available: 0.0,
            },
        );
        assert!(matches!(
            build_fixture_rates(&t),
            Err(CalibrationError::NegativeDemand { .. })
        ));
    }

    #[test]
    fn apportion_sums_back() {
        let parts = apportion(2623.0, &[5000.0, 12000.0, 900.0, 1735.0]);
        assert_eq!(parts.iter().sum::<f64>(), 2623.0);
        assert_eq!(apportion(3.0, &[0.0, 0.0, 0.0]), vec![1.0, 1.0, 1.0]);
    }
}

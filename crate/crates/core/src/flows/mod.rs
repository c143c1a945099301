//! Flow quantities and the one-year population recurrences.
//!
//! Headcount flows (lateral hires, attrition, retirement, Reo and promotion
//! classes) are absolute annual counts per (level, atomic segment).
//! Retention and the associate promotion rate are fractions. All four
//! recurrences are evaluated from the time-`t` state only.

pub mod agents;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{AtomicSegment, DomainError, JobLevel, PopulationSnapshot};

pub use agents::{simulate_agent_years, simulate_agents, AgentEstimate, AgentOptions, Sampling};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid {kind} flow for {level}/{segment}: {value} ({reason})")]
    Invalid {
        level: JobLevel,
        segment: AtomicSegment,
        kind: FlowKind,
        value: f64,
        reason: &'static str,
    },
    #[error("infeasible flows: {level}/{segment} would end at {value} (short by {shortfall})")]
    Infeasible {
        level: JobLevel,
        segment: AtomicSegment,
        value: f64,
        shortfall: f64,
    },
    #[error(
        "infeasible probabilities for {level}/{segment}: outflows sum to {total} of the population"
    )]
    InfeasibleProbability {
        level: JobLevel,
        segment: AtomicSegment,
        total: f64,
    },
    #[error("agent simulation does not support the all-lower-levels associate reading")]
    UnsupportedConfig,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowKind {
    Lateral,
    Attrition,
    Retirement,
    Retention,
    Reo,
    Promotion(JobLevel),
    PromotionRate,
}

impl FlowKind {
    /// Fractions rather than headcounts; these are not scaled with populations.
    pub fn is_fraction(self) -> bool {
        matches!(self, FlowKind::Retention | FlowKind::PromotionRate)
    }

    pub fn token(self) -> String {
        match self {
            FlowKind::Lateral => "lateral".into(),
            FlowKind::Attrition => "attrition".into(),
            FlowKind::Retirement => "retirement".into(),
            FlowKind::Retention => "retention".into(),
            FlowKind::Reo => "reo".into(),
            FlowKind::Promotion(dest) => format!("promotion:{}", dest.token()),
            FlowKind::PromotionRate => "promotion-rate".into(),
        }
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown flow kind `{0}`")]
pub struct UnknownFlowKind(pub String);

impl FromStr for FlowKind {
    type Err = UnknownFlowKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "lateral" => FlowKind::Lateral,
            "attrition" => FlowKind::Attrition,
            "retirement" => FlowKind::Retirement,
            "retention" => FlowKind::Retention,
            "reo" => FlowKind::Reo,
            "promotion-rate" => FlowKind::PromotionRate,
            other => match other.strip_prefix("promotion:") {
                Some(dest) => {
                    FlowKind::Promotion(dest.parse().map_err(|_| UnknownFlowKind(s.to_string()))?)
                }
                None => return Err(UnknownFlowKind(s.to_string())),
            },
        };
        Ok(kind)
    }
}

/// Flows attached to one (level, atomic segment) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFlows {
    pub lateral_in: f64,
    pub retirement: f64,
    pub retention: f64,
    pub attrition: f64,
    pub reo: f64,
    /// Headcount promoted out of this cell, indexed by destination level.
    pub promotion: [f64; 6],
    pub promotion_rate: f64,
}

impl Default for CellFlows {
    fn default() -> Self {
        CellFlows {
            lateral_in: 0.0,
            retirement: 0.0,
            retention: 1.0,
            attrition: 0.0,
            reo: 0.0,
            promotion: [0.0; 6],
            promotion_rate: 0.0,
        }
    }
}

impl CellFlows {
    pub fn get(&self, kind: FlowKind) -> f64 {
        match kind {
            FlowKind::Lateral => self.lateral_in,
            FlowKind::Attrition => self.attrition,
            FlowKind::Retirement => self.retirement,
            FlowKind::Retention => self.retention,
            FlowKind::Reo => self.reo,
            FlowKind::Promotion(dest) => self.promotion[dest.index()],
            FlowKind::PromotionRate => self.promotion_rate,
        }
    }

    fn slot(&mut self, kind: FlowKind) -> &mut f64 {
        match kind {
            FlowKind::Lateral => &mut self.lateral_in,
            FlowKind::Attrition => &mut self.attrition,
            FlowKind::Retirement => &mut self.retirement,
            FlowKind::Retention => &mut self.retention,
            FlowKind::Reo => &mut self.reo,
            FlowKind::Promotion(dest) => &mut self.promotion[dest.index()],
            FlowKind::PromotionRate => &mut self.promotion_rate,
        }
    }

    pub fn promotion_out(&self) -> f64 {
        self.promotion.iter().sum()
    }

    /// Every kind that currently differs from the default, in a fixed order.
    pub fn non_default(&self) -> Vec<(FlowKind, f64)> {
        let d = CellFlows::default();
        all_kinds()
            .filter(|k| self.get(*k) != d.get(*k))
            .map(|k| (k, self.get(k)))
            .collect()
    }
}

/// Every flow kind, promotions in destination order.
pub fn all_kinds() -> impl Iterator<Item = FlowKind> {
    [
        FlowKind::Lateral,
        FlowKind::Attrition,
        FlowKind::Retirement,
        FlowKind::Retention,
        FlowKind::Reo,
        FlowKind::PromotionRate,
    ]
    .into_iter()
    .chain(JobLevel::ALL.into_iter().map(FlowKind::Promotion))
}

fn check(
    level: JobLevel,
    segment: AtomicSegment,
    kind: FlowKind,
    value: f64,
) -> Result<(), FlowError> {
    let invalid = |reason| FlowError::Invalid {
        level,
        segment,
        kind,
        value,
        reason,
    };
    if !value.is_finite() {
        return Err(invalid("not finite"));
    }
    if value < 0.0 {
        return Err(invalid("must be non-negative"));
    }
    if kind.is_fraction() && value > 1.0 {
        return Err(invalid("fraction must lie in [0, 1]"));
    }
    match kind {
        FlowKind::Reo if value != 0.0 && level != JobLevel::SeniorAssociate => {
            Err(invalid("reo is only defined for senior associates"))
        }
        FlowKind::Retirement if value != 0.0 && !level.is_leadership() => {
            Err(invalid("retirement is only defined for leadership levels"))
        }
        FlowKind::Promotion(dest) if value != 0.0 && !level.may_promote_to(dest) => Err(invalid(
            "promotion must target a strictly higher leadership level",
        )),
        FlowKind::PromotionRate
            if value != 0.0
                && !matches!(level, JobLevel::JuniorAssociate | JobLevel::MidAssociate) =>
        {
            Err(invalid(
                "promotion rate applies to junior and mid associates only",
            ))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRates {
    cells: [[CellFlows; 4]; 6],
}

impl Default for FlowRates {
    fn default() -> Self {
        Self::zero()
    }
}

impl FlowRates {
    pub fn zero() -> Self {
        FlowRates {
            cells: std::array::from_fn(|_| std::array::from_fn(|_| CellFlows::default())),
        }
    }

    pub fn cell(&self, level: JobLevel, segment: AtomicSegment) -> &CellFlows {
        &self.cells[level.index()][segment.index()]
    }

    pub fn get(&self, level: JobLevel, segment: AtomicSegment, kind: FlowKind) -> f64 {
        self.cell(level, segment).get(kind)
    }

    pub fn set(
        &mut self,
        level: JobLevel,
        segment: AtomicSegment,
        kind: FlowKind,
        value: f64,
    ) -> Result<(), FlowError> {
        check(level, segment, kind, value)?;
        *self.cells[level.index()][segment.index()].slot(kind) = value;
        Ok(())
    }

    /// Adds to a headcount flow; used by builders that accumulate terms.
    pub fn add(
        &mut self,
        level: JobLevel,
        segment: AtomicSegment,
        kind: FlowKind,
        delta: f64,
    ) -> Result<(), FlowError> {
        let v = self.get(level, segment, kind) + delta;
        self.set(level, segment, kind, v)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let cell = self.cell(level, seg);
                for kind in all_kinds() {
                    check(level, seg, kind, cell.get(kind))?;
                }
            }
        }
        Ok(())
    }

    /// Headcount promoted into `level` from every lower level.
    pub fn promotion_in(&self, level: JobLevel, segment: AtomicSegment) -> f64 {
        JobLevel::ALL
            .into_iter()
            .filter(|src| *src < level)
            .map(|src| self.cell(src, segment).promotion[level.index()])
            .sum()
    }

    pub fn promotion_out(&self, level: JobLevel, segment: AtomicSegment) -> f64 {
        self.cell(level, segment).promotion_out()
    }

    /// Applies `f(level, segment, kind, value)` to every headcount flow.
    pub fn map_headcounts(
        &self,
        mut f: impl FnMut(JobLevel, AtomicSegment, FlowKind, f64) -> f64,
    ) -> FlowRates {
        let mut out = self.clone();
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let cell = &mut out.cells[level.index()][seg.index()];
                for kind in all_kinds().filter(|k| !k.is_fraction()) {
                    let slot = cell.slot(kind);
                    *slot = f(level, seg, kind, *slot);
                }
            }
        }
        out
    }

    /// Multiplies every headcount flow by `k`; fractions are untouched.
    pub fn scaled(&self, k: f64) -> FlowRates {
        self.map_headcounts(|_, _, _, v| v * k)
    }
}

/// How associate promotion inflow is read from the associate recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssociateInflow {
    /// Level x receives the promoted, retained population of level x-1.
    #[default]
    Adjacent,
    /// Level x receives the promoted, retained population of every lower
    /// associate level.
    AllLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepConfig {
    pub inflow: AssociateInflow,
    /// Promoted junior and mid associates leave their source level.
    pub promoted_leave_source: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            inflow: AssociateInflow::Adjacent,
            promoted_leave_source: true,
        }
    }
}

impl StepConfig {
    /// The associate recurrence with no outflow term for junior and mid
    /// promotions, exactly as typeset.
    pub const fn as_printed(inflow: AssociateInflow) -> Self {
        StepConfig {
            inflow,
            promoted_leave_source: false,
        }
    }
}

/// p_i * Ret(A(i)) * A(i): the retained associates of `level` promoted this year.
pub fn promoted_associates(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    level: JobLevel,
    segment: AtomicSegment,
) -> f64 {
    let cell = rates.cell(level, segment);
    cell.promotion_rate * cell.retention * snapshot.count(level, segment)
}

fn finish(level: JobLevel, segment: AtomicSegment, value: f64) -> Result<f64, FlowError> {
    // Tolerate round-off around zero; anything further below is infeasible.
    let tol = 1e-9;
    if value < -tol {
        return Err(FlowError::Infeasible {
            level,
            segment,
            value,
            shortfall: -value,
        });
    }
    Ok(value.max(0.0))
}

/// Associate headcounts at t+1, indexed `[junior, mid, senior][segment]`.
pub fn step_associates(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    config: StepConfig,
) -> Result<[[f64; 4]; 3], FlowError> {
    let mut out = [[0.0; 4]; 3];
    for seg in AtomicSegment::ALL {
        for (i, level) in JobLevel::ASSOCIATES.into_iter().enumerate() {
            let cell = rates.cell(level, seg);
            let inflow: f64 = match config.inflow {
                AssociateInflow::Adjacent => level
                    .previous_associate()
                    .map_or(0.0, |prev| promoted_associates(snapshot, rates, prev, seg)),
                AssociateInflow::AllLower => JobLevel::ASSOCIATES[..i]
                    .iter()
                    .map(|lower| promoted_associates(snapshot, rates, *lower, seg))
                    .sum(),
            };
            let outflow = if config.promoted_leave_source {
                let destinations = match config.inflow {
                    AssociateInflow::Adjacent => usize::from(level.next_associate().is_some()),
                    AssociateInflow::AllLower => JobLevel::ASSOCIATES.len() - 1 - i,
                };
                destinations as f64 * promoted_associates(snapshot, rates, level, seg)
            } else {
                0.0
            };
            let partner_class = if level == JobLevel::SeniorAssociate {
                cell.promotion_out()
            } else {
                0.0
            };
            let next = snapshot.count(level, seg) - cell.attrition + cell.lateral_in + inflow
                - outflow
                - partner_class;
            out[i][seg.index()] = finish(level, seg, next)?;
        }
    }
    Ok(out)
}

fn step_leadership(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    level: JobLevel,
) -> Result<[f64; 4], FlowError> {
    let mut out = [0.0; 4];
    for seg in AtomicSegment::ALL {
        let cell = rates.cell(level, seg);
        let next = snapshot.count(level, seg) + cell.lateral_in + rates.promotion_in(level, seg)
            - rates.promotion_out(level, seg)
            - cell.attrition
            - cell.retirement;
        out[seg.index()] = finish(level, seg, next)?;
    }
    Ok(out)
}

/// C(t+1) = C + Lat + P(C|A(s)) - P(Neq,Eq|C) - Att - R, per segment.
pub fn step_counsel(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
) -> Result<[f64; 4], FlowError> {
    step_leadership(snapshot, rates, JobLevel::Counsel)
}

/// Neq(t+1) = Neq + Lat + P(Neq|C,A(s)) - P(Eq|Neq) - Att - R, per segment.
pub fn step_nonequity(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
) -> Result<[f64; 4], FlowError> {
    step_leadership(snapshot, rates, JobLevel::NonEquityPartner)
}

/// Eq(t+1) = Eq + Lat + P(Eq|C,A(s),Neq) - Att - R, per segment.
pub fn step_equity(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
) -> Result<[f64; 4], FlowError> {
    step_leadership(snapshot, rates, JobLevel::EquityPartner)
}

/// Advances every level one year from the time-`t` state.
pub fn step(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    config: StepConfig,
) -> Result<PopulationSnapshot, FlowError> {
    let associates = step_associates(snapshot, rates, config)?;
    let counsel = step_counsel(snapshot, rates)?;
    let nonequity = step_nonequity(snapshot, rates)?;
    let equity = step_equity(snapshot, rates)?;
    let grid = [
        associates[0],
        associates[1],
        associates[2],
        counsel,
        nonequity,
        equity,
    ];
    Ok(PopulationSnapshot::from_grid(snapshot.t() + 1, grid)?)
}

/// Snapshots at t, t+1, ..., t+n together with the rates in force during
/// each year (the last entry holds the rates that would apply next).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<PopulationSnapshot>,
    rates: Vec<FlowRates>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<PopulationSnapshot>, rates: Vec<FlowRates>) -> Self {
        assert_eq!(snapshots.len(), rates.len(), "one rate set per snapshot");
        debug_assert!(snapshots.windows(2).all(|w| w[1].t() == w[0].t() + 1));
        Trajectory { snapshots, rates }
    }

    pub fn snapshots(&self) -> &[PopulationSnapshot] {
        &self.snapshots
    }

    pub fn rates(&self) -> &[FlowRates] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PopulationSnapshot, &FlowRates)> {
        self.snapshots.iter().zip(self.rates.iter())
    }
}

//! Demand, availability and the 30% gap metrics per leadership level.
//!
//! For a leadership level x and a segment view:
//!
//! * demand `Y+(x)` = promotions into x + lateral hires into x
//! * availability `Y-(x)` = attrition + promotions out of x - Reo - retirement
//! * fill capacity = `Y-^m / Y+^all`
//! * ratio `R30 = Y-^m / (0.3 * Y+^all) - 1`
//!
//! Partner and leadership columns sum the member levels' Y values before any
//! ratio is taken.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{Band, JobLevel, PopulationSnapshot, Segment};
use crate::flows::FlowRates;

/// Minimum diverse share of a candidate pool under the rule.
pub const MANSFIELD_SHARE: f64 = 0.3;

pub const DEFAULT_EPSILON: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("{0} is not a leadership level")]
    NotLeadership(JobLevel),
    #[error("undefined market: overall demand is {0}")]
    UndefinedMarket(f64),
    #[error("{group} has zero population; shares are undefined")]
    EmptyPopulation { group: LevelGroup },
    #[error("epsilon must be finite and non-negative, got {0}")]
    BadEpsilon(f64),
}

/// Column of the supply-chain tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelGroup {
    Counsel,
    Partner,
    NonEquityPartner,
    EquityPartner,
    Leadership,
}

impl LevelGroup {
    /// Table column order.
    pub const ALL: [LevelGroup; 5] = [
        LevelGroup::Counsel,
        LevelGroup::Partner,
        LevelGroup::NonEquityPartner,
        LevelGroup::EquityPartner,
        LevelGroup::Leadership,
    ];

    pub fn members(self) -> &'static [JobLevel] {
        match self {
            LevelGroup::Counsel => &[JobLevel::Counsel],
            LevelGroup::Partner => &[JobLevel::NonEquityPartner, JobLevel::EquityPartner],
            LevelGroup::NonEquityPartner => &[JobLevel::NonEquityPartner],
            LevelGroup::EquityPartner => &[JobLevel::EquityPartner],
            LevelGroup::Leadership => &JobLevel::LEADERSHIP,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LevelGroup::Counsel => "Counsel",
            LevelGroup::Partner => "Partner (NE+E)",
            LevelGroup::NonEquityPartner => "Non-equity partner (NE)",
            LevelGroup::EquityPartner => "Equity partner (E)",
            LevelGroup::Leadership => "Total",
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            LevelGroup::Counsel => "counsel",
            LevelGroup::Partner => "partner",
            LevelGroup::NonEquityPartner => "non_equity_partner",
            LevelGroup::EquityPartner => "equity_partner",
            LevelGroup::Leadership => "total",
        }
    }
}

impl fmt::Display for LevelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The three views the gap tables report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    Overall,
    WhiteFemale,
    MinorityAll,
}

impl View {
    pub const ALL: [View; 3] = [View::Overall, View::WhiteFemale, View::MinorityAll];
    pub const SUBGROUPS: [View; 2] = [View::WhiteFemale, View::MinorityAll];

    pub fn segment(self) -> Segment {
        match self {
            View::Overall => Segment::All,
            View::WhiteFemale => Segment::WhiteFemale,
            View::MinorityAll => Segment::MinorityAll,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            View::Overall => "overall",
            View::WhiteFemale => "white-female",
            View::MinorityAll => "minority",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            View::Overall => "Leadership",
            View::WhiteFemale => "White Caucasian female",
            View::MinorityAll => "Minorities (female & male)",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        View::ALL
            .into_iter()
            .find(|v| v.token() == s)
            .ok_or_else(|| {
                format!("unknown view `{s}` (expected overall, white-female or minority)")
            })
    }
}

fn require_leadership(level: JobLevel) -> Result<(), MarketError> {
    if level.is_leadership() {
        Ok(())
    } else {
        Err(MarketError::NotLeadership(level))
    }
}

/// `Y+(level)` restricted to `segment`.
pub fn demand(level: JobLevel, rates: &FlowRates, segment: Segment) -> Result<f64, MarketError> {
    require_leadership(level)?;
    Ok(segment
        .cells()
        .map(|seg| rates.promotion_in(level, seg) + rates.cell(level, seg).lateral_in)
        .sum())
}

/// `Y-(level)` restricted to `segment`. May be negative.
pub fn available(level: JobLevel, rates: &FlowRates, segment: Segment) -> Result<f64, MarketError> {
    require_leadership(level)?;
    Ok(segment
        .cells()
        .map(|seg| {
            let cell = rates.cell(level, seg);
            cell.attrition + cell.promotion_out() - cell.reo - cell.retirement
        })
        .sum())
}

pub fn group_demand(group: LevelGroup, rates: &FlowRates, segment: Segment) -> f64 {
    group
        .members()
        .iter()
        .map(|l| demand(*l, rates, segment).expect("group members are leadership levels"))
        .sum()
}

pub fn group_available(group: LevelGroup, rates: &FlowRates, segment: Segment) -> f64 {
    group
        .members()
        .iter()
        .map(|l| available(*l, rates, segment).expect("group members are leadership levels"))
        .sum()
}

fn require_market(demand_overall: f64) -> Result<(), MarketError> {
    if demand_overall > 0.0 && demand_overall.is_finite() {
        Ok(())
    } else {
        Err(MarketError::UndefinedMarket(demand_overall))
    }
}

/// `available_m / (0.3 * demand_overall) - 1`.
pub fn mansfield_ratio(available_m: f64, demand_overall: f64) -> Result<f64, MarketError> {
    require_market(demand_overall)?;
    Ok(available_m / (MANSFIELD_SHARE * demand_overall) - 1.0)
}

pub fn fill_capacity(available_m: f64, demand_overall: f64) -> Result<f64, MarketError> {
    require_market(demand_overall)?;
    Ok(available_m / demand_overall)
}

/// Points below the 30% threshold; negative means a surplus over it.
pub fn shortfall_to_30(fill: f64) -> f64 {
    MANSFIELD_SHARE - fill
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Equilibrium,
    Shortage,
    Surplus,
}

impl Classification {
    pub fn token(self) -> &'static str {
        match self {
            Classification::Equilibrium => "equilibrium",
            Classification::Shortage => "shortage",
            Classification::Surplus => "surplus",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

pub fn classify(r30: f64, epsilon: f64) -> Classification {
    if r30 < -epsilon {
        Classification::Shortage
    } else if r30 > epsilon {
        Classification::Surplus
    } else {
        Classification::Equilibrium
    }
}

/// Y+ and Y- for one level group, per view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandSupply {
    pub group: LevelGroup,
    pub demand: [f64; 3],
    pub available: [f64; 3],
}

impl DemandSupply {
    pub fn compute(group: LevelGroup, rates: &FlowRates) -> Self {
        DemandSupply {
            group,
            demand: View::ALL.map(|v| group_demand(group, rates, v.segment())),
            available: View::ALL.map(|v| group_available(group, rates, v.segment())),
        }
    }

    pub fn demand(&self, view: View) -> f64 {
        self.demand[view as usize]
    }

    pub fn available(&self, view: View) -> f64 {
        self.available[view as usize]
    }

    pub fn demand_overall(&self) -> f64 {
        self.demand(View::Overall)
    }

    pub fn thirty_percent_of_demand(&self) -> f64 {
        MANSFIELD_SHARE * self.demand_overall()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewGap {
    pub view: View,
    pub available: f64,
    /// Subgroup availability over overall availability.
    pub proportion_of_available: f64,
    pub fill_capacity: f64,
    pub short_to_30: f64,
    pub r30: f64,
    pub classification: Classification,
}

impl ViewGap {
    pub fn compute(
        supply: &DemandSupply,
        view: View,
        epsilon: f64,
    ) -> Result<ViewGap, MarketError> {
        let available = supply.available(view);
        let overall_available = supply.available(View::Overall);
        let fill = fill_capacity(available, supply.demand_overall())?;
        let r30 = mansfield_ratio(available, supply.demand_overall())?;
        Ok(ViewGap {
            view,
            available,
            proportion_of_available: if overall_available != 0.0 {
                available / overall_available
            } else {
                0.0
            },
            fill_capacity: fill,
            short_to_30: shortfall_to_30(fill),
            r30,
            classification: classify(r30, epsilon),
        })
    }
}

/// One column of a gap report.
#[derive(Debug, Clone, PartialEq)]
pub struct GapColumn {
    pub group: LevelGroup,
    pub population: f64,
    pub supply: DemandSupply,
    /// Indexed like [`View::ALL`].
    pub views: [ViewGap; 3],
}

impl GapColumn {
    pub fn view(&self, view: View) -> &ViewGap {
        &self.views[view as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub band: Option<Band>,
    pub epsilon: f64,
    /// In [`LevelGroup::ALL`] order.
    pub columns: Vec<GapColumn>,
}

impl GapReport {
    pub fn column(&self, group: LevelGroup) -> Option<&GapColumn> {
        self.columns.iter().find(|c| c.group == group)
    }

    pub fn total(&self) -> Option<&GapColumn> {
        self.column(LevelGroup::Leadership)
    }

    pub fn leadership_population(&self) -> f64 {
        self.total().map_or(0.0, |c| c.population)
    }

    pub fn leadership_demand(&self) -> f64 {
        self.total().map_or(0.0, |c| c.supply.demand_overall())
    }

    pub fn leadership_available(&self) -> f64 {
        self.total()
            .map_or(0.0, |c| c.supply.available(View::Overall))
    }
}

/// Builds a report over `groups` (normally [`LevelGroup::ALL`]).
pub fn gap_report_for(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    band: Option<Band>,
    groups: &[LevelGroup],
    epsilon: f64,
) -> Result<GapReport, MarketError> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(MarketError::BadEpsilon(epsilon));
    }
    let mut columns = Vec::with_capacity(groups.len());
    for &group in groups {
        let population = snapshot
            .aggregate(group.members(), Segment::All)
            .expect("group members are non-empty");
        if population <= 0.0 {
            return Err(MarketError::EmptyPopulation { group });
        }
        let supply = DemandSupply::compute(group, rates);
        let views = [
            ViewGap::compute(&supply, View::Overall, epsilon)?,
            ViewGap::compute(&supply, View::WhiteFemale, epsilon)?,
            ViewGap::compute(&supply, View::MinorityAll, epsilon)?,
        ];
        columns.push(GapColumn {
            group,
            population,
            supply,
            views,
        });
    }
    Ok(GapReport {
        band,
        epsilon,
        columns,
    })
}

/// Full report: Counsel, Partner, NE, E and Total columns for all views.
pub fn gap_report(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    band: Option<Band>,
    epsilon: f64,
) -> Result<GapReport, MarketError> {
    gap_report_for(snapshot, rates, band, &LevelGroup::ALL, epsilon)
}

/// R30 of `view` over the whole leadership population.
pub fn leadership_r30(rates: &FlowRates, view: View) -> Result<f64, MarketError> {
    let supply = DemandSupply::compute(LevelGroup::Leadership, rates);
    mansfield_ratio(supply.available(view), supply.demand_overall())
}

//! Multi-year projection under scenario adjustments.

use thiserror::Error;

use crate::domain::{AtomicSegment, JobLevel, PopulationSnapshot};
use crate::equilibrium::{leadership_r30, MarketError, View};
use crate::exec::{self, Execution};
use crate::flows::{self, all_kinds, FlowError, FlowKind, FlowRates, StepConfig, Trajectory};

pub const DEFAULT_MAX_YEARS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("year {year}: {source}")]
    Flow {
        year: usize,
        #[source]
        source: FlowError,
    },
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// How flows evolve as the population moves away from its initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateBasis {
    /// Each headcount flow keeps its initial per-capita intensity: it scales
    /// with the current size of its source cell (lateral hires with their
    /// destination cell). Cells that start empty keep absolute flows.
    #[default]
    PerCapita,
    /// Headcount flows stay fixed at their initial values.
    Absolute,
}

impl RateBasis {
    pub fn token(self) -> &'static str {
        match self {
            RateBasis::PerCapita => "per-capita",
            RateBasis::Absolute => "absolute",
        }
    }
}

impl std::str::FromStr for RateBasis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-capita" => Ok(RateBasis::PerCapita),
            "absolute" => Ok(RateBasis::Absolute),
            _ => Err(format!("unknown rate basis `{s}`")),
        }
    }
}

/// Scales one flow kind; `None` level or segment matches every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub kind: FlowKind,
    pub level: Option<JobLevel>,
    pub segment: Option<AtomicSegment>,
    pub factor: f64,
}

impl Multiplier {
    fn matches(&self, kind: FlowKind, level: JobLevel, segment: AtomicSegment) -> bool {
        self.kind == kind
            && self.level.is_none_or(|l| l == level)
            && self.segment.is_none_or(|s| s == segment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub years: usize,
    /// Applied to junior-associate entry hiring as `(1 + g)^t`.
    pub annual_growth: f64,
    pub multipliers: Vec<Multiplier>,
    pub basis: RateBasis,
    pub max_years: usize,
}

impl Scenario {
    pub fn new(label: impl Into<String>, years: usize) -> Self {
        Scenario {
            label: label.into(),
            years,
            annual_growth: 0.0,
            multipliers: Vec::new(),
            basis: RateBasis::default(),
            max_years: DEFAULT_MAX_YEARS,
        }
    }

    pub fn with_growth(mut self, g: f64) -> Self {
        self.annual_growth = g;
        self
    }

    pub fn with_basis(mut self, basis: RateBasis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_multiplier(mut self, m: Multiplier) -> Self {
        self.multipliers.push(m);
        self
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        if self.years == 0 {
            return Err(ProjectionError::Scenario("years must be positive".into()));
        }
        if self.years > self.max_years {
            return Err(ProjectionError::Scenario(format!(
                "{} years exceeds the maximum of {}",
                self.years, self.max_years
            )));
        }
        if !self.annual_growth.is_finite() || self.annual_growth <= -1.0 {
            return Err(ProjectionError::Scenario(format!(
                "growth {} must exceed -1",
                self.annual_growth
            )));
        }
        if let Some(m) = self
            .multipliers
            .iter()
            .find(|m| !(m.factor.is_finite() && m.factor > 0.0))
        {
            return Err(ProjectionError::Scenario(format!(
                "multiplier for {} must be positive, got {}",
                m.kind, m.factor
            )));
        }
        Ok(())
    }

    /// Base rates with every multiplier applied.
    pub fn adjusted_rates(&self, rates: &FlowRates) -> Result<FlowRates, ProjectionError> {
        let mut out = rates.clone();
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                for kind in all_kinds() {
                    let factor: f64 = self
                        .multipliers
                        .iter()
                        .filter(|m| m.matches(kind, level, seg))
                        .map(|m| m.factor)
                        .product();
                    if factor != 1.0 {
                        let v = rates.get(level, seg, kind) * factor;
                        out.set(level, seg, kind, v)
                            .map_err(|source| ProjectionError::Flow { year: 0, source })?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Rates in force during year `t` given the current population.
fn rates_for_year(
    base: &FlowRates,
    initial: &PopulationSnapshot,
    current: &PopulationSnapshot,
    scenario: &Scenario,
    t: usize,
) -> FlowRates {
    let growth = (1.0 + scenario.annual_growth).powi(t as i32);
    base.map_headcounts(|level, seg, kind, v| {
        if level == JobLevel::JuniorAssociate && kind == FlowKind::Lateral {
            return v * growth;
        }
        match scenario.basis {
            RateBasis::Absolute => v,
            RateBasis::PerCapita => {
                let n0 = initial.count(level, seg);
                if n0 > 0.0 {
                    v * current.count(level, seg) / n0
                } else {
                    v
                }
            }
        }
    })
}

/// Year-by-year projection; the trajectory holds `years + 1` snapshots.
pub fn project(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    scenario: &Scenario,
    config: StepConfig,
) -> Result<Trajectory, ProjectionError> {
    scenario.validate()?;
    let base = scenario.adjusted_rates(rates)?;
    base.validate()
        .map_err(|source| ProjectionError::Flow { year: 0, source })?;
    let mut snapshots = Vec::with_capacity(scenario.years + 1);
    let mut year_rates = Vec::with_capacity(scenario.years + 1);
    let mut current = snapshot.clone();
    for t in 0..=scenario.years {
        let r = rates_for_year(&base, snapshot, &current, scenario, t);
        if t < scenario.years {
            let next = flows::step(&current, &r, config)
                .map_err(|source| ProjectionError::Flow { year: t, source })?;
            snapshots.push(std::mem::replace(&mut current, next));
        } else {
            snapshots.push(current.clone());
        }
        year_rates.push(r);
    }
    Ok(Trajectory::new(snapshots, year_rates))
}

/// Leadership R30 of `view` for every year of the trajectory.
pub fn r30_series(trajectory: &Trajectory, view: View) -> Result<Vec<f64>, MarketError> {
    trajectory
        .rates()
        .iter()
        .map(|r| leadership_r30(r, view))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    At(usize),
    Never,
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::At(t) => write!(f, "{t}"),
            Horizon::Never => f.write_str("never"),
        }
    }
}

/// First year whose leadership R30 is non-negative.
pub fn horizon_of(series: &[f64]) -> Horizon {
    series
        .iter()
        .position(|r| *r >= 0.0)
        .map_or(Horizon::Never, Horizon::At)
}

pub fn feasibility_horizon(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    scenario: &Scenario,
    view: View,
    config: StepConfig,
) -> Result<Horizon, ProjectionError> {
    let trajectory = project(snapshot, rates, scenario, config)?;
    Ok(horizon_of(&r30_series(&trajectory, view)?))
}

/// Independent scenarios, evaluated in parallel; output order follows input.
pub fn project_batch(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    scenarios: &[Scenario],
    config: StepConfig,
    execution: Execution,
) -> Vec<Result<Trajectory, ProjectionError>> {
    exec::map_indexed(execution, scenarios.len(), |i| {
        project(snapshot, rates, &scenarios[i], config)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AtomicSegment as S;
    use JobLevel::*;

    fn small() -> (PopulationSnapshot, FlowRates) {
        let mut s = PopulationSnapshot::zeros(0);
        for seg in S::ALL {
            s.set(Counsel, seg, 100.0).unwrap();
            s.set(SeniorAssociate, seg, 100.0).unwrap();
        }
        let mut r = FlowRates::zero();
        for seg in S::ALL {
            r.set(SeniorAssociate, seg, FlowKind::Promotion(Counsel), 10.0)
                .unwrap();
            r.set(SeniorAssociate, seg, FlowKind::Lateral, 10.0)
                .unwrap();
            r.set(Counsel, seg, FlowKind::Attrition, 10.0).unwrap();
        }
        (s, r)
    }

    #[test]
    fn zero_flows_give_constant_trajectory() {
        let (s, _) = small();
        let traj = project(
            &s,
            &FlowRates::zero(),
            &Scenario::new("flat", 5).with_growth(0.05),
            StepConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.len(), 6);
        for snap in traj.snapshots() {
            assert_eq!(snap.grid(), s.grid());
        }
    }

    #[test]
    fn absolute_identity_scenario_is_repeated_step() {
        let (s, r) = small();
        let sc = Scenario::new("id", 3).with_basis(RateBasis::Absolute);
        let traj = project(&s, &r, &sc, StepConfig::default()).unwrap();
        let mut cur = s.clone();
        for snap in traj.snapshots() {
            assert_eq!(snap, &cur);
            cur = flows::step(&cur, &r, StepConfig::default()).unwrap();
        }
    }

    #[test]
    fn rejects_bad_scenarios() {
        let (s, r) = small();
        assert!(project(&s, &r, &Scenario::new("x", 0), StepConfig::default()).is_err());
        assert!(project(&s, &r, &Scenario::new("x", 101), StepConfig::default()).is_err());
        let neg = Scenario::new("x", 2).with_multiplier(Multiplier {
            kind: FlowKind::Lateral,
            level: None,
            segment: None,
            factor: 0.0,
        });
        assert!(matches!(
            project(&s, &r, &neg, StepConfig::default()),
            Err(ProjectionError::Scenario(_))
        ));
    }

    #[test]
    fn infeasible_year_is_reported() {
        let (s, mut r) = small();
        r.set(Counsel, S::WHITE_MALE, FlowKind::Attrition, 60.0)
            .unwrap();
        let sc = Scenario::new("drain", 5).with_basis(RateBasis::Absolute);
        match project(&s, &r, &sc, StepConfig::default()) {
            Err(ProjectionError::Flow { year, .. }) => assert_eq!(year, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn growth_scales_entry_hiring_only() {
        let (s, mut r) = small();
        r.set(JuniorAssociate, S::WHITE_MALE, FlowKind::Lateral, 100.0)
            .unwrap();
        let traj = project(
            &s,
            &r,
            &Scenario::new("g", 3).with_growth(0.01),
            StepConfig::default(),
        )
        .unwrap();
        let lat: Vec<f64> = traj
            .rates()
            .iter()
            .map(|r| r.get(JuniorAssociate, S::WHITE_MALE, FlowKind::Lateral))
            .collect();
        assert!((lat[3] - 100.0 * 1.01f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn horizon_from_series() {
        assert_eq!(horizon_of(&[0.1, -0.2]), Horizon::At(0));
        assert_eq!(horizon_of(&[-0.3, -0.1, 0.0]), Horizon::At(2));
        assert_eq!(horizon_of(&[-0.3, -0.1]), Horizon::Never);
    }

    #[test]
    fn batch_matches_individual_runs() {
        let (s, r) = small();
        let scenarios: Vec<_> = (1..5).map(|y| Scenario::new(format!("s{y}"), y)).collect();
        let batch = project_batch(
            &s,
            &r,
            &scenarios,
            StepConfig::default(),
            Execution::Parallel,
        );
        for (sc, res) in scenarios.iter().zip(batch) {
            assert_eq!(
                res.unwrap(),
                project(&s, &r, sc, StepConfig::default()).unwrap()
            );
        }
    }
}

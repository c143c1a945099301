//! Job levels, demographic segments, firm-size bands and the population
//! snapshot container.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("unknown job level `{0}`")]
    UnknownLevel(String),
    #[error("unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("unknown gender `{0}`")]
    UnknownGender(String),
    #[error("unknown race `{0}`")]
    UnknownRace(String),
    #[error("unknown firm-size band `{0}`")]
    UnknownBand(String),
    #[error("level set must not be empty")]
    EmptyLevelSet,
    #[error("headcount for {level}/{segment} must be finite and non-negative, got {value}")]
    InvalidHeadcount {
        level: JobLevel,
        segment: AtomicSegment,
        value: f64,
    },
    #[error("division by zero: base aggregate is {0}")]
    ZeroBase(f64),
}

/// Career ladder, ordered from junior associate to equity partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JobLevel {
    JuniorAssociate,
    MidAssociate,
    SeniorAssociate,
    Counsel,
    NonEquityPartner,
    EquityPartner,
}

impl JobLevel {
    pub const ALL: [JobLevel; 6] = [
        JobLevel::JuniorAssociate,
        JobLevel::MidAssociate,
        JobLevel::SeniorAssociate,
        JobLevel::Counsel,
        JobLevel::NonEquityPartner,
        JobLevel::EquityPartner,
    ];
    pub const ASSOCIATES: [JobLevel; 3] = [
        JobLevel::JuniorAssociate,
        JobLevel::MidAssociate,
        JobLevel::SeniorAssociate,
    ];
    pub const LEADERSHIP: [JobLevel; 3] = [
        JobLevel::Counsel,
        JobLevel::NonEquityPartner,
        JobLevel::EquityPartner,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<JobLevel> {
        Self::ALL.get(index).copied()
    }

    /// Counsel, non-equity partner and equity partner.
    pub fn is_leadership(self) -> bool {
        self >= JobLevel::Counsel
    }

    pub fn is_associate(self) -> bool {
        !self.is_leadership()
    }

    /// The associate level directly above this one, if any.
    pub fn next_associate(self) -> Option<JobLevel> {
        match self {
            JobLevel::JuniorAssociate => Some(JobLevel::MidAssociate),
            JobLevel::MidAssociate => Some(JobLevel::SeniorAssociate),
            _ => None,
        }
    }

    pub fn previous_associate(self) -> Option<JobLevel> {
        match self {
            JobLevel::MidAssociate => Some(JobLevel::JuniorAssociate),
            JobLevel::SeniorAssociate => Some(JobLevel::MidAssociate),
            _ => None,
        }
    }

    /// Whether a headcount promotion flow from `self` into `dest` is allowed.
    ///
    /// Only senior associates and leadership levels carry headcount promotion
    /// flows; junior and mid associates advance through their promotion rate.
    pub fn may_promote_to(self, dest: JobLevel) -> bool {
        dest > self && dest.is_leadership() && self >= JobLevel::SeniorAssociate
    }

    pub fn token(self) -> &'static str {
        match self {
            JobLevel::JuniorAssociate => "junior-associate",
            JobLevel::MidAssociate => "mid-associate",
            JobLevel::SeniorAssociate => "senior-associate",
            JobLevel::Counsel => "counsel",
            JobLevel::NonEquityPartner => "non-equity-partner",
            JobLevel::EquityPartner => "equity-partner",
        }
    }
}

impl fmt::Display for JobLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for JobLevel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JobLevel::ALL
            .into_iter()
            .find(|l| l.token() == s)
            .ok_or_else(|| DomainError::UnknownLevel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl FromStr for Gender {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            _ => Err(DomainError::UnknownGender(s.to_string())),
        }
    }
}

/// Minority collapses every non-white group the source data reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Race {
    WhiteCaucasian,
    Minority,
}

impl Race {
    pub fn token(self) -> &'static str {
        match self {
            Race::WhiteCaucasian => "white",
            Race::Minority => "minority",
        }
    }
}

impl FromStr for Race {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "white" => Ok(Race::WhiteCaucasian),
            "minority" => Ok(Race::Minority),
            _ => Err(DomainError::UnknownRace(s.to_string())),
        }
    }
}

/// One of the four gender x race cells that partition the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicSegment {
    pub gender: Gender,
    pub race: Race,
}

impl AtomicSegment {
    pub const WHITE_FEMALE: AtomicSegment =
        AtomicSegment::new(Gender::Female, Race::WhiteCaucasian);
    pub const WHITE_MALE: AtomicSegment = AtomicSegment::new(Gender::Male, Race::WhiteCaucasian);
    pub const MINORITY_FEMALE: AtomicSegment = AtomicSegment::new(Gender::Female, Race::Minority);
    pub const MINORITY_MALE: AtomicSegment = AtomicSegment::new(Gender::Male, Race::Minority);

    pub const ALL: [AtomicSegment; 4] = [
        AtomicSegment::WHITE_FEMALE,
        AtomicSegment::WHITE_MALE,
        AtomicSegment::MINORITY_FEMALE,
        AtomicSegment::MINORITY_MALE,
    ];

    pub const fn new(gender: Gender, race: Race) -> Self {
        AtomicSegment { gender, race }
    }

    pub const fn index(self) -> usize {
        let g = match self.gender {
            Gender::Female => 0,
            Gender::Male => 1,
        };
        let r = match self.race {
            Race::WhiteCaucasian => 0,
            Race::Minority => 2,
        };
        g + r
    }

    pub fn from_index(index: usize) -> Option<AtomicSegment> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for AtomicSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.race.token(), self.gender.token())
    }
}

/// An atomic cell or one of the aggregate views used in gap analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    Atomic(AtomicSegment),
    /// Every lawyer (the overall view).
    All,
    WhiteFemale,
    /// Minority female plus minority male.
    MinorityAll,
    Female,
    Male,
    White,
}

impl Segment {
    pub fn contains(self, cell: AtomicSegment) -> bool {
        match self {
            Segment::Atomic(a) => a == cell,
            Segment::All => true,
            Segment::WhiteFemale => cell == AtomicSegment::WHITE_FEMALE,
            Segment::MinorityAll => cell.race == Race::Minority,
            Segment::Female => cell.gender == Gender::Female,
            Segment::Male => cell.gender == Gender::Male,
            Segment::White => cell.race == Race::WhiteCaucasian,
        }
    }

    pub fn cells(self) -> impl Iterator<Item = AtomicSegment> {
        AtomicSegment::ALL
            .into_iter()
            .filter(move |c| self.contains(*c))
    }

    pub fn name(self) -> String {
        match self {
            Segment::Atomic(a) => a.to_string(),
            Segment::All => "all".into(),
            Segment::WhiteFemale => "white-female".into(),
            Segment::MinorityAll => "minority".into(),
            Segment::Female => "female".into(),
            Segment::Male => "male".into(),
            Segment::White => "white".into(),
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Segment {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let seg = match s {
            "all" | "overall" => Segment::All,
            "white-female" => Segment::WhiteFemale,
            "minority" => Segment::MinorityAll,
            "female" => Segment::Female,
            "male" => Segment::Male,
            "white" => Segment::White,
            "white-male" => Segment::Atomic(AtomicSegment::WHITE_MALE),
            "minority-female" => Segment::Atomic(AtomicSegment::MINORITY_FEMALE),
            "minority-male" => Segment::Atomic(AtomicSegment::MINORITY_MALE),
            _ => return Err(DomainError::UnknownSegment(s.to_string())),
        };
        Ok(seg)
    }
}

/// Firm-size cohorts, by lawyer headcount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    B251To500,
    B501To750,
    B751Plus,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::B751Plus, Band::B501To750, Band::B251To500];

    pub fn token(self) -> &'static str {
        match self {
            Band::B251To500 => "251-500",
            Band::B501To750 => "501-750",
            Band::B751Plus => "751plus",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Band {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Band::ALL
            .into_iter()
            .find(|b| b.token() == s)
            .ok_or_else(|| DomainError::UnknownBand(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FirmSizeBand {
    pub band: Band,
    pub firm_count: u32,
}

pub(crate) type CellGrid = [[f64; 4]; 6];

/// Headcounts per (job level x atomic segment) at time `t`.
///
/// Only atomic cells are stored; every aggregate is derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot {
    t: i64,
    counts: CellGrid,
}

impl PopulationSnapshot {
    pub fn zeros(t: i64) -> Self {
        PopulationSnapshot {
            t,
            counts: [[0.0; 4]; 6],
        }
    }

    pub fn from_grid(t: i64, counts: [[f64; 4]; 6]) -> Result<Self, DomainError> {
        let mut s = Self::zeros(t);
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                s.set(level, seg, counts[level.index()][seg.index()])?;
            }
        }
        Ok(s)
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn with_t(mut self, t: i64) -> Self {
        self.t = t;
        self
    }

    pub fn count(&self, level: JobLevel, segment: AtomicSegment) -> f64 {
        self.counts[level.index()][segment.index()]
    }

    pub fn set(
        &mut self,
        level: JobLevel,
        segment: AtomicSegment,
        value: f64,
    ) -> Result<(), DomainError> {
        if !value.is_finite() || value < 0.0 {
            return Err(DomainError::InvalidHeadcount {
                level,
                segment,
                value,
            });
        }
        self.counts[level.index()][segment.index()] = value;
        Ok(())
    }

    pub fn grid(&self) -> &[[f64; 4]; 6] {
        &self.counts
    }

    /// Sum of the atomic cells covered by `levels` x `segment`.
    pub fn aggregate(&self, levels: &[JobLevel], segment: Segment) -> Result<f64, DomainError> {
        if levels.is_empty() {
            return Err(DomainError::EmptyLevelSet);
        }
        let mut total = 0.0;
        for level in dedup(levels) {
            for cell in segment.cells() {
                total += self.count(level, cell);
            }
        }
        Ok(total)
    }

    pub fn level_total(&self, level: JobLevel) -> f64 {
        self.counts[level.index()].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    /// `aggregate(levels, segment) / aggregate(base_levels, base_segment)`.
    pub fn share(
        &self,
        levels: &[JobLevel],
        segment: Segment,
        base_levels: &[JobLevel],
        base_segment: Segment,
    ) -> Result<f64, DomainError> {
        let num = self.aggregate(levels, segment)?;
        let den = self.aggregate(base_levels, base_segment)?;
        if den <= 0.0 {
            return Err(DomainError::ZeroBase(den));
        }
        Ok(num / den)
    }

    pub fn scaled(&self, k: f64) -> PopulationSnapshot {
        let mut out = self.clone();
        out.counts.iter_mut().flatten().for_each(|c| *c *= k);
        out
    }
}

impl Add for &PopulationSnapshot {
    type Output = PopulationSnapshot;

    fn add(self, rhs: &PopulationSnapshot) -> PopulationSnapshot {
        let mut out = self.clone();
        for (row, other) in out.counts.iter_mut().zip(rhs.counts.iter()) {
            for (c, o) in row.iter_mut().zip(other.iter()) {
                *c += o;
            }
        }
        out
    }
}

fn dedup(levels: &[JobLevel]) -> Vec<JobLevel> {
    let mut v = levels.to_vec();
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leadership_predicate_is_top_three() {
        for (i, level) in JobLevel::ALL.into_iter().enumerate() {
            assert_eq!(level.is_leadership(), i >= 3, "{level}");
            assert_eq!(JobLevel::from_index(i), Some(level));
        }
        assert!(JobLevel::ALL.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn promotion_targets() {
        use JobLevel::*;
        assert!(SeniorAssociate.may_promote_to(Counsel));
        assert!(SeniorAssociate.may_promote_to(EquityPartner));
        assert!(Counsel.may_promote_to(NonEquityPartner));
        assert!(!NonEquityPartner.may_promote_to(Counsel));
        assert!(!EquityPartner.may_promote_to(EquityPartner));
        assert!(!MidAssociate.may_promote_to(Counsel));
    }

    #[test]
    fn tokens_round_trip() {
        for level in JobLevel::ALL {
            assert_eq!(level.token().parse::<JobLevel>().unwrap(), level);
        }
        for band in Band::ALL {
            assert_eq!(band.token().parse::<Band>().unwrap(), band);
        }
        assert!("partner".parse::<JobLevel>().is_err());
        assert!(matches!(
            "lgbtq".parse::<Segment>(),
            Err(DomainError::UnknownSegment(_))
        ));
    }

    #[test]
    fn minority_all_is_both_minority_cells() {
        let cells: Vec<_> = Segment::MinorityAll.cells().collect();
        assert_eq!(
            cells,
            vec![AtomicSegment::MINORITY_FEMALE, AtomicSegment::MINORITY_MALE]
        );
        assert_eq!(Segment::All.cells().count(), 4);
        for (i, c) in AtomicSegment::ALL.into_iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn zero_snapshot_aggregates_to_zero() {
        let s = PopulationSnapshot::zeros(0);
        assert_eq!(s.aggregate(&JobLevel::ALL, Segment::All).unwrap(), 0.0);
        assert_eq!(
            s.aggregate(&JobLevel::LEADERSHIP, Segment::MinorityAll)
                .unwrap(),
            0.0
        );
        assert!(matches!(
            s.share(
                &JobLevel::ALL,
                Segment::Female,
                &JobLevel::ALL,
                Segment::All
            ),
            Err(DomainError::ZeroBase(_))
        ));
    }

    #[test]
    fn rejects_negative_headcount() {
        let mut s = PopulationSnapshot::zeros(0);
        let err = s
            .set(JobLevel::Counsel, AtomicSegment::WHITE_MALE, -1.0)
            .unwrap_err();
        assert!(matches!(err, DomainError::InvalidHeadcount { .. }));
        assert!(s
            .set(JobLevel::Counsel, AtomicSegment::WHITE_MALE, f64::NAN)
            .is_err());
    }

    #[test]
    fn empty_level_set_is_an_error() {
        let s = PopulationSnapshot::zeros(0);
        assert_eq!(
            s.aggregate(&[], Segment::All),
            Err(DomainError::EmptyLevelSet)
        );
    }

    #[test]
    fn self_share_is_one() {
        let mut s = PopulationSnapshot::zeros(0);
        s.set(JobLevel::Counsel, AtomicSegment::MINORITY_MALE, 7.0)
            .unwrap();
        let r = s
            .share(
                &[JobLevel::Counsel],
                Segment::MinorityAll,
                &[JobLevel::Counsel],
                Segment::MinorityAll,
            )
            .unwrap();
        assert_eq!(r, 1.0);
    }
}

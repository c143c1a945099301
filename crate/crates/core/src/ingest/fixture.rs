//! Reconstructed datasets for the three firm-size bands.
//!
//! The published source reports level totals, female and minority shares and
//! leadership demand/availability, but not the underlying cell counts. The
//! constants below are integer counts consistent with every printed
//! percentage; minority-female cells assume gender and race are independent
//! within a level, and associates split 40/30/30 into junior/mid/senior.

use crate::domain::{AtomicSegment, Band, FirmSizeBand, JobLevel, PopulationSnapshot};

use super::calibrate::{
    add_associate_flows, build_fixture_rates, CalibrationError, PublishedColumn, PublishedTargets,
};
use super::{parse, serialize, DatasetFile, Metadata};

pub const SOURCE: &str = "reconstructed from published 2021 firm-size aggregates";
pub const YEAR: i64 = 2021;

/// Raw inputs for one band; population arrays are ordered
/// associates, counsel, non-equity partners, equity partners.
#[derive(Debug, Clone, Copy)]
pub struct BandInputs {
    pub band: Band,
    pub firms: u32,
    pub totals: [u32; 4],
    pub female: [u32; 4],
    pub minority: [u32; 4],
    pub published: PublishedTargets,
}

fn col(c: f64, ne: f64, e: f64, p: Option<f64>, t: Option<f64>) -> PublishedColumn {
    PublishedColumn::new(c, ne, e).with_subtotals(p, t)
}

pub fn inputs(band: Band) -> BandInputs {
    match band {
        Band::B751Plus => BandInputs {
            band,
            firms: 110,
            totals: [73760, 19635, 13660, 47632],
            female: [34949, 7952, 4222, 10527],
            minority: [19918, 2847, 1707, 4873],
            published: PublishedTargets {
                demand: col(2623.0, 2741.0, 6994.0, Some(9735.0), Some(12358.0)),
                available: col(2681.0, 3494.0, 3222.0, Some(6716.0), Some(9397.0)),
                available_white_female: col(783.0, 816.0, 637.0, Some(1453.0), Some(2236.0)),
                available_minority: col(431.0, 522.0, 481.0, Some(1003.0), Some(1434.0)),
            },
        },
        Band::B501To750 => BandInputs {
            band,
            firms: 62,
            totals: [17549, 5455, 3865, 10852],
            female: [8249, 2350, 1158, 2388],
            minority: [4563, 790, 425, 973],
            published: PublishedTargets {
                demand: col(1144.0, 618.0, 1694.0, Some(2312.0), Some(3456.0)),
                available: col(913.0, 625.0, 1720.0, Some(2345.0), Some(3258.0)),
                available_white_female: col(270.0, 162.0, 319.0, Some(481.0), Some(751.0)),
                // the printed minority total (443) disagrees with its parts
                available_minority: col(169.0, 80.0, 193.0, Some(273.0), None),
            },
        },
        Band::B251To500 => BandInputs {
            band,
            firms: 155,
            totals: [20780, 7973, 9839, 17628],
            female: [9351, 3030, 2925, 3790],
            minority: [4364, 918, 1056, 1392],
            published: PublishedTargets {
                // equity demand printed as 1848; 1847 matches both subtotals
                demand: col(1072.0, 1477.0, 1847.0, Some(3324.0), Some(4396.0)),
                available: col(1209.0, 1742.0, 1003.0, Some(2745.0), Some(3954.0)),
                available_white_female: col(318.0, 433.0, 215.0, Some(648.0), Some(966.0)),
                available_minority: col(196.0, 184.0, 103.0, Some(287.0), Some(483.0)),
            },
        },
    }
}

fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Splits level totals into atomic cells and associates into three levels.
pub fn population(inputs: &BandInputs) -> PopulationSnapshot {
    let mut snap = PopulationSnapshot::zeros(YEAR);
    for i in 0..4 {
        let n = inputs.totals[i] as f64;
        let f = inputs.female[i] as f64;
        let m = inputs.minority[i] as f64;
        let mf = round_half_away(m * f / n);
        let cells = [f - mf, n - f - (m - mf), mf, m - mf];
        let levels: &[JobLevel] = if i == 0 {
            &JobLevel::ASSOCIATES
        } else {
            &JobLevel::LEADERSHIP[i - 1..i]
        };
        for seg in AtomicSegment::ALL {
            let c = cells[seg.index()];
            if levels.len() == 1 {
                snap.set(levels[0], seg, c).expect("non-negative count");
            } else {
                let j = round_half_away(0.4 * c);
                let mid = round_half_away(0.3 * c);
                snap.set(JobLevel::JuniorAssociate, seg, j)
                    .expect("non-negative count");
                snap.set(JobLevel::MidAssociate, seg, mid)
                    .expect("non-negative count");
                snap.set(JobLevel::SeniorAssociate, seg, c - j - mid)
                    .expect("non-negative count");
            }
        }
    }
    snap
}

/// Builds the dataset for `band` from the constants above.
pub fn build(band: Band) -> Result<DatasetFile, CalibrationError> {
    let inputs = inputs(band);
    let population = population(&inputs);
    let targets = inputs.published.split(&population)?;
    let mut flows = build_fixture_rates(&targets)?;
    add_associate_flows(&mut flows, &population)?;
    Ok(DatasetFile {
        metadata: Metadata {
            source: SOURCE.to_string(),
            year: YEAR,
            cohort: FirmSizeBand {
                band,
                firm_count: inputs.firms,
            },
        },
        population,
        flows: Some(flows),
    })
}

/// File name used for a band's bundled dataset.
pub fn file_name(band: Band) -> String {
    format!("band-{}.csv", band.token())
}

/// The checked-in text of a band's dataset.
pub fn bundled_text(band: Band) -> &'static str {
    match band {
        Band::B751Plus => include_str!("../../../../fixtures/band-751plus.csv"),
        Band::B501To750 => include_str!("../../../../fixtures/band-501-750.csv"),
        Band::B251To500 => include_str!("../../../../fixtures/band-251-500.csv"),
    }
}

/// The checked-in dataset for `band`, parsed.
pub fn bundled(band: Band) -> DatasetFile {
    parse(bundled_text(band).as_bytes()).expect("bundled fixture parses")
}

/// Text form of [`build`], as written to the fixtures directory.
pub fn render(band: Band) -> Result<String, CalibrationError> {
    Ok(serialize(&build(band)?))
}

/// Sum of the three bands' populations.
pub fn combined_population() -> PopulationSnapshot {
    Band::ALL
        .into_iter()
        .map(|b| bundled(b).population)
        .fold(PopulationSnapshot::zeros(YEAR), |acc, p| &acc + &p)
}

//! Delimiter-separated dataset, scenario and pool-policy files.
//!
//! All three share one grammar: leading `#key: value` metadata lines, the
//! header `record,level,gender,race,kind,value`, then one record per line.
//! Parsing collects every problem it finds instead of stopping at the first.

pub mod calibrate;
pub mod fixture;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::domain::{
    AtomicSegment, Band, FirmSizeBand, Gender, JobLevel, PopulationSnapshot, Race,
};
use crate::flows::{FlowKind, FlowRates};
use crate::poolmodel::PoolPolicy;
use crate::projection::{Multiplier, RateBasis, Scenario};

pub use calibrate::{
    build_fixture_rates, CalibrationError, CalibrationTargets, CellTarget, PublishedColumn,
    PublishedTargets,
};

pub const HEADER: &str = "record,level,gender,race,kind,value";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based; 0 for problems that belong to the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<Diagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    line: usize,
    record: String,
    level: String,
    gender: String,
    race: String,
    kind: String,
    value: f64,
}

#[derive(Debug, Default)]
struct Document {
    metadata: Vec<(usize, String, String)>,
    rows: Vec<Row>,
}

fn tokenize(bytes: &[u8], errors: &mut Vec<Diagnostic>) -> Document {
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            errors.push(Diagnostic {
                line: 0,
                message: format!("not valid UTF-8: {e}"),
            });
            return Document::default();
        }
    };
    let mut doc = Document::default();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                doc.metadata
                    .push((line, k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !seen_header {
            seen_header = true;
            if trimmed != HEADER {
                errors.push(Diagnostic {
                    line,
                    message: format!("expected header `{HEADER}`"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            errors.push(Diagnostic {
                line,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
            continue;
        }
        let value = match fields[5].parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                errors.push(Diagnostic {
                    line,
                    message: format!("value `{}` is not a finite number", fields[5]),
                });
                continue;
            }
        };
        doc.rows.push(Row {
            line,
            record: fields[0].to_string(),
            level: fields[1].to_string(),
            gender: fields[2].to_string(),
            race: fields[3].to_string(),
            kind: fields[4].to_string(),
            value,
        });
    }
    if !seen_header && errors.is_empty() {
        errors.push(Diagnostic {
            line: 0,
            message: format!("missing header `{HEADER}`"),
        });
    }
    doc
}

struct Meta {
    values: HashMap<String, (usize, String)>,
}

impl Meta {
    fn collect(doc: &Document, allowed: &[&str], errors: &mut Vec<Diagnostic>) -> Meta {
        let mut values = HashMap::new();
        for (line, k, v) in &doc.metadata {
            if !allowed.contains(&k.as_str()) {
                errors.push(Diagnostic {
                    line: *line,
                    message: format!("unknown metadata key `{k}`"),
                });
            } else if values.insert(k.clone(), (*line, v.clone())).is_some() {
                errors.push(Diagnostic {
                    line: *line,
                    message: format!("duplicate metadata key `{k}`"),
                });
            }
        }
        Meta { values }
    }

    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn required<T: std::str::FromStr>(&self, key: &str, errors: &mut Vec<Diagnostic>) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => {
                errors.push(Diagnostic {
                    line: 0,
                    message: format!("missing metadata `#{key}`"),
                });
                None
            }
            Some(_) => self.optional(key, errors),
        }
    }

    fn optional<T: std::str::FromStr>(&self, key: &str, errors: &mut Vec<Diagnostic>) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let (line, v) = self.get(key)?;
        match v.parse::<T>() {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(Diagnostic {
                    line: *line,
                    message: format!("bad `#{key}` value `{v}`: {e}"),
                });
                None
            }
        }
    }
}

fn parse_cell(row: &Row, errors: &mut Vec<Diagnostic>) -> Option<(JobLevel, AtomicSegment)> {
    let level = row.level.parse::<JobLevel>();
    let gender = row.gender.parse::<Gender>();
    let race = row.race.parse::<Race>();
    match (level, gender, race) {
        (Ok(l), Ok(g), Ok(r)) => Some((l, AtomicSegment::new(g, r))),
        (l, g, r) => {
            for e in [l.err(), g.err(), r.err()].into_iter().flatten() {
                errors.push(Diagnostic {
                    line: row.line,
                    message: e.to_string(),
                });
            }
            None
        }
    }
}

fn finish<T>(value: T, errors: Vec<Diagnostic>) -> Result<T, ParseErrors> {
    if errors.is_empty() {
        Ok(value)
    } else {
        Err(ParseErrors(errors))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub source: String,
    pub year: i64,
    pub cohort: FirmSizeBand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub metadata: Metadata,
    pub population: PopulationSnapshot,
    pub flows: Option<FlowRates>,
}

impl DatasetFile {
    pub fn band(&self) -> Band {
        self.metadata.cohort.band
    }
}

/// Parses and validates a dataset file.
pub fn parse(bytes: &[u8]) -> Result<DatasetFile, ParseErrors> {
    let mut errors = Vec::new();
    let doc = tokenize(bytes, &mut errors);
    let meta = Meta::collect(&doc, &["source", "year", "band", "firms"], &mut errors);
    let source: Option<String> = meta.required("source", &mut errors);
    let year: Option<i64> = meta.required("year", &mut errors);
    let band: Option<Band> = meta.required("band", &mut errors);
    let firms: Option<u32> = meta.required("firms", &mut errors);

    let mut population = PopulationSnapshot::zeros(0);
    let mut seen_pop: HashSet<(JobLevel, AtomicSegment)> = HashSet::new();
    let mut flows = FlowRates::zero();
    let mut seen_flow: HashSet<(JobLevel, AtomicSegment, FlowKind)> = HashSet::new();

    for row in &doc.rows {
        match row.record.as_str() {
            "population" => {
                if !row.kind.is_empty() {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: "population rows must leave `kind` empty".into(),
                    });
                    continue;
                }
                let Some((level, seg)) = parse_cell(row, &mut errors) else {
                    continue;
                };
                if !seen_pop.insert((level, seg)) {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: format!("duplicate population cell {level}/{seg}"),
                    });
                    continue;
                }
                if let Err(e) = population.set(level, seg, row.value) {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: e.to_string(),
                    });
                }
            }
            "flow" => {
                let Some((level, seg)) = parse_cell(row, &mut errors) else {
                    continue;
                };
                let kind = match row.kind.parse::<FlowKind>() {
                    Ok(k) => k,
                    Err(e) => {
                        errors.push(Diagnostic {
                            line: row.line,
                            message: e.to_string(),
                        });
                        continue;
                    }
                };
                if !seen_flow.insert((level, seg, kind)) {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: format!("duplicate {kind} flow for {level}/{seg}"),
                    });
                    continue;
                }
                if let Err(e) = flows.set(level, seg, kind, row.value) {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: e.to_string(),
                    });
                }
            }
            other => errors.push(Diagnostic {
                line: row.line,
                message: format!("unknown record type `{other}` (expected population or flow)"),
            }),
        }
    }
    for level in JobLevel::ALL {
        for seg in AtomicSegment::ALL {
            if !seen_pop.contains(&(level, seg)) {
                errors.push(Diagnostic {
                    line: 0,
                    message: format!("missing population cell {level}/{seg}"),
                });
            }
        }
    }
    let has_flows = !seen_flow.is_empty();
    match (source, year, band, firms) {
        (Some(source), Some(year), Some(band), Some(firm_count)) => finish(
            DatasetFile {
                metadata: Metadata {
                    source,
                    year,
                    cohort: FirmSizeBand { band, firm_count },
                },
                population: population.with_t(year),
                flows: has_flows.then_some(flows),
            },
            errors,
        ),
        _ => Err(ParseErrors(errors)),
    }
}

/// Canonical text form: metadata, header, populations, then every flow that
/// differs from its default, all in level/segment order.
pub fn serialize(file: &DatasetFile) -> String {
    let mut out = String::new();
    let m = &file.metadata;
    out.push_str(&format!("#source: {}\n", m.source));
    out.push_str(&format!("#year: {}\n", m.year));
    out.push_str(&format!("#band: {}\n", m.cohort.band));
    out.push_str(&format!("#firms: {}\n", m.cohort.firm_count));
    out.push_str(HEADER);
    out.push('\n');
    for level in JobLevel::ALL {
        for seg in AtomicSegment::ALL {
            out.push_str(&format!(
                "population,{},{},{},,{}\n",
                level,
                seg.gender.token(),
                seg.race.token(),
                file.population.count(level, seg)
            ));
        }
    }
    if let Some(flows) = &file.flows {
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                for (kind, value) in flows.cell(level, seg).non_default() {
                    out.push_str(&format!(
                        "flow,{},{},{},{},{}\n",
                        level,
                        seg.gender.token(),
                        seg.race.token(),
                        kind,
                        value
                    ));
                }
            }
        }
    }
    out
}

fn wildcard<T>(s: &str, all: &[T], row: &Row, errors: &mut Vec<Diagnostic>) -> Option<Vec<T>>
where
    T: Copy + std::str::FromStr,
    T::Err: fmt::Display,
{
    if s == "*" || s.is_empty() {
        return Some(all.to_vec());
    }
    match s.parse::<T>() {
        Ok(t) => Some(vec![t]),
        Err(e) => {
            errors.push(Diagnostic {
                line: row.line,
                message: e.to_string(),
            });
            None
        }
    }
}

/// Parses a scenario file: `#label`, `#years`, optional `#growth` and
/// `#basis`, and `multiplier` records. `*` (or an empty field) in the level,
/// gender or race column matches everything.
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, ParseErrors> {
    let mut errors = Vec::new();
    let doc = tokenize(bytes, &mut errors);
    let meta = Meta::collect(
        &doc,
        &["label", "years", "growth", "basis", "max_years"],
        &mut errors,
    );
    let label: Option<String> = meta.required("label", &mut errors);
    let years: Option<usize> = meta.required("years", &mut errors);
    let growth: f64 = meta.optional("growth", &mut errors).unwrap_or(0.0);
    let basis: RateBasis = meta.optional("basis", &mut errors).unwrap_or_default();
    let max_years: Option<usize> = meta.optional("max_years", &mut errors);

    let mut multipliers = Vec::new();
    for row in &doc.rows {
        if row.record != "multiplier" {
            errors.push(Diagnostic {
                line: row.line,
                message: format!("unknown record type `{}` (expected multiplier)", row.record),
            });
            continue;
        }
        let kind = match row.kind.parse::<FlowKind>() {
            Ok(k) => k,
            Err(e) => {
                errors.push(Diagnostic {
                    line: row.line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if row.value.is_nan() || row.value <= 0.0 {
            errors.push(Diagnostic {
                line: row.line,
                message: format!("multiplier must be positive, got {}", row.value),
            });
            continue;
        }
        let level = if row.level == "*" || row.level.is_empty() {
            Some(None)
        } else {
            match row.level.parse::<JobLevel>() {
                Ok(l) => Some(Some(l)),
                Err(e) => {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: e.to_string(),
                    });
                    None
                }
            }
        };
        let genders = wildcard(
            &row.gender,
            &[Gender::Female, Gender::Male],
            row,
            &mut errors,
        );
        let races = wildcard(
            &row.race,
            &[Race::WhiteCaucasian, Race::Minority],
            row,
            &mut errors,
        );
        let (Some(level), Some(genders), Some(races)) = (level, genders, races) else {
            continue;
        };
        let any_segment = (row.gender == "*" || row.gender.is_empty())
            && (row.race == "*" || row.race.is_empty());
        if any_segment {
            multipliers.push(Multiplier {
                kind,
                level,
                segment: None,
                factor: row.value,
            });
        } else {
            for g in &genders {
                for r in &races {
                    multipliers.push(Multiplier {
                        kind,
                        level,
                        segment: Some(AtomicSegment::new(*g, *r)),
                        factor: row.value,
                    });
                }
            }
        }
    }
    let (Some(label), Some(years)) = (label, years) else {
        return Err(ParseErrors(errors));
    };
    let mut scenario = Scenario::new(label, years)
        .with_growth(growth)
        .with_basis(basis);
    if let Some(m) = max_years {
        scenario.max_years = m;
    }
    scenario.multipliers = multipliers;
    if errors.is_empty() {
        if let Err(e) = scenario.validate() {
            errors.push(Diagnostic {
                line: 0,
                message: e.to_string(),
            });
        }
    }
    finish(scenario, errors)
}

/// Parses a pool policy: `#pool_size`, `#share`, `#pools` and `hire_prob`
/// records whose `kind` column holds the diverse-candidate count.
pub fn parse_pool_policy(bytes: &[u8]) -> Result<PoolPolicy, ParseErrors> {
    let mut errors = Vec::new();
    let doc = tokenize(bytes, &mut errors);
    let meta = Meta::collect(&doc, &["pool_size", "share", "pools"], &mut errors);
    let pool_size: Option<u32> = meta.required("pool_size", &mut errors);
    let share: Option<f64> = meta.required("share", &mut errors);
    let pools: Option<u32> = meta.required("pools", &mut errors);
    let mut probs = BTreeMap::new();
    for row in &doc.rows {
        if row.record != "hire_prob" {
            errors.push(Diagnostic {
                line: row.line,
                message: format!("unknown record type `{}` (expected hire_prob)", row.record),
            });
            continue;
        }
        match row.kind.parse::<u32>() {
            Ok(d) => {
                if probs.insert(d, row.value).is_some() {
                    errors.push(Diagnostic {
                        line: row.line,
                        message: format!("duplicate hire probability for {d} diverse candidates"),
                    });
                }
            }
            Err(_) => errors.push(Diagnostic {
                line: row.line,
                message: format!("diverse count `{}` is not a non-negative integer", row.kind),
            }),
        }
    }
    let (Some(n), Some(f), Some(k)) = (pool_size, share, pools) else {
        return Err(ParseErrors(errors));
    };
    if !errors.is_empty() {
        return Err(ParseErrors(errors));
    }
    PoolPolicy::new(n, f, k, probs).map_err(|e| {
        ParseErrors(vec![Diagnostic {
            line: 0,
            message: e.to_string(),
        }])
    })
}

//! Text, CSV and Markdown gap tables; SVG charts; trajectory exports.
//!
//! Output is a pure function of the input: fixed `.` decimal separator, LF
//! line endings, half-away-from-zero rounding, and no `-0`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::equilibrium::{
    leadership_r30, DemandSupply, GapColumn, GapReport, LevelGroup, MarketError, View,
    MANSFIELD_SHARE,
};
use crate::flows::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "markdown" => Ok(Format::Markdown),
            _ => Err(format!(
                "unknown format `{s}` (expected text, csv or markdown)"
            )),
        }
    }
}

/// Rounds half away from zero to `decimals` places and prints without `-0`.
pub fn format_fixed(x: f64, decimals: usize) -> String {
    let scaled = (x * 10f64.powi(decimals as i32)).round();
    if !scaled.is_finite() {
        return format!("{x}");
    }
    let negative = scaled < 0.0;
    let digits = format!("{:.0}", scaled.abs());
    let body = if decimals == 0 {
        digits
    } else {
        let padded = format!("{digits:0>width$}", width = decimals + 1);
        let (int, frac) = padded.split_at(padded.len() - decimals);
        format!("{int}.{frac}")
    };
    if negative && body.bytes().any(|b| b.is_ascii_digit() && b != b'0') {
        format!("-{body}")
    } else {
        body
    }
}

#[derive(Clone, Copy)]
enum Unit {
    Count,
    Percent,
    Label,
}

type CellFn = Box<dyn Fn(&GapColumn, &GapReport) -> Cell>;

struct RowSpec {
    id: &'static str,
    label: String,
    unit: Unit,
    value: CellFn,
}

enum Cell {
    Number(f64),
    Text(&'static str),
}

fn share(part: f64, whole: f64) -> f64 {
    if whole != 0.0 {
        part / whole
    } else {
        0.0
    }
}

fn supply(c: &GapColumn) -> &DemandSupply {
    &c.supply
}

fn number(f: impl Fn(&GapColumn, &GapReport) -> f64 + 'static) -> CellFn {
    Box::new(move |c, r| Cell::Number(f(c, r)))
}

fn overall_rows() -> Vec<RowSpec> {
    vec![
        RowSpec {
            id: "population",
            label: "Leadership population".into(),
            unit: Unit::Count,
            value: number(|c, _| c.population),
        },
        RowSpec {
            id: "population_distribution",
            label: "Population distribution".into(),
            unit: Unit::Percent,
            value: number(|c, r| share(c.population, r.leadership_population())),
        },
        RowSpec {
            id: "demand",
            label: "Demand".into(),
            unit: Unit::Count,
            value: number(|c, _| supply(c).demand_overall()),
        },
        RowSpec {
            id: "demand_distribution",
            label: "Demand pop. distribution".into(),
            unit: Unit::Percent,
            value: number(|c, r| share(supply(c).demand_overall(), r.leadership_demand())),
        },
        RowSpec {
            id: "demand_in_proportion",
            label: "Demand in proportion of the leadership population".into(),
            unit: Unit::Percent,
            value: number(|c, _| share(supply(c).demand_overall(), c.population)),
        },
        RowSpec {
            id: "thirty_percent_of_demand",
            label: format!(
                "{}% of the demand",
                format_fixed(MANSFIELD_SHARE * 100.0, 0)
            ),
            unit: Unit::Count,
            value: number(|c, _| supply(c).thirty_percent_of_demand()),
        },
        RowSpec {
            id: "available",
            label: "Available".into(),
            unit: Unit::Count,
            value: number(|c, _| supply(c).available(View::Overall)),
        },
        RowSpec {
            id: "available_distribution",
            label: "Available pop. distribution".into(),
            unit: Unit::Percent,
            value: number(|c, r| {
                share(supply(c).available(View::Overall), r.leadership_available())
            }),
        },
        RowSpec {
            id: "available_in_proportion",
            label: "Available in proportion of the leadership population".into(),
            unit: Unit::Percent,
            value: number(|c, _| share(supply(c).available(View::Overall), c.population)),
        },
    ]
}

fn subgroup_rows(view: View) -> Vec<RowSpec> {
    vec![
        RowSpec {
            id: "available",
            label: format!("{} available", view.label()),
            unit: Unit::Count,
            value: number(move |c, _| c.view(view).available),
        },
        RowSpec {
            id: "proportion_of_available",
            label: "Proportion of Available".into(),
            unit: Unit::Percent,
            value: number(move |c, _| c.view(view).proportion_of_available),
        },
        RowSpec {
            id: "fill_capacity",
            label: "Fill capacity".into(),
            unit: Unit::Percent,
            value: number(move |c, _| c.view(view).fill_capacity),
        },
        RowSpec {
            id: "short_to_30",
            label: "Short % to reach 30% of the demand".into(),
            unit: Unit::Percent,
            value: number(move |c, _| c.view(view).short_to_30),
        },
        RowSpec {
            id: "r30",
            label: format!("Short % of {} to reach 30% demand", phrase(view)),
            unit: Unit::Percent,
            value: number(move |c, _| c.view(view).r30),
        },
        RowSpec {
            id: "classification",
            label: "Classification".into(),
            unit: Unit::Label,
            value: Box::new(move |c, _| Cell::Text(c.view(view).classification.token())),
        },
    ]
}

fn phrase(view: View) -> &'static str {
    match view {
        View::Overall => "leadership",
        View::WhiteFemale => "white Caucasian female",
        View::MinorityAll => "minorities (female & male)",
    }
}

fn rows_for(view: View) -> Vec<RowSpec> {
    match view {
        View::Overall => overall_rows(),
        v => subgroup_rows(v),
    }
}

fn title(report: &GapReport, view: View) -> String {
    let band = report
        .band
        .map_or_else(|| "combined".to_string(), |b| b.token().to_string());
    match view {
        View::Overall => format!("Supply chain ({band})"),
        v => format!("{} supply chain ({band})", v.label()),
    }
}

fn render_cell(cell: &Cell, unit: Unit, precision: usize, with_percent: bool) -> String {
    match (cell, unit) {
        (Cell::Text(t), _) => t.to_string(),
        (Cell::Number(x), Unit::Count) => format_fixed(*x, 0),
        (Cell::Number(x), Unit::Percent) => {
            let s = format_fixed(x * 100.0, precision);
            if with_percent {
                format!("{s}%")
            } else {
                s
            }
        }
        (Cell::Number(x), Unit::Label) => format_fixed(*x, precision),
    }
}

struct Grid {
    title: String,
    view: View,
    header: Vec<String>,
    rows: Vec<(String, &'static str, Vec<String>)>,
}

fn build_grid(report: &GapReport, view: View, precision: usize, with_percent: bool) -> Grid {
    let header = report
        .columns
        .iter()
        .map(|c| c.group.label().to_string())
        .collect();
    let rows = rows_for(view)
        .into_iter()
        .map(|spec| {
            let cells = report
                .columns
                .iter()
                .map(|c| render_cell(&(spec.value)(c, report), spec.unit, precision, with_percent))
                .collect();
            (spec.label, spec.id, cells)
        })
        .collect();
    Grid {
        title: title(report, view),
        view,
        header,
        rows,
    }
}

/// Renders the selected views of `report`, one section per view, with
/// percentages shown to `precision` decimal places.
pub fn render_gap_table(
    report: &GapReport,
    views: &[View],
    format: Format,
    precision: usize,
) -> Vec<u8> {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("view,metric");
            for c in &report.columns {
                out.push(',');
                out.push_str(c.group.token());
            }
            out.push('\n');
            for &view in views {
                let grid = build_grid(report, view, precision, false);
                for (_, id, cells) in &grid.rows {
                    let _ = write!(out, "{},{}", grid.view.token(), id);
                    for cell in cells {
                        out.push(',');
                        out.push_str(cell);
                    }
                    out.push('\n');
                }
            }
        }
        Format::Text => {
            for (i, &view) in views.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let grid = build_grid(report, view, precision, true);
                let label_width = grid.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
                let widths: Vec<usize> = grid
                    .header
                    .iter()
                    .enumerate()
                    .map(|(j, h)| {
                        grid.rows
                            .iter()
                            .map(|r| r.2[j].len())
                            .max()
                            .unwrap_or(0)
                            .max(h.len())
                    })
                    .collect();
                let _ = writeln!(out, "{}", grid.title);
                let mut line = format!("{:label_width$}", "");
                for (h, w) in grid.header.iter().zip(&widths) {
                    let _ = write!(line, "  {h:>w$}");
                }
                out.push_str(line.trim_end());
                out.push('\n');
                for (label, _, cells) in &grid.rows {
                    let mut line = format!("{label:label_width$}");
                    for (c, w) in cells.iter().zip(&widths) {
                        let _ = write!(line, "  {c:>w$}");
                    }
                    out.push_str(line.trim_end());
                    out.push('\n');
                }
            }
        }
        Format::Markdown => {
            for (i, &view) in views.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let grid = build_grid(report, view, precision, true);
                let _ = writeln!(out, "### {}\n", grid.title);
                out.push_str("| |");
                for h in &grid.header {
                    let _ = write!(out, " {h} |");
                }
                out.push_str("\n|---|");
                for _ in &grid.header {
                    out.push_str("---:|");
                }
                out.push('\n');
                for (label, _, cells) in &grid.rows {
                    let _ = write!(out, "| {label} |");
                    for c in cells {
                        let _ = write!(out, " {c} |");
                    }
                    out.push('\n');
                }
            }
        }
    }
    out.into_bytes()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// A round step (1, 2 or 5 times a power of ten) giving at most ~6 ticks.
fn tick_step(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let raw = max / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

type Series = (&'static str, Box<dyn Fn(&GapColumn) -> f64>);

const BAR_COLORS: [&str; 5] = ["#1f4e79", "#7f7f7f", "#2e8b57", "#c55a11", "#7030a0"];

/// Grouped bar chart: per level group, demand, 30% of demand and the three
/// availability views.
pub fn render_supply_chart(report: &GapReport) -> Vec<u8> {
    let series: [Series; 5] = [
        (
            "Demand",
            Box::new(|c: &GapColumn| c.supply.demand_overall()),
        ),
        (
            "30% of demand",
            Box::new(|c: &GapColumn| c.supply.thirty_percent_of_demand()),
        ),
        (
            "Available",
            Box::new(|c: &GapColumn| c.supply.available(View::Overall)),
        ),
        (
            "White Caucasian female available",
            Box::new(|c: &GapColumn| c.supply.available(View::WhiteFemale)),
        ),
        (
            "Minorities available",
            Box::new(|c: &GapColumn| c.supply.available(View::MinorityAll)),
        ),
    ];
    let groups = report.columns.len().max(1);
    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 110.0);
    let group_width = 150.0;
    let bar = 22.0;
    let plot_h = 320.0;
    let width = left + right + group_width * groups as f64;
    let height = top + plot_h + bottom;
    let values: Vec<Vec<f64>> = report
        .columns
        .iter()
        .map(|c| series.iter().map(|(_, f)| f(c)).collect())
        .collect();
    let max = values.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    let min = values.iter().flatten().fold(0.0f64, |m, v| m.min(*v));
    let step = tick_step(max - min);
    let y_max = (max / step).ceil() * step;
    let y_min = (min / step).floor() * step;
    let span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let y = |v: f64| top + plot_h * (y_max - v) / span;
    let f = |v: f64| format_fixed(v, 2);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(width),
        f(height),
        f(width),
        f(height)
    );
    let _ = writeln!(
        s,
        r#"<title>{}</title>"#,
        escape(&title(report, View::Overall))
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        f(width),
        f(height)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        f(width / 2.0),
        escape(&title(report, View::Overall))
    );
    let mut tick = y_min;
    while tick <= y_max + step * 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/>"##,
            f(left),
            f(y(tick)),
            f(width - right),
            f(y(tick))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            f(left - 6.0),
            f(y(tick) + 4.0),
            format_fixed(tick, 0)
        );
        tick += step;
    }
    for (gi, col) in report.columns.iter().enumerate() {
        let x0 = left + group_width * gi as f64 + (group_width - bar * series.len() as f64) / 2.0;
        let _ = writeln!(s, r#"<g class="group" id="{}">"#, col.group.token());
        for (si, v) in values[gi].iter().enumerate() {
            let (a, b) = (y(v.max(0.0)), y(v.min(0.0)));
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}: {}</title></rect>"#,
                f(x0 + bar * si as f64),
                f(a),
                f(bar - 2.0),
                f(b - a),
                BAR_COLORS[si],
                escape(series[si].0),
                format_fixed(*v, 0)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            f(left + group_width * (gi as f64 + 0.5)),
            f(top + plot_h + 18.0),
            escape(col.group.label())
        );
        s.push_str("</g>\n");
    }
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000"/>"##,
        f(left),
        f(y(0.0)),
        f(width - right),
        f(y(0.0))
    );
    for (si, (name, _)) in series.iter().enumerate() {
        let ly = top + plot_h + 36.0 + 14.0 * si as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#,
            f(left),
            f(ly - 9.0),
            BAR_COLORS[si]
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            f(left + 16.0),
            f(ly),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s.into_bytes()
}

/// Per-year leadership figures for `view`: CSV with one row per snapshot,
/// and a line chart of R30 over time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryArtifacts {
    pub csv: Vec<u8>,
    pub svg: Vec<u8>,
}

pub fn render_trajectory(
    trajectory: &Trajectory,
    view: View,
) -> Result<TrajectoryArtifacts, MarketError> {
    let mut csv = String::from(
        "year,t,leadership_population,demand,available,fill_capacity,r30,classification\n",
    );
    let mut points = Vec::with_capacity(trajectory.len());
    for (year, (snap, rates)) in trajectory.iter().enumerate() {
        let supply = DemandSupply::compute(LevelGroup::Leadership, rates);
        let r30 = leadership_r30(rates, view)?;
        let fill = supply.available(view) / supply.demand_overall();
        let population: f64 = crate::domain::JobLevel::LEADERSHIP
            .iter()
            .map(|l| snap.level_total(*l))
            .sum();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            year,
            snap.t(),
            format_fixed(population, 3),
            format_fixed(supply.demand_overall(), 3),
            format_fixed(supply.available(view), 3),
            format_fixed(fill, 6),
            format_fixed(r30, 6),
            crate::equilibrium::classify(r30, crate::equilibrium::DEFAULT_EPSILON).token()
        );
        points.push((year as f64, r30));
    }

    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 50.0);
    let (plot_w, plot_h) = (600.0, 300.0);
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;
    let years = points.len().saturating_sub(1).max(1) as f64;
    let lo = points.iter().fold(0.0f64, |m, p| m.min(p.1 * 100.0));
    let hi = points.iter().fold(0.0f64, |m, p| m.max(p.1 * 100.0));
    let step = tick_step(hi - lo);
    let y_max = (hi / step).ceil() * step;
    let y_min = (lo / step).floor() * step;
    let span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let x = |t: f64| left + plot_w * t / years;
    let y = |pct: f64| top + plot_h * (y_max - pct) / span;
    let f = |v: f64| format_fixed(v, 2);
    let heading = format!("{} leadership R30 by year", view.label());

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(width),
        f(height),
        f(width),
        f(height)
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&heading));
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        f(width),
        f(height)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        f(width / 2.0),
        escape(&heading)
    );
    let mut tick = y_min;
    while tick <= y_max + step * 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/>"##,
            f(left),
            f(y(tick)),
            f(left + plot_w),
            f(y(tick))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}%</text>"#,
            f(left - 6.0),
            f(y(tick) + 4.0),
            format_fixed(tick, 0)
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000"/>"##,
        f(left),
        f(y(0.0)),
        f(left + plot_w),
        f(y(0.0))
    );
    let path: Vec<String> = points
        .iter()
        .map(|(t, r)| format!("{},{}", f(x(*t)), f(y(r * 100.0))))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f4e79" stroke-width="2" points="{}"/>"##,
        path.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">year</text>"#,
        f(left + plot_w / 2.0),
        f(top + plot_h + 36.0)
    );
    s.push_str("</svg>\n");
    Ok(TrajectoryArtifacts {
        csv: csv.into_bytes(),
        svg: s.into_bytes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_formatting_rounds_half_away() {
        assert_eq!(format_fixed(0.5, 0), "1");
        assert_eq!(format_fixed(-0.5, 0), "-1");
        assert_eq!(format_fixed(2.5, 0), "3");
        assert_eq!(format_fixed(-0.4, 0), "0");
        assert_eq!(format_fixed(-0.004, 2), "0.00");
        assert_eq!(format_fixed(1.005, 1), "1.0");
        assert_eq!(format_fixed(0.05, 2), "0.05");
        assert_eq!(format_fixed(-12.345, 3), "-12.345");
        assert_eq!(format_fixed(3707.4, 0), "3707");
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(12358.0), 5000.0);
        assert_eq!(tick_step(60.0), 10.0);
        assert_eq!(tick_step(0.0), 1.0);
    }

    #[test]
    fn format_tokens() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("pdf".parse::<Format>().is_err());
        assert_eq!(Format::Markdown.extension(), "md");
    }
}

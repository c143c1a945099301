use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mansfield_core::equilibrium::{gap_report, leadership_r30, GapReport, View};
use mansfield_core::exec::{self, Execution};
use mansfield_core::flows::{FlowRates, StepConfig};
use mansfield_core::ingest::{self, DatasetFile};
use mansfield_core::poolmodel::{self, PoolPolicy};
use mansfield_core::projection::{self, r30_series};
use mansfield_core::report::{self, Format};

#[derive(Parser)]
#[command(
    name = "mansfield",
    version,
    about = "Leadership pipeline supply/demand analysis"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Decimal places for percentages in tables.
    #[arg(long, global = true, default_value_t = 0)]
    precision: usize,
    /// Half-width of the equilibrium band around R30 = 0.
    #[arg(long, global = true, default_value_t = 0.005)]
    epsilon: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check dataset files.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Gap tables, charts and summary lines for one dataset.
    Gap {
        dataset: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Project a dataset under a scenario and report when R30 turns non-negative.
    Project {
        dataset: PathBuf,
        scenario: PathBuf,
        /// Overrides the scenario's horizon.
        #[arg(long)]
        years: Option<usize>,
        #[arg(long, value_enum, default_value_t = ViewArg::Minority)]
        view: ViewArg,
        /// Directory for the trajectory CSV and chart.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diverse hire rate of a candidate-slate policy.
    Pool(PoolArgs),
    /// Every table and chart for the given datasets.
    Report {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Also project each dataset under this scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = ViewArg::All)]
    view: ViewArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Directory for table and chart files; tables go to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PoolArgs {
    /// Read the policy from a file instead of the flags below.
    #[arg(long, conflicts_with_all = ["pool_size", "share", "pools", "probs"])]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pool_size: u32,
    #[arg(long, default_value_t = 0.3)]
    share: f64,
    #[arg(long, default_value_t = 5)]
    pools: u32,
    /// Hire probability per diverse count, e.g. `1:0,2:0.5`.
    #[arg(long, default_value = "1:0,2:0.5", value_parser = parse_probs)]
    probs: BTreeMap<u32, f64>,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    All,
    Overall,
    WhiteFemale,
    Minority,
}

impl ViewArg {
    fn views(self) -> Vec<View> {
        match self {
            ViewArg::All => View::ALL.to_vec(),
            ViewArg::Overall => vec![View::Overall],
            ViewArg::WhiteFemale => vec![View::WhiteFemale],
            ViewArg::Minority => vec![View::MinorityAll],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Markdown,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Csv => Format::Csv,
            FormatArg::Markdown => Format::Markdown,
        }
    }
}

fn parse_probs(s: &str) -> Result<BTreeMap<u32, f64>, String> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once(':')
            .ok_or_else(|| format!("`{part}` is not of the form <count>:<probability>"))?;
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| format!("bad diverse count `{k}`"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("bad probability `{v}`"))?;
        if out.insert(k, v).is_some() {
            return Err(format!("diverse count {k} given twice"));
        }
    }
    Ok(out)
}

/// Data or model failure; maps to exit status 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    match exec::with_jobs(jobs, || run(&cli)) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let execution = Execution::from_jobs(cli.jobs);
    match &cli.command {
        Command::Validate { paths } => validate(paths),
        Command::Gap { dataset, output } => gap(cli, dataset, output),
        Command::Project {
            dataset,
            scenario,
            years,
            view,
            out,
        } => project(dataset, scenario, *years, *view, out.as_deref()),
        Command::Pool(args) => pool(cli.seed, args, execution),
        Command::Report {
            datasets,
            out,
            format,
            scenario,
        } => report_all(cli, datasets, out, (*format).into(), scenario.as_deref()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<DatasetFile, Failure> {
    ingest::parse(&read(path)?).map_err(|errs| Failure(located(path, &errs)))
}

fn located(path: &Path, errs: &ingest::ParseErrors) -> String {
    errs.0
        .iter()
        .map(|d| match d.line {
            0 => format!("{}: {}", path.display(), d.message),
            n => format!("{}:{}: {}", path.display(), n, d.message),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn flows_of<'a>(path: &Path, data: &'a DatasetFile) -> Result<&'a FlowRates, Failure> {
    data.flows
        .as_ref()
        .ok_or_else(|| Failure(format!("{}: dataset has no flow records", path.display())))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn validate(paths: &[PathBuf]) -> Outcome {
    let mut out = String::new();
    let mut problems = Vec::new();
    for path in paths {
        match fs::read(path) {
            Err(e) => problems.push(format!("{}: {e}", path.display())),
            Ok(bytes) => match ingest::parse(&bytes) {
                Ok(_) => {
                    let _ = writeln!(out, "ok {}", path.display());
                }
                Err(errs) => problems.push(located(path, &errs)),
            },
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        print!("{out}");
        Err(Failure(problems.join("\n")))
    }
}

fn summary(report: &GapReport, flows: &FlowRates, view: View) -> Result<String, Failure> {
    let r30 = leadership_r30(flows, view)?;
    let class = mansfield_core::equilibrium::classify(r30, report.epsilon);
    let band = report.band.map_or("combined", |b| b.token());
    Ok(format!(
        "{band} {} r30={} {}",
        view.token(),
        report::format_fixed(r30, 2),
        class.token()
    ))
}

fn gap(cli: &Cli, path: &Path, output: &OutputArgs) -> Outcome {
    let data = load(path)?;
    let flows = flows_of(path, &data)?;
    let report = gap_report(&data.population, flows, Some(data.band()), cli.epsilon)?;
    let format: Format = output.format.into();
    let views = output.view.views();
    let mut out = String::new();
    match &output.out {
        Some(dir) => {
            let chart = report::render_supply_chart(&report);
            for &view in &views {
                let stem = format!("{}-{}", data.band(), view.token());
                let table = report::render_gap_table(&report, &[view], format, cli.precision);
                write(dir, &format!("{stem}-table.{}", format.extension()), &table)?;
                write(dir, &format!("{stem}-chart.svg"), &chart)?;
            }
        }
        None => {
            out.push_str(&String::from_utf8_lossy(&report::render_gap_table(
                &report,
                &views,
                format,
                cli.precision,
            )));
            out.push('\n');
        }
    }
    for &view in &views {
        out.push_str(&summary(&report, flows, view)?);
        out.push('\n');
    }
    Ok(out)
}

fn trajectory(
    data: &DatasetFile,
    flows: &FlowRates,
    scenario: &projection::Scenario,
    view: View,
    out: Option<&Path>,
) -> Result<projection::Horizon, Failure> {
    let traj = projection::project(&data.population, flows, scenario, StepConfig::default())?;
    let horizon = projection::horizon_of(&r30_series(&traj, view)?);
    if let Some(dir) = out {
        let art = report::render_trajectory(&traj, view)?;
        let stem = format!("{}-{}-trajectory", data.band(), view.token());
        write(dir, &format!("{stem}.csv"), &art.csv)?;
        write(dir, &format!("{stem}.svg"), &art.svg)?;
    }
    Ok(horizon)
}

fn load_scenario(path: &Path, years: Option<usize>) -> Result<projection::Scenario, Failure> {
    let mut scenario =
        ingest::parse_scenario(&read(path)?).map_err(|errs| Failure(located(path, &errs)))?;
    if let Some(y) = years {
        scenario.years = y;
        scenario.validate()?;
    }
    Ok(scenario)
}

fn project(
    dataset: &Path,
    scenario: &Path,
    years: Option<usize>,
    view: ViewArg,
    out: Option<&Path>,
) -> Outcome {
    let data = load(dataset)?;
    let flows = flows_of(dataset, &data)?;
    let scenario = load_scenario(scenario, years)?;
    let mut text = String::new();
    for v in view.views() {
        let horizon = trajectory(&data, flows, &scenario, v, out)?;
        let _ = writeln!(text, "{} {} feasible_at={horizon}", data.band(), v.token());
    }
    Ok(text)
}

fn pool(seed: u64, args: &PoolArgs, execution: Execution) -> Outcome {
    let policy = match &args.policy {
        Some(path) => {
            ingest::parse_pool_policy(&read(path)?).map_err(|errs| Failure(located(path, &errs)))?
        }
        None => PoolPolicy::new(args.pool_size, args.share, args.pools, args.probs.clone())?,
    };
    let allocation = poolmodel::allocate_pools(&policy)?;
    let exact = poolmodel::diverse_hire_rate(&policy)?;
    let gap = poolmodel::gap_to_nominal(&policy)?;
    let mc = poolmodel::hire_rate_monte_carlo(&policy, seed, args.trials, execution)?;
    let alloc: Vec<String> = allocation.iter().map(u32::to_string).collect();
    Ok(format!(
        "allocation={}\nexact={}\nmc={} ± {} (trials={})\ngap={}\n",
        alloc.join(","),
        report::format_fixed(exact, 3),
        report::format_fixed(mc.mean, 6),
        report::format_fixed(mc.std_error, 6),
        mc.trials,
        report::format_fixed(gap, 3),
    ))
}

fn report_all(
    cli: &Cli,
    datasets: &[PathBuf],
    out: &Path,
    format: Format,
    scenario: Option<&Path>,
) -> Outcome {
    let scenario = scenario.map(|p| load_scenario(p, None)).transpose()?;
    let mut text = String::new();
    for path in datasets {
        let data = load(path)?;
        let flows = flows_of(path, &data)?;
        let report = gap_report(&data.population, flows, Some(data.band()), cli.epsilon)?;
        let chart = report::render_supply_chart(&report);
        for view in View::ALL {
            let stem = format!("{}-{}", data.band(), view.token());
            let table = report::render_gap_table(&report, &[view], format, cli.precision);
            write(out, &format!("{stem}-table.{}", format.extension()), &table)?;
            write(out, &format!("{stem}-chart.svg"), &chart)?;
            text.push_str(&summary(&report, flows, view)?);
            text.push('\n');
            if let Some(sc) = &scenario {
                let horizon = trajectory(&data, flows, sc, view, Some(out))?;
                let _ = writeln!(
                    text,
                    "{} {} feasible_at={horizon}",
                    data.band(),
                    view.token()
                );
            }
        }
    }
    Ok(text)
}

//! Seeded agent-level Monte Carlo used to cross-check the recurrences.
//!
//! Headcount flows are turned into per-agent annual probabilities by dividing
//! by the source population at the start of the simulation. Each agent then
//! independently attrites, retires, is promoted, or stays. Lateral hires
//! arrive as new agents (fractional headcounts are stochastically rounded).
//!
//! `Sampling::Grouped` draws the per-cell outcome counts from the multinomial
//! distribution that independent per-agent draws induce, via a chain of
//! conditional binomials; `Sampling::PerAgent` loops over agents one by one.
//! Both have the same distribution; the grouped form is what makes 10^6-agent
//! populations cheap.
//!
//! Replication `r` always uses ChaCha stream `r` of the seed, and replication
//! statistics are merged in fixed-size chunks in index order, so results are
//! bitwise identical for any thread count.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{AssociateInflow, FlowError, FlowRates, StepConfig};
use crate::domain::{AtomicSegment, JobLevel, PopulationSnapshot};
use crate::exec::{self, Execution};

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Grouped,
    PerAgent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOptions {
    pub seed: u64,
    pub replications: usize,
    pub sampling: Sampling,
    pub execution: Execution,
    pub config: StepConfig,
}

impl AgentOptions {
    pub fn new(seed: u64, replications: usize) -> Self {
        AgentOptions {
            seed,
            replications,
            sampling: Sampling::default(),
            execution: Execution::default(),
            config: StepConfig::default(),
        }
    }

    pub fn sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn config(mut self, config: StepConfig) -> Self {
        self.config = config;
        self
    }
}

/// Replication mean and standard error of the mean per (level, segment).
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEstimate {
    mean: [[f64; 4]; 6],
    std_error: [[f64; 4]; 6],
    replications: usize,
}

impl AgentEstimate {
    pub fn mean(&self, level: JobLevel, segment: AtomicSegment) -> f64 {
        self.mean[level.index()][segment.index()]
    }

    pub fn std_error(&self, level: JobLevel, segment: AtomicSegment) -> f64 {
        self.std_error[level.index()][segment.index()]
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    /// Fraction of cells whose mean is within `k` standard errors of `expected`.
    pub fn agreement(&self, expected: &PopulationSnapshot, k: f64) -> f64 {
        let mut hits = 0usize;
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let diff = (self.mean(level, seg) - expected.count(level, seg)).abs();
                if diff
                    <= k * self.std_error(level, seg) + 1e-9 * expected.count(level, seg).max(1.0)
                {
                    hits += 1;
                }
            }
        }
        hits as f64 / 24.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Dest {
    Exit,
    Move(JobLevel),
    /// The agent stays and a copy joins `JobLevel`; the literal associate
    /// reading without a source outflow.
    Copy(JobLevel),
}

#[derive(Debug, Clone)]
struct CellPlan {
    level: JobLevel,
    seg: AtomicSegment,
    outcomes: Vec<(f64, Dest)>,
}

#[derive(Debug, Clone, Copy)]
enum Hiring {
    Absolute(f64),
    PerAgent(f64),
}

#[derive(Debug, Clone)]
struct Plan {
    initial: [[f64; 4]; 6],
    cells: Vec<CellPlan>,
    hiring: [[Hiring; 4]; 6],
    years: usize,
}

impl Plan {
    fn build(
        snapshot: &PopulationSnapshot,
        rates: &FlowRates,
        config: StepConfig,
        years: usize,
        per_capita_hiring: bool,
    ) -> Result<Plan, FlowError> {
        rates.validate()?;
        if config.inflow == AssociateInflow::AllLower {
            return Err(FlowError::UnsupportedConfig);
        }
        let mut cells = Vec::with_capacity(24);
        let mut hiring = [[Hiring::Absolute(0.0); 4]; 6];
        for level in JobLevel::ALL {
            for seg in AtomicSegment::ALL {
                let n = snapshot.count(level, seg);
                let cell = rates.cell(level, seg);
                let mut flows: Vec<(f64, Dest)> =
                    vec![(cell.attrition, Dest::Exit), (cell.retirement, Dest::Exit)];
                for dest in JobLevel::ALL {
                    flows.push((cell.promotion[dest.index()], Dest::Move(dest)));
                }
                let headcount_out: f64 = flows.iter().map(|(v, _)| v).sum();
                let mut outcomes: Vec<(f64, Dest)> = Vec::new();
                if n > 0.0 {
                    outcomes.extend(
                        flows
                            .into_iter()
                            .filter(|(v, _)| *v > 0.0)
                            .map(|(v, d)| (v / n, d)),
                    );
                } else if headcount_out > 0.0 {
                    return Err(FlowError::InfeasibleProbability {
                        level,
                        segment: seg,
                        total: f64::INFINITY,
                    });
                }
                if let Some(next) = level.next_associate() {
                    let p = cell.promotion_rate * cell.retention;
                    if p > 0.0 {
                        let dest = if config.promoted_leave_source {
                            Dest::Move(next)
                        } else {
                            Dest::Copy(next)
                        };
                        outcomes.push((p, dest));
                    }
                }
                let total: f64 = outcomes
                    .iter()
                    .filter(|(_, d)| !matches!(d, Dest::Copy(_)))
                    .map(|(p, _)| p)
                    .sum();
                if total > 1.0 + 1e-12 || outcomes.iter().any(|(p, _)| *p > 1.0 + 1e-12) {
                    return Err(FlowError::InfeasibleProbability {
                        level,
                        segment: seg,
                        total,
                    });
                }
                cells.push(CellPlan {
                    level,
                    seg,
                    outcomes,
                });
                hiring[level.index()][seg.index()] =
                    if per_capita_hiring && n > 0.0 && level != JobLevel::JuniorAssociate {
                        Hiring::PerAgent(cell.lateral_in / n)
                    } else {
                        Hiring::Absolute(cell.lateral_in)
                    };
            }
        }
        Ok(Plan {
            initial: *snapshot.grid(),
            cells,
            hiring,
            years,
        })
    }

    fn replicate(&self, seed: u64, index: u64, sampling: Sampling) -> [[f64; 4]; 6] {
        let mut rng = exec::stream_rng(seed, b"agents\0\0", index);
        let mut agents = [[0u64; 4]; 6];
        for (row, init) in agents.iter_mut().zip(self.initial.iter()) {
            for (a, x) in row.iter_mut().zip(init.iter()) {
                *a = stochastic_round(*x, &mut rng);
            }
        }
        for _ in 0..self.years {
            let mut next = [[0u64; 4]; 6];
            for plan in &self.cells {
                let (l, s) = (plan.level.index(), plan.seg.index());
                let n = agents[l][s];
                let counts = match sampling {
                    Sampling::Grouped => grouped_counts(n, &plan.outcomes, &mut rng),
                    Sampling::PerAgent => per_agent_counts(n, &plan.outcomes, &mut rng),
                };
                let mut moved = 0u64;
                for (k, (_, dest)) in counts.iter().zip(plan.outcomes.iter()) {
                    match dest {
                        Dest::Exit => moved += k,
                        Dest::Move(d) => {
                            moved += k;
                            next[d.index()][s] += k;
                        }
                        Dest::Copy(d) => next[d.index()][s] += k,
                    }
                }
                next[l][s] += n - moved;
            }
            for level in JobLevel::ALL {
                for seg in AtomicSegment::ALL {
                    let (l, s) = (level.index(), seg.index());
                    let hires = match self.hiring[l][s] {
                        Hiring::Absolute(h) => h,
                        Hiring::PerAgent(rate) => rate * agents[l][s] as f64,
                    };
                    next[l][s] += stochastic_round(hires, &mut rng);
                }
            }
            agents = next;
        }
        agents.map(|row| row.map(|a| a as f64))
    }
}

fn stochastic_round(x: f64, rng: &mut impl Rng) -> u64 {
    let floor = x.floor();
    let frac = x - floor;
    let bump = frac > 0.0 && rng.random::<f64>() < frac;
    floor as u64 + u64::from(bump)
}

/// Multinomial outcome counts for `n` agents, the remainder staying put.
/// `Copy` outcomes do not consume agents and are drawn as separate binomials.
fn grouped_counts(n: u64, outcomes: &[(f64, Dest)], rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; outcomes.len()];
    let mut remaining = n;
    let mut mass = 1.0f64;
    for (i, (p, dest)) in outcomes.iter().enumerate() {
        if let Dest::Copy(_) = dest {
            counts[i] = binomial(n, *p, rng);
            continue;
        }
        if remaining == 0 || mass <= 0.0 {
            continue;
        }
        let k = binomial(remaining, (p / mass).min(1.0), rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

fn binomial(n: u64, p: f64, rng: &mut impl Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("probability in (0, 1)")
        .sample(rng)
}

fn per_agent_counts(n: u64, outcomes: &[(f64, Dest)], rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; outcomes.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, (p, dest)) in outcomes.iter().enumerate() {
            if let Dest::Copy(_) = dest {
                continue;
            }
            acc += p;
            if u < acc {
                counts[i] += 1;
                break;
            }
        }
        for (i, (p, dest)) in outcomes.iter().enumerate() {
            if let Dest::Copy(_) = dest {
                if rng.random::<f64>() < *p {
                    counts[i] += 1;
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n / n;
        self.m2 += other.m2 + d * d * self.n * other.n / n;
        self.n = n;
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

fn run(plan: &Plan, options: &AgentOptions) -> AgentEstimate {
    let reps = options.replications;
    let chunks = reps.div_ceil(CHUNK);
    let partials = exec::map_indexed(options.execution, chunks, |c| {
        let mut m = [[Moments::default(); 4]; 6];
        for r in (c * CHUNK)..((c + 1) * CHUNK).min(reps) {
            let grid = plan.replicate(options.seed, r as u64, options.sampling);
            for (mrow, grow) in m.iter_mut().zip(grid.iter()) {
                for (cell, x) in mrow.iter_mut().zip(grow.iter()) {
                    cell.push(*x);
                }
            }
        }
        m
    });
    let mut total = [[Moments::default(); 4]; 6];
    for part in &partials {
        for (trow, prow) in total.iter_mut().zip(part.iter()) {
            for (t, p) in trow.iter_mut().zip(prow.iter()) {
                t.merge(p);
            }
        }
    }
    AgentEstimate {
        mean: total.map(|row| row.map(|m| m.mean)),
        std_error: total.map(|row| row.map(|m| m.std_error())),
        replications: reps,
    }
}

/// One simulated year per replication, lateral hires as absolute headcounts.
pub fn simulate_agents(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    options: &AgentOptions,
) -> Result<AgentEstimate, FlowError> {
    let plan = Plan::build(snapshot, rates, options.config, 1, false)?;
    Ok(run(&plan, options))
}

/// Several years with per-agent probabilities frozen at their initial values.
///
/// Lateral hires scale with the agent count of their destination cell, except
/// junior-associate entry hiring (and hiring into initially empty cells),
/// which stays at its absolute level.
pub fn simulate_agent_years(
    snapshot: &PopulationSnapshot,
    rates: &FlowRates,
    years: usize,
    options: &AgentOptions,
) -> Result<AgentEstimate, FlowError> {
    let plan = Plan::build(snapshot, rates, options.config, years, true)?;
    Ok(run(&plan, options))
}

//! Candidate-slate arithmetic: how a 30% diversity share spreads over small
//! pools, and what hire rate that produces under a per-composition hire
//! probability table.
//!
//! The model assumes one hire per pool and that each opening draws a pool
//! uniformly at random.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::exec::{self, Execution};

const MC_BATCH: u64 = 10_000;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error("pool size must be positive")]
    ZeroPoolSize,
    #[error("number of pools must be positive")]
    ZeroPools,
    #[error("diversity share must lie in [0, 1], got {0}")]
    BadShare(f64),
    #[error("hire probability for {diverse} diverse candidates must lie in [0, 1], got {value}")]
    BadProbability { diverse: u32, value: f64 },
    #[error(
        "hire probability given for {diverse} diverse candidates but pools hold only {pool_size}"
    )]
    CountOutOfRange { diverse: u32, pool_size: u32 },
    #[error("a pool with no diverse candidate cannot produce a diverse hire (got {0})")]
    NonZeroEmptyPool(f64),
    #[error("cannot allocate {total} diverse candidates over {pools} pools using only {floor} and {ceil} per pool")]
    Allocation {
        total: f64,
        pools: u32,
        floor: u32,
        ceil: u32,
    },
    #[error("no hire probability for pools with {0} diverse candidates")]
    MissingProbability(u32),
    #[error("Monte Carlo needs at least one trial")]
    NoTrials,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolPolicy {
    pool_size: u32,
    diversity_share: f64,
    num_pools: u32,
    hire_prob: BTreeMap<u32, f64>,
}

impl PoolPolicy {
    pub fn new(
        pool_size: u32,
        diversity_share: f64,
        num_pools: u32,
        hire_prob: BTreeMap<u32, f64>,
    ) -> Result<Self, PoolError> {
        if pool_size == 0 {
            return Err(PoolError::ZeroPoolSize);
        }
        if num_pools == 0 {
            return Err(PoolError::ZeroPools);
        }
        if !(0.0..=1.0).contains(&diversity_share) {
            return Err(PoolError::BadShare(diversity_share));
        }
        for (&diverse, &value) in &hire_prob {
            if !(0.0..=1.0).contains(&value) {
                return Err(PoolError::BadProbability { diverse, value });
            }
            if diverse > pool_size {
                return Err(PoolError::CountOutOfRange { diverse, pool_size });
            }
        }
        if let Some(&p) = hire_prob.get(&0) {
            if p != 0.0 {
                return Err(PoolError::NonZeroEmptyPool(p));
            }
        }
        Ok(PoolPolicy {
            pool_size,
            diversity_share,
            num_pools,
            hire_prob,
        })
    }

    /// Pools of four, a 30% share spread over five pools, and the external
    /// "hbr-2016" hire probabilities: 0 with one diverse finalist, 0.5 with two.
    ///
    /// The probabilities are an imported empirical assumption, not something
    /// this model derives.
    pub fn hbr_2016() -> Self {
        PoolPolicy::new(4, 0.3, 5, hbr_2016_table()).expect("valid default policy")
    }

    pub fn pool_size(&self) -> u32 {
        self.pool_size
    }

    pub fn diversity_share(&self) -> f64 {
        self.diversity_share
    }

    pub fn num_pools(&self) -> u32 {
        self.num_pools
    }

    pub fn hire_prob(&self) -> &BTreeMap<u32, f64> {
        &self.hire_prob
    }

    /// Pools with no diverse candidate never yield a diverse hire.
    pub fn hire_probability(&self, diverse: u32) -> Result<f64, PoolError> {
        match self.hire_prob.get(&diverse) {
            Some(p) => Ok(*p),
            None if diverse == 0 => Ok(0.0),
            None => Err(PoolError::MissingProbability(diverse)),
        }
    }

    /// Expected diverse candidates per pool, `f * n`.
    pub fn diverse_per_pool(&self) -> f64 {
        snap(self.diversity_share * self.pool_size as f64)
    }
}

/// The "hbr-2016" table on its own.
pub fn hbr_2016_table() -> BTreeMap<u32, f64> {
    BTreeMap::from([(1, 0.0), (2, 0.5)])
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x
    }
}

/// Diverse candidates per pool: floor-count pools first, then as few
/// ceiling-count pools as the rounded total requires (halves round up).
pub fn allocate_pools(policy: &PoolPolicy) -> Result<Vec<u32>, PoolError> {
    let per_pool = policy.diverse_per_pool();
    let pools = policy.num_pools;
    let exact_total = snap(per_pool * pools as f64);
    let total = if (exact_total - exact_total.floor() - 0.5).abs() < SNAP {
        exact_total.floor() + 1.0
    } else {
        exact_total.round()
    };
    let floor = per_pool.floor() as u32;
    let ceil = per_pool.ceil() as u32;
    let base = floor as f64 * pools as f64;
    let extra = total - base;
    let fits = extra >= 0.0
        && (ceil > floor || extra == 0.0)
        && extra <= (ceil - floor) as f64 * pools as f64;
    if !fits {
        return Err(PoolError::Allocation {
            total: exact_total,
            pools,
            floor,
            ceil,
        });
    }
    let extra = extra as u32;
    let mut out = vec![floor; (pools - extra) as usize];
    out.extend(std::iter::repeat_n(ceil, extra as usize));
    Ok(out)
}

/// Probability that a uniformly chosen opening ends in a diverse hire.
pub fn diverse_hire_rate(policy: &PoolPolicy) -> Result<f64, PoolError> {
    let allocation = allocate_pools(policy)?;
    let mut sum = 0.0;
    for d in &allocation {
        sum += policy.hire_probability(*d)?;
    }
    Ok(sum / allocation.len() as f64)
}

/// `diverse_hire_rate - diversity_share`.
pub fn gap_to_nominal(policy: &PoolPolicy) -> Result<f64, PoolError> {
    Ok(diverse_hire_rate(policy)? - policy.diversity_share)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Samples a pool uniformly, then a Bernoulli hire with that pool's
/// probability. Batch `b` uses ChaCha stream `b`; hit counts are summed as
/// integers so the estimate does not depend on thread count.
pub fn hire_rate_monte_carlo(
    policy: &PoolPolicy,
    seed: u64,
    trials: u64,
    execution: Execution,
) -> Result<McEstimate, PoolError> {
    if trials == 0 {
        return Err(PoolError::NoTrials);
    }
    let allocation = allocate_pools(policy)?;
    let probs: Vec<f64> = allocation
        .iter()
        .map(|d| policy.hire_probability(*d))
        .collect::<Result<_, _>>()?;
    let batches = trials.div_ceil(MC_BATCH);
    let hits: u64 = exec::map_indexed(execution, batches as usize, |b| {
        let b = b as u64;
        let mut rng = exec::stream_rng(seed, b"poolmc\0\0", b);
        let n = MC_BATCH.min(trials - b * MC_BATCH);
        let mut hits = 0u64;
        for _ in 0..n {
            let pool = rng.random_range(0..probs.len());
            let p = probs[pool];
            // draw unconditionally to keep streams aligned across policies
            let u: f64 = rng.random();
            if u < p {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    let mean = hits as f64 / trials as f64;
    Ok(McEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
        trials,
    })
}

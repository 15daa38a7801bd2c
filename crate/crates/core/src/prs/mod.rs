//! Partition refinement search.
//!
//! The parameter domain starts as one partition. Each iteration picks a
//! partition, samples parameters uniformly inside it, runs one episode, and
//! splits the partition along the interval of parameter values that would
//! have produced the same rule sequence. The hypothesized optimum is the
//! partition with the lowest mean cost, preferring partitions that reached
//! the goal at least once.
//!
//! With several workers the domain is first cut into equal slabs along the
//! first parameter, one slab per worker; each worker refines its own pool
//! and publishes its best partition to a shared table.

mod partition;
mod select;

use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bsq::BsqPreference;
use crate::interval::{IntervalError, IntervalSet, ParamBox};
use crate::policy::{simulate_with_interval, PolicyError};
use crate::pomdp::GPomdp;
use crate::scalar::Scalar;
use crate::seeding::derive_seed;

pub use partition::{refine, Partition, RunningStats};
pub use select::{boltzmann_weights, exploration_rate, select_partition, SelectParams, Selector};

/// Length of the run the iteration-mode snapshot clock pretends to be.
pub const VIRTUAL_RUN_SECONDS: f64 = 1500.0;
/// Snapshots taken over an iteration-budget run.
pub const SNAPSHOTS_PER_RUN: u64 = 120;

#[derive(Debug, Error)]
pub enum PrsError {
    #[error("solver budget is zero")]
    ZeroBudget,
    #[error("leaf interval does not meet the sampled partition")]
    DisjointLeaf,
    #[error("unknown selector '{0}'")]
    UnknownSelector(String),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub selector: Selector,
    /// Episode budget. At least one of `iterations` and `seconds` is set.
    pub iterations: Option<u64>,
    pub seconds: Option<f64>,
    pub e0: f64,
    pub e_min: f64,
    pub min_samples: u64,
    pub workers: usize,
    pub seed: u64,
    /// Wall-clock snapshot period when only `seconds` is set. With an
    /// iteration budget, snapshots are taken every `iterations / 120`
    /// episodes on a virtual 1500 s clock.
    pub snapshot_period: f64,
    pub boltzmann_positive_exponent: bool,
    /// Check tiling and sample containment after every episode.
    pub verify_tiling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            selector: Selector::EpsilonGreedy,
            iterations: Some(100_000),
            seconds: Some(60.0),
            e0: 0.3,
            e_min: 0.01,
            min_samples: 5,
            workers: 8,
            seed: 0,
            snapshot_period: 12.5,
            boltzmann_positive_exponent: false,
            verify_tiling: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PrsError> {
        match (self.iterations, self.seconds) {
            (None, None) | (Some(0), _) => return Err(PrsError::ZeroBudget),
            (_, Some(s)) if !(s > 0.0) => return Err(PrsError::ZeroBudget),
            _ => {}
        }
        if !(self.e_min > 0.0 && self.e0 >= self.e_min) {
            return Err(PrsError::InvalidConfig("need e0 >= e_min > 0".into()));
        }
        if self.min_samples < 1 {
            return Err(PrsError::InvalidConfig(
                "min_samples must be at least 1".into(),
            ));
        }
        if self.workers < 1 {
            return Err(PrsError::InvalidConfig("workers must be at least 1".into()));
        }
        if !(self.snapshot_period > 0.0) {
            return Err(PrsError::InvalidConfig(
                "snapshot_period must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T> {
    pub elapsed_s: f64,
    pub best_mean_cost: f64,
    pub best_goal_rate: f64,
    pub n_partitions: usize,
    pub total_samples: u64,
    pub best_interval: IntervalSet<T>,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub best: Partition<T>,
    pub history: Vec<Snapshot<T>>,
    pub total_samples: u64,
    /// Final partitions of all workers.
    pub partitions: Vec<Partition<T>>,
    pub elapsed_s: f64,
}

impl<T: Scalar> SolveResult<T> {
    /// Uniform draw from the best partition with a stream of its own.
    pub fn sample_best(&self, seed: u64) -> Result<Vec<T>, PrsError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX - 1));
        Ok(self.best.interval.sample_uniform(&mut rng)?)
    }
}

/// Order of the hypothesized optimum: solutions first, then lower mean,
/// then canonical interval order.
pub fn optimum_cmp<T: Scalar>(a: &Partition<T>, b: &Partition<T>) -> Ordering {
    b.is_solution()
        .cmp(&a.is_solution())
        .then(
            a.mean_cost()
                .partial_cmp(&b.mean_cost())
                .unwrap_or(Ordering::Equal),
        )
        .then_with(|| a.interval.canonical_cmp(&b.interval))
}

fn argopt<T: Scalar>(pool: &[Partition<T>]) -> usize {
    let mut best = 0;
    for i in 1..pool.len() {
        if optimum_cmp(&pool[i], &pool[best]) == Ordering::Less {
            best = i;
        }
    }
    best
}

struct Shared<T> {
    done: AtomicU64,
    n_partitions: AtomicUsize,
    stop: AtomicBool,
    bests: Mutex<Vec<Option<Partition<T>>>>,
    history: Mutex<Vec<Snapshot<T>>>,
    next_snapshot: AtomicU64,
    start: Instant,
}

impl<T: Scalar> Shared<T> {
    fn global_best(&self) -> Option<Partition<T>> {
        let bests = self.bests.lock().expect("poisoned");
        bests
            .iter()
            .flatten()
            .min_by(|a, b| optimum_cmp(a, b))
            .cloned()
    }

    fn snapshot(&self, elapsed_s: f64, total_samples: u64) {
        if let Some(b) = self.global_best() {
            self.history.lock().expect("poisoned").push(Snapshot {
                elapsed_s,
                best_mean_cost: b.mean_cost(),
                best_goal_rate: b.goal_rate(),
                n_partitions: self.n_partitions.load(AtomicOrdering::SeqCst),
                total_samples,
                best_interval: b.interval,
            });
        }
    }
}

struct Run<'a, T> {
    model: &'a GPomdp<T>,
    pref: &'a BsqPreference<T>,
    horizon: usize,
    cfg: &'a SolverConfig,
    shared: &'a Shared<T>,
}

impl<T: Scalar> Run<'_, T> {
    fn progress(&self, done: u64) -> f64 {
        let mut f: f64 = 0.0;
        if let Some(n) = self.cfg.iterations {
            f = f.max(done as f64 / n as f64);
        }
        if let Some(s) = self.cfg.seconds {
            f = f.max(self.shared.start.elapsed().as_secs_f64() / s);
        }
        f
    }

    fn out_of_time(&self) -> bool {
        self.cfg
            .seconds
            .is_some_and(|s| self.shared.start.elapsed().as_secs_f64() >= s)
    }

    /// Records every snapshot due after `done` completed episodes.
    fn maybe_snapshot(&self, done: u64) {
        let sh = self.shared;
        loop {
            let k = sh.next_snapshot.load(AtomicOrdering::SeqCst);
            let due = match self.cfg.iterations {
                Some(n) => {
                    let at = (k * n).div_ceil(SNAPSHOTS_PER_RUN);
                    (k <= SNAPSHOTS_PER_RUN && done >= at)
                        .then(|| VIRTUAL_RUN_SECONDS * at as f64 / n as f64)
                }
                None => {
                    let t = sh.start.elapsed().as_secs_f64();
                    (t >= k as f64 * self.cfg.snapshot_period)
                        .then_some(k as f64 * self.cfg.snapshot_period)
                }
            };
            let Some(t) = due else { break };
            if sh
                .next_snapshot
                .compare_exchange(k, k + 1, AtomicOrdering::SeqCst, AtomicOrdering::SeqCst)
                .is_ok()
                && k > 0
            {
                sh.snapshot(t, done);
            }
        }
    }

    fn worker(
        &self,
        id: usize,
        region: IntervalSet<T>,
        seed: u64,
    ) -> Result<Vec<Partition<T>>, PrsError> {
        let cfg = self.cfg;
        let sh = self.shared;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let volume = region.volume().as_f64();
        let mut pool = vec![Partition::new(region)];
        let mut best = 0usize;
        sh.bests.lock().expect("poisoned")[id] = Some(pool[0].clone());

        'outer: while !sh.stop.load(AtomicOrdering::Relaxed) {
            if self.out_of_time() {
                break;
            }
            let done = sh.done.load(AtomicOrdering::SeqCst);
            let params = SelectParams {
                e_r: exploration_rate(self.progress(done), cfg.e0, cfg.e_min),
                global_best: if cfg.selector == Selector::GlobalThompson {
                    sh.global_best().map_or(f64::INFINITY, |b| b.mean_cost())
                } else {
                    f64::INFINITY
                },
                min_samples: cfg.min_samples,
                boltzmann_positive_exponent: cfg.boltzmann_positive_exponent,
            };
            for idx in select_partition(&pool, cfg.selector, &params, &mut rng) {
                let claimed = sh.done.fetch_add(1, AtomicOrdering::SeqCst);
                if cfg.iterations.is_some_and(|n| claimed >= n) {
                    sh.stop.store(true, AtomicOrdering::Relaxed);
                    break 'outer;
                }
                let theta = pool[idx].interval.sample_uniform(&mut rng)?;
                let (rec, leaf) =
                    simulate_with_interval(self.model, self.pref, &theta, self.horizon, &mut rng)?;
                if cfg.verify_tiling
                    && (!pool[idx].interval.contains(&theta)? || !leaf.contains(&theta)?)
                {
                    return Err(PrsError::Invariant(
                        "sampled parameters escaped their interval".into(),
                    ));
                }
                let (kept, split) = refine(&pool[idx], &leaf, rec.cost as f64, rec.reached_goal())?;
                pool[idx] = kept;
                if let Some(s) = split {
                    pool.push(s);
                    sh.n_partitions.fetch_add(1, AtomicOrdering::SeqCst);
                }
                let was_best = idx == best;
                if was_best {
                    best = argopt(&pool);
                } else {
                    for cand in [idx, pool.len() - 1] {
                        if optimum_cmp(&pool[cand], &pool[best]) == Ordering::Less {
                            best = cand;
                        }
                    }
                }
                sh.bests.lock().expect("poisoned")[id] = Some(pool[best].clone());
                if cfg.verify_tiling {
                    let v: f64 = pool.iter().map(|p| p.interval.volume().as_f64()).sum();
                    if (v - volume).abs() > 1e-9 || pool.iter().any(|p| p.interval.is_empty()) {
                        return Err(PrsError::Invariant(format!(
                            "pool volume {v} differs from {volume}"
                        )));
                    }
                }
                self.maybe_snapshot(claimed + 1);
                if self.out_of_time() {
                    break 'outer;
                }
            }
        }
        Ok(pool)
    }
}

/// Cuts the domain into `w` equal slabs along the first parameter.
fn slabs<T: Scalar>(pref: &BsqPreference<T>, w: usize) -> Vec<IntervalSet<T>> {
    let full = pref.space.full_box();
    let (lo, hi) = (full.lo[0].as_f64(), full.hi[0].as_f64());
    (0..w)
        .map(|k| {
            let mut b: ParamBox<T> = full.clone();
            b.lo[0] = if k == 0 {
                full.lo[0]
            } else {
                T::of(lo + (hi - lo) * k as f64 / w as f64)
            };
            b.hi[0] = if k + 1 == w {
                full.hi[0]
            } else {
                T::of(lo + (hi - lo) * (k + 1) as f64 / w as f64)
            };
            IntervalSet::from_box(b)
        })
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn prs_solve<T: Scalar>(
    model: &GPomdp<T>,
    pref: &BsqPreference<T>,
    horizon: usize,
    cfg: &SolverConfig,
) -> Result<SolveResult<T>, PrsError> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(PrsError::ZeroBudget);
    }
    let regions = if cfg.workers == 1 {
        vec![pref.space.full()]
    } else {
        slabs(pref, cfg.workers)
    };
    let shared = Shared {
        done: AtomicU64::new(0),
        n_partitions: AtomicUsize::new(regions.len()),
        stop: AtomicBool::new(false),
        bests: Mutex::new(vec![None; regions.len()]),
        history: Mutex::new(Vec::new()),
        next_snapshot: AtomicU64::new(1),
        start: Instant::now(),
    };
    let run = Run {
        model,
        pref,
        horizon,
        cfg,
        shared: &shared,
    };
    let pools: Vec<Result<Vec<Partition<T>>, PrsError>> = if regions.len() == 1 {
        vec![run.worker(0, regions[0].clone(), cfg.seed)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = regions
                .iter()
                .enumerate()
                .map(|(w, r)| {
                    let run = &run;
                    let r = r.clone();
                    s.spawn(move || {
                        let out = run.worker(w, r, derive_seed(cfg.seed, w as u64));
                        if out.is_err() {
                            run.shared.stop.store(true, AtomicOrdering::Relaxed);
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    let mut partitions = Vec::new();
    for p in pools {
        partitions.extend(p?);
    }
    let total = shared.done.load(AtomicOrdering::SeqCst);
    let total = cfg.iterations.map_or(total, |n| total.min(n));
    let elapsed_s = shared.start.elapsed().as_secs_f64();
    let finished = cfg.iterations.is_some_and(|n| total >= n);
    if !finished {
        let t = match cfg.iterations {
            Some(n) => VIRTUAL_RUN_SECONDS * total as f64 / n as f64,
            None => elapsed_s,
        };
        shared.snapshot(t, total);
    }
    let best = partitions[argopt(&partitions)].clone();
    let history = shared.history.into_inner().expect("poisoned");
    Ok(SolveResult {
        best,
        history,
        total_samples: total,
        partitions,
        elapsed_s,
    })
}

//! Monte Carlo evaluation, the RCompliant baseline, and heatmap sweeps.
//!
//! Episode `i` of every evaluation draws from its own stream derived from
//! `(seed, i)`, so policies evaluated with the same seed see the same initial
//! states and the result does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bsq::BsqPreference;
use crate::interval::IntervalError;
use crate::policy::{simulate, PolicyError};
use crate::pomdp::GPomdp;
use crate::prs::RunningStats;
use crate::scalar::Scalar;
use crate::seeding::derive_seed;

pub const DEFAULT_EVAL_RUNS: u64 = 2000;
pub const DEFAULT_HEATMAP_STEP: f64 = 0.02;

/// Stream index used to draw baseline parameter values, kept apart from
/// episode streams.
const TRIAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("run count must be at least 1")]
    NoRuns,
    #[error("heatmap needs a 2-parameter preference, found {0}")]
    NotTwoParameters(usize),
    #[error("heatmap step must be positive, found {0}")]
    BadStep(f64),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub theta: Vec<f64>,
    pub runs: u64,
    pub mean_cost: f64,
    pub stdev: f64,
    pub goal_rate: f64,
    pub seed: u64,
}

impl EvalReport {
    fn from_episodes(theta: Vec<f64>, seed: u64, eps: &[(f64, bool)]) -> Self {
        let mut s = RunningStats::default();
        let mut goals = 0u64;
        for &(c, g) in eps {
            s.push(c);
            goals += g as u64;
        }
        Self {
            theta,
            runs: s.count,
            mean_cost: s.mean,
            stdev: s.stdev(),
            goal_rate: goals as f64 / s.count as f64,
            seed,
        }
    }

    pub fn cost_stderr(&self) -> f64 {
        self.stdev / (self.runs as f64).sqrt()
    }

    pub fn goal_stderr(&self) -> f64 {
        (self.goal_rate * (1.0 - self.goal_rate) / self.runs as f64).sqrt()
    }
}

fn episodes<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    theta: &[T],
    h: usize,
    runs: u64,
    seed: u64,
) -> Result<Vec<(f64, bool)>, BenchError> {
    if runs == 0 {
        return Err(BenchError::NoRuns);
    }
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
            let r = simulate(m, pref, theta, h, &mut rng)?;
            Ok((r.cost as f64, r.reached_goal()))
        })
        .collect()
}

/// Mean cost and goal rate of `pref` at `theta` over `runs` seeded episodes.
pub fn evaluate_policy<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    theta: &[T],
    h: usize,
    runs: u64,
    seed: u64,
) -> Result<EvalReport, BenchError> {
    let eps = episodes(m, pref, theta, h, runs, seed)?;
    Ok(EvalReport::from_episodes(
        theta.iter().map(|t| t.as_f64()).collect(),
        seed,
        &eps,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub trials: Vec<EvalReport>,
    /// All episodes of all trials pooled; `theta` is empty.
    pub aggregate: EvalReport,
}

/// Evaluates `trials` parameter values drawn uniformly from the domain box.
pub fn rcompliant_baseline<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    h: usize,
    trials: usize,
    runs: u64,
    seed: u64,
) -> Result<BaselineReport, BenchError> {
    if trials == 0 {
        return Err(BenchError::NoRuns);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TRIAL_STREAM));
    let full = pref.space.full();
    let mut all = Vec::new();
    let mut reports = Vec::with_capacity(trials);
    for _ in 0..trials {
        let theta = full.sample_uniform(&mut rng)?;
        let eps = episodes(m, pref, &theta, h, runs, seed)?;
        reports.push(EvalReport::from_episodes(
            theta.iter().map(|t| t.as_f64()).collect(),
            seed,
            &eps,
        ));
        all.extend(eps);
    }
    Ok(BaselineReport {
        trials: reports,
        aggregate: EvalReport::from_episodes(Vec::new(), seed, &all),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub theta1: f64,
    pub theta2: f64,
    pub mean_cost: f64,
    pub stdev: f64,
    pub goal_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub step: f64,
    pub runs_per_cell: u64,
    pub horizon: usize,
    /// Row-major with `theta2` varying fastest.
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapGrid {
    pub fn axis(&self, dim: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .cells
            .iter()
            .map(|c| if dim == 0 { c.theta1 } else { c.theta2 })
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Nearest cell to `(t1, t2)`.
    pub fn at(&self, t1: f64, t2: f64) -> &HeatmapCell {
        self.cells
            .iter()
            .min_by(|a, b| {
                let da = (a.theta1 - t1).powi(2) + (a.theta2 - t2).powi(2);
                let db = (b.theta1 - t1).powi(2) + (b.theta2 - t2).powi(2);
                da.total_cmp(&db)
            })
            .expect("non-empty grid")
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta1,theta2,mean_cost,goal_rate")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{}",
                c.theta1, c.theta2, c.mean_cost, c.goal_rate
            )?;
        }
        Ok(())
    }
}

/// Grid points `lo, lo+step, ...` up to and including `hi` when it lands on
/// the grid.
fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

pub fn heatmap_sweep<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    h: usize,
    step: f64,
    runs_per_cell: u64,
    seed: u64,
) -> Result<HeatmapGrid, BenchError> {
    if pref.n_params() != 2 {
        return Err(BenchError::NotTwoParameters(pref.n_params()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(BenchError::BadStep(step));
    }
    if runs_per_cell == 0 {
        return Err(BenchError::NoRuns);
    }
    let dims = pref.space.dims();
    let xs = grid_axis(dims[0].lo.as_f64(), dims[0].hi.as_f64(), step);
    let ys = grid_axis(dims[1].lo.as_f64(), dims[1].hi.as_f64(), step);
    let points: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(x, y)| {
            let theta = [T::of(x), T::of(y)];
            let mut s = RunningStats::default();
            let mut goals = 0u64;
            for i in 0..runs_per_cell {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
                let r = simulate(m, pref, &theta, h, &mut rng)?;
                s.push(r.cost as f64);
                goals += r.reached_goal() as u64;
            }
            Ok(HeatmapCell {
                theta1: x,
                theta2: y,
                mean_cost: s.mean,
                stdev: s.stdev(),
                goal_rate: goals as f64 / runs_per_cell as f64,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(HeatmapGrid {
        step,
        runs_per_cell,
        horizon: h,
        cells,
    })
}

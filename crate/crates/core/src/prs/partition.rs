use serde::{Deserialize, Serialize};

use super::PrsError;
use crate::interval::IntervalSet;
use crate::scalar::Scalar;

/// Welford accumulator over episode costs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stdev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Mean cost, or infinity when nothing has been sampled.
    pub fn estimate(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            self.mean
        }
    }
}

/// A cell of the parameter domain with the evidence gathered for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    pub interval: IntervalSet<T>,
    pub stats: RunningStats,
    pub goal_count: u64,
}

impl<T: Scalar> Partition<T> {
    pub fn new(interval: IntervalSet<T>) -> Self {
        Self {
            interval,
            stats: RunningStats::default(),
            goal_count: 0,
        }
    }

    pub fn mean_cost(&self) -> f64 {
        self.stats.estimate()
    }

    pub fn goal_rate(&self) -> f64 {
        if self.stats.count == 0 {
            0.0
        } else {
            self.goal_count as f64 / self.stats.count as f64
        }
    }

    /// Some sample reached the goal.
    pub fn is_solution(&self) -> bool {
        self.goal_count > 0
    }
}

/// Splits `rho` by a sampled leaf interval. The part inside the leaf keeps
/// the prior evidence plus the new sample; the rest, if any, keeps a copy of
/// the prior evidence.
pub fn refine<T: Scalar>(
    rho: &Partition<T>,
    leaf: &IntervalSet<T>,
    cost: f64,
    reached_goal: bool,
) -> Result<(Partition<T>, Option<Partition<T>>), PrsError> {
    let inside = rho.interval.intersect(leaf)?;
    if inside.is_empty() {
        return Err(PrsError::DisjointLeaf);
    }
    let outside = rho.interval.subtract(leaf)?;
    let mut kept = Partition {
        interval: inside,
        stats: rho.stats,
        goal_count: rho.goal_count,
    };
    kept.stats.push(cost);
    kept.goal_count += reached_goal as u64;
    let split = (!outside.is_empty()).then_some(Partition {
        interval: outside,
        stats: rho.stats,
        goal_count: rho.goal_count,
    });
    Ok((kept, split))
}

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::partition::Partition;
use super::PrsError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    EpsilonGreedy,
    Boltzmann,
    LocalThompson,
    GlobalThompson,
    MaxConfidence,
}

impl Selector {
    pub const ALL: [Selector; 5] = [
        Selector::EpsilonGreedy,
        Selector::Boltzmann,
        Selector::LocalThompson,
        Selector::GlobalThompson,
        Selector::MaxConfidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Selector::EpsilonGreedy => "epsilon_greedy",
            Selector::Boltzmann => "boltzmann",
            Selector::LocalThompson => "local_thompson",
            Selector::GlobalThompson => "global_thompson",
            Selector::MaxConfidence => "max_confidence",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = PrsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "epsilon" | "epsilon_greedy" | "greedy" => Selector::EpsilonGreedy,
            "boltzmann" => Selector::Boltzmann,
            "local_thompson" | "thompson" | "local" => Selector::LocalThompson,
            "global_thompson" | "global" => Selector::GlobalThompson,
            "max_confidence" | "max" => Selector::MaxConfidence,
            _ => return Err(PrsError::UnknownSelector(s.to_string())),
        })
    }
}

/// Linear decay from `e0` at the start to `e_min` at the end of the budget.
pub fn exploration_rate(elapsed_fraction: f64, e0: f64, e_min: f64) -> f64 {
    (e0 * (1.0 - elapsed_fraction.clamp(0.0, 1.0))).max(e_min)
}

/// Knobs shared by all selectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectParams {
    pub e_r: f64,
    /// Mean cost of the current hypothesized optimum.
    pub global_best: f64,
    pub min_samples: u64,
    /// Use `exp(+mean / e_r)` Boltzmann weights instead of `exp(-mean / e_r)`.
    pub boltzmann_positive_exponent: bool,
}

/// Orders by `key`, breaking ties by canonical interval order.
fn better<T: Scalar>(pool: &[Partition<T>], i: usize, j: usize, ki: f64, kj: f64) -> bool {
    match ki.partial_cmp(&kj).unwrap_or(Ordering::Equal) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => pool[i].interval.canonical_cmp(&pool[j].interval) == Ordering::Less,
    }
}

fn argmin_by<T: Scalar>(pool: &[Partition<T>], key: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut bk = key(0);
    for i in 1..pool.len() {
        let k = key(i);
        if better(pool, i, best, k, bk) {
            best = i;
            bk = k;
        }
    }
    best
}

fn normal_draw<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd > 0.0 && sd.is_finite() {
        Normal::new(mean, sd)
            .expect("positive finite sd")
            .sample(rng)
    } else {
        mean
    }
}

/// Indices of the partitions to sample next. Partitions with fewer than
/// `min_samples` samples come first; otherwise the selector decides.
pub fn select_partition<T: Scalar, R: Rng + ?Sized>(
    pool: &[Partition<T>],
    selector: Selector,
    p: &SelectParams,
    rng: &mut R,
) -> Vec<usize> {
    assert!(!pool.is_empty(), "selection from an empty pool");
    let under: Vec<usize> = (0..pool.len())
        .filter(|&i| pool[i].stats.count < p.min_samples)
        .collect();
    if !under.is_empty() {
        return match selector {
            Selector::GlobalThompson => under,
            _ => vec![under[0]],
        };
    }
    let n = pool.len();
    match selector {
        Selector::EpsilonGreedy => {
            if rng.random::<f64>() < p.e_r {
                vec![rng.random_range(0..n)]
            } else {
                vec![argmin_by(pool, |i| pool[i].mean_cost())]
            }
        }
        Selector::MaxConfidence => {
            if rng.random::<f64>() < p.e_r {
                vec![rng.random_range(0..n)]
            } else {
                vec![argmin_by(pool, |i| -pool[i].stats.stdev())]
            }
        }
        Selector::Boltzmann => {
            let w = boltzmann_weights(pool, p.e_r, p.boltzmann_positive_exponent);
            let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    return vec![i];
                }
                u -= wi;
            }
            vec![w.iter().rposition(|&x| x > 0.0).unwrap_or(n - 1)]
        }
        Selector::LocalThompson => {
            let draws: Vec<f64> = pool
                .iter()
                .map(|q| normal_draw(q.mean_cost(), q.stats.stdev() * p.e_r, rng))
                .collect();
            vec![argmin_by(pool, |i| draws[i])]
        }
        Selector::GlobalThompson => {
            let draws: Vec<f64> = pool
                .iter()
                .map(|q| normal_draw(q.mean_cost(), q.stats.stdev() * p.e_r, rng))
                .collect();
            let hits: Vec<usize> = (0..n).filter(|&i| draws[i] < p.global_best).collect();
            if hits.is_empty() {
                vec![argmin_by(pool, |i| draws[i])]
            } else {
                hits
            }
        }
    }
}

/// Normalized Boltzmann selection probabilities.
pub fn boltzmann_weights<T: Scalar>(
    pool: &[Partition<T>],
    e_r: f64,
    positive_exponent: bool,
) -> Vec<f64> {
    let sign = if positive_exponent { 1.0 } else { -1.0 };
    let e_r = e_r.max(f64::MIN_POSITIVE);
    let logits: Vec<f64> = pool.iter().map(|q| sign * q.mean_cost() / e_r).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

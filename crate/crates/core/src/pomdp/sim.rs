use rand::Rng;
use serde::{Deserialize, Serialize};

use super::belief::{belief_update, Belief};
use super::model::GPomdp;
use super::PomdpError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step<T> {
    pub rule: usize,
    /// Belief the rule fired on; absent in lightweight rollouts.
    pub belief: Option<Belief<T>>,
    pub action: usize,
    pub observation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    pub steps: Vec<Step<T>>,
    pub initial_state: usize,
    pub final_state: usize,
    /// Timestep (1-based) of goal entry.
    pub goal_time: Option<usize>,
    pub cost: usize,
}

impl<T> TrajectoryRecord<T> {
    pub fn reached_goal(&self) -> bool {
        self.goal_time.is_some()
    }

    /// `(rule, observation)` path, truncated at goal entry.
    pub fn leaf_key(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|s| (s.rule, s.observation)).collect()
    }
}

fn sample_index(weights: impl Iterator<Item = f64>, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Samples `s' ~ T(s,a,.)` then `o ~ O(s',a,.)`.
pub fn step_simulate<T: Scalar, R: Rng + ?Sized>(
    m: &GPomdp<T>,
    s: usize,
    a: usize,
    rng: &mut R,
) -> (usize, usize) {
    let row = m.transition_row(s, a);
    let u: f64 = rng.random();
    let k = sample_index(row.iter().map(|e| e.1.as_f64()), u).unwrap_or(0);
    let next = row[k].0;
    let u: f64 = rng.random();
    let o = sample_index(m.observation_row(next, a).iter().map(|p| p.as_f64()), u).unwrap_or(0);
    (next, o)
}

/// Runs a policy for at most `h` steps from a hidden state drawn from the
/// initial belief. The policy maps the current belief to `(rule, action)`.
pub fn rollout<T, R, P>(
    m: &GPomdp<T>,
    h: usize,
    rng: &mut R,
    policy: P,
) -> Result<TrajectoryRecord<T>, PomdpError>
where
    T: Scalar,
    R: Rng + ?Sized,
    P: FnMut(&Belief<T>) -> (usize, usize),
{
    run(m, h, rng, policy, true)
}

/// Same as [`rollout`] without storing per-step beliefs.
pub fn rollout_light<T, R, P>(
    m: &GPomdp<T>,
    h: usize,
    rng: &mut R,
    policy: P,
) -> Result<TrajectoryRecord<T>, PomdpError>
where
    T: Scalar,
    R: Rng + ?Sized,
    P: FnMut(&Belief<T>) -> (usize, usize),
{
    run(m, h, rng, policy, false)
}

fn run<T, R, P>(
    m: &GPomdp<T>,
    h: usize,
    rng: &mut R,
    mut policy: P,
    keep: bool,
) -> Result<TrajectoryRecord<T>, PomdpError>
where
    T: Scalar,
    R: Rng + ?Sized,
    P: FnMut(&Belief<T>) -> (usize, usize),
{
    if h == 0 {
        return Err(PomdpError::InvalidModel(
            "horizon must be at least 1".into(),
        ));
    }
    let s0 = m.initial_belief().sample_with(rng.random());
    let mut rec = TrajectoryRecord {
        steps: Vec::new(),
        initial_state: s0,
        final_state: s0,
        goal_time: None,
        cost: h,
    };
    if m.is_goal(s0) {
        rec.goal_time = Some(0);
        rec.cost = 0;
        return Ok(rec);
    }
    let mut s = s0;
    let mut b = m.initial_belief().clone();
    for t in 1..=h {
        let (rule, a) = policy(&b);
        if a >= m.n_actions() {
            return Err(PomdpError::InvalidAction(a));
        }
        let (next, o) = step_simulate(m, s, a, rng);
        let nb = belief_update(m, &b, a, o)?;
        rec.steps.push(Step {
            rule,
            belief: keep.then(|| b.clone()),
            action: a,
            observation: o,
        });
        s = next;
        b = nb;
        if m.is_goal(s) {
            rec.goal_time = Some(t);
            rec.cost = t;
            break;
        }
    }
    rec.final_state = s;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::super::model::GPomdpBuilder;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Corridor 0..=3 with goal at 3; `fwd` moves right, `stay` stays.
    fn corridor() -> GPomdp<f64> {
        let mut b = GPomdpBuilder::new(
            "corridor",
            (0..4).map(|i| format!("c{i}")).collect(),
            vec!["fwd".into(), "stay".into()],
            vec!["none".into()],
        );
        for s in 0..4 {
            let fwd = if s == 3 { 3 } else { s + 1 };
            b.add_transition(s, 0, fwd, 1.0);
            b.add_transition(s, 1, s, 1.0);
            for a in 0..2 {
                b.set_observation(s, a, 0, 1.0);
            }
        }
        b.goal[3] = true;
        b.init = vec![(0, 1.0)];
        b.horizon = 10;
        b.build().unwrap()
    }

    #[test]
    fn goal_at_step_three_costs_three() {
        let m = corridor();
        let r = rollout(&m, 10, &mut ChaCha8Rng::seed_from_u64(0), |_| (0, 0)).unwrap();
        assert_eq!(r.goal_time, Some(3));
        assert_eq!(r.cost, 3);
        assert_eq!(r.steps.len(), 3);
        assert!(r.steps.iter().all(|s| s.belief.is_some()));
    }

    #[test]
    fn never_reaching_goal_costs_horizon() {
        let m = corridor();
        let r = rollout(&m, 7, &mut ChaCha8Rng::seed_from_u64(0), |_| (0, 1)).unwrap();
        assert_eq!(r.goal_time, None);
        assert_eq!(r.cost, 7);
        assert_eq!(r.leaf_key().len(), 7);
    }

    #[test]
    fn sink_goal_stays_put() {
        let m = corridor();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for a in 0..2 {
            for _ in 0..50 {
                assert_eq!(step_simulate(&m, 3, a, &mut rng).0, 3);
            }
        }
        assert_eq!(step_simulate(&m, 1, 0, &mut rng), (2, 0));
    }

    #[test]
    fn empirical_transition_frequency() {
        let mut b = GPomdpBuilder::new(
            "coin",
            vec!["a".into(), "b".into()],
            vec!["flip".into()],
            vec!["none".into()],
        );
        for s in 0..2 {
            b.add_transition(s, 0, 0, 0.7);
            b.add_transition(s, 0, 1, 0.3);
            b.set_observation(s, 0, 0, 1.0);
        }
        b.init = vec![(0, 1.0)];
        let m = b.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| step_simulate(&m, 0, 0, &mut rng).0 == 0)
            .count();
        assert!((hits as f64 / n as f64 - 0.7).abs() < 0.02);
    }

    #[test]
    fn invalid_action_is_reported() {
        let m = corridor();
        let r = rollout(&m, 3, &mut ChaCha8Rng::seed_from_u64(0), |_| (0, 9));
        assert_eq!(r.unwrap_err(), PomdpError::InvalidAction(9));
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let m = corridor();
        let a = rollout(&m, 5, &mut ChaCha8Rng::seed_from_u64(8), |_| (0, 0)).unwrap();
        let b = rollout(&m, 5, &mut ChaCha8Rng::seed_from_u64(8), |_| (0, 0)).unwrap();
        assert_eq!(a, b);
    }
}

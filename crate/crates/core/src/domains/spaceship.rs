//! Spaceship Repair: a robot on a line between two repair stations must
//! reach the station of whichever component (itself or the ship) is broken,
//! observing both components through independent noisy sensors.

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::bsq::{parse_preference, BsqPreference};
use crate::pomdp::{belief_update, sym, GPomdp, GPomdpBuilder};
use crate::scalar::Scalar;

pub const PREFERENCE: &str = include_str!("../../assets/spaceship_repair.bsq");
pub const CONFIG: &str = include_str!("../../assets/spaceship_repair.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceshipRepairConfig {
    pub p_r: f64,
    pub p_s: f64,
    pub station_distance: i64,
    pub horizon: usize,
    #[serde(default, rename = "_comment", skip_serializing)]
    pub comment: Option<String>,
}

impl Default for SpaceshipRepairConfig {
    fn default() -> Self {
        Self {
            p_r: 0.6,
            p_s: 0.75,
            station_distance: 5,
            horizon: 12,
            comment: None,
        }
    }
}

impl SpaceshipRepairConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        for (n, p) in [("p_r", self.p_r), ("p_s", self.p_s)] {
            if !(p > 0.5 && p <= 1.0) {
                return Err(DomainError::InvalidConfig(format!(
                    "{n} must lie in (0.5, 1], got {p}"
                )));
            }
        }
        if self.station_distance < 1 {
            return Err(DomainError::InvalidConfig(
                "station_distance must be at least 1".into(),
            ));
        }
        if self.horizon < 1 {
            return Err(DomainError::InvalidConfig(
                "horizon must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior that a component is broken after its sensor reported "broken"
/// `d` more times than "fine", for sensor accuracy `p`.
pub fn sr_closed_form(d: i32, p: f64) -> f64 {
    let a = p.powi(d);
    let b = (1.0 - p).powi(d);
    a / (a + b)
}

/// Broken-flag combinations in state and observation order.
pub const COMBOS: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

fn tag(c: (bool, bool)) -> String {
    format!(
        "{}{}",
        if c.0 { 'T' } else { 'F' },
        if c.1 { 'T' } else { 'F' }
    )
}

/// Index of the state with flags `combo` (index into [`COMBOS`]) at `loc`.
pub fn sr_state(cfg: &SpaceshipRepairConfig, combo: usize, loc: i64) -> usize {
    let width = (2 * cfg.station_distance + 1) as usize;
    combo * width + (loc + cfg.station_distance) as usize
}

pub fn sr_model<T: Scalar>(cfg: &SpaceshipRepairConfig) -> Result<GPomdp<T>, DomainError> {
    cfg.validate()?;
    let d = cfg.station_distance;
    let locs: Vec<i64> = (-d..=d).collect();
    let mut states = Vec::new();
    for &c in &COMBOS {
        for &l in &locs {
            states.push(format!("{}@{l}", tag(c)));
        }
    }
    let actions = vec![
        "repair(robot)".to_string(),
        "repair(ship)".into(),
        "wait".into(),
    ];
    let observations = COMBOS.iter().map(|&c| format!("o_{}", tag(c))).collect();
    let mut b = GPomdpBuilder::<T>::new("spaceship_repair", states, actions, observations);
    b.horizon = cfg.horizon;

    let is_goal = |c: (bool, bool), l: i64| (c.0 && l == -d) || (c.1 && l == d);
    for (ci, &c) in COMBOS.iter().enumerate() {
        for &l in &locs {
            let s = sr_state(cfg, ci, l);
            b.goal[s] = is_goal(c, l);
            for a in 0..3 {
                let next = if b.goal[s] {
                    l
                } else {
                    match a {
                        0 => (l - 1).max(-d),
                        1 => (l + 1).min(d),
                        _ => l,
                    }
                };
                b.add_transition(s, a, sr_state(cfg, ci, next), T::one());
                for (oi, &o) in COMBOS.iter().enumerate() {
                    let pr = if o.0 == c.0 { cfg.p_r } else { 1.0 - cfg.p_r };
                    let ps = if o.1 == c.1 { cfg.p_s } else { 1.0 - cfg.p_s };
                    b.set_observation(s, a, oi, T::of(pr * ps));
                }
            }
        }
    }
    b.init = (0..4).map(|ci| (sr_state(cfg, ci, 0), T::one())).collect();

    let n = b.states.len();
    let per_state = |f: &dyn Fn((bool, bool), i64) -> f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(n);
        for &c in &COMBOS {
            for &l in &locs {
                v.push(f(c, l));
            }
        }
        v
    };
    b.vocab
        .add_sort("components", vec![sym("robot"), sym("ship")]);
    let robot = per_state(&|c, _| c.0 as i32 as f64);
    let ship = per_state(&|c, _| c.1 as i32 as f64);
    let loc = per_state(&|_, l| l as f64);
    let goal = per_state(&|c, l| is_goal(c, l) as i32 as f64);
    b.vocab
        .define_column("broken", vec![sym("robot")], false, robot);
    b.vocab
        .define_column("broken", vec![sym("ship")], false, ship);
    b.vocab.define_column("rlocation", vec![], true, loc);
    b.vocab.define_column("goal", vec![], false, goal);
    Ok(b.build()?)
}

pub fn build_spaceship_repair<T: Scalar>(
    cfg: &SpaceshipRepairConfig,
) -> Result<(GPomdp<T>, BsqPreference<T>), DomainError> {
    let m = sr_model(cfg)?;
    let p = parse_preference(PREFERENCE, &m)?;
    Ok((m, p))
}

/// Worst disagreement between the filter and [`sr_closed_form`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCheck {
    pub sequences: u64,
    pub max_abs_error: f64,
}

/// Filters every observation sequence of length `1..=max_len` under `wait`
/// and compares both broken-component posteriors with the closed form.
pub fn filter_check(
    cfg: &SpaceshipRepairConfig,
    max_len: usize,
) -> Result<FilterCheck, DomainError> {
    let m = sr_model::<f64>(cfg)?;
    let wait = m.action_index("wait").expect("wait action");
    let robot: Vec<bool> = (0..m.n_states())
        .map(|s| m.states[s].starts_with('T'))
        .collect();
    let ship: Vec<bool> = (0..m.n_states())
        .map(|s| m.states[s].as_bytes()[1] == b'T')
        .collect();
    let mut out = FilterCheck {
        sequences: 0,
        max_abs_error: 0.0,
    };
    // Depth-first over sequences; each frame holds a belief and the two
    // net "broken" report counts that produced it.
    let mut stack = vec![(m.initial_belief().clone(), 0i32, 0i32, 0usize)];
    while let Some((b, dr, ds, len)) = stack.pop() {
        if len == max_len {
            continue;
        }
        for (o, &(r, sh)) in COMBOS.iter().enumerate() {
            let next = belief_update(&m, &b, wait, o)?;
            let (dr, ds) = (dr + if r { 1 } else { -1 }, ds + if sh { 1 } else { -1 });
            let e = (next.mass(&robot) - sr_closed_form(dr, cfg.p_r))
                .abs()
                .max((next.mass(&ship) - sr_closed_form(ds, cfg.p_s)).abs());
            out.max_abs_error = out.max_abs_error.max(e);
            out.sequences += 1;
            stack.push((next, dr, ds, len + 1));
        }
    }
    Ok(out)
}

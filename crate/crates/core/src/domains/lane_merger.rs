//! Lane Merger: the agent must change lanes before a deadline position while
//! another car of unknown position and speed drives in the target lane.
//!
//! Live states are `(loc(agent), speed(agent), loc(other), speed(other))`;
//! three sinks follow: merged (the goal), crashed, and missed (deadline
//! passed). A zone sensor reports whether the other car is behind, beside
//! or ahead of the agent.

use serde::{Deserialize, Serialize};

use super::{indicator, DomainError};
use crate::bsq::{parse_preference, BsqPreference};
use crate::pomdp::{sym, GPomdp, GPomdpBuilder};
use crate::scalar::Scalar;

pub const PREFERENCE: &str = include_str!("../../assets/lane_merger.bsq");
pub const CONFIG: &str = include_str!("../../assets/lane_merger.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneMergerConfig {
    pub road_length: i64,
    pub merge_deadline: i64,
    pub max_speed: i64,
    /// Probability that the zone sensor reports the true zone; the two wrong
    /// zones share the remainder.
    pub sensor_accuracy: f64,
    /// Per-step chance that the other car changes speed by one unit.
    pub speed_change_prob: f64,
    pub agent_start: i64,
    pub agent_speed: i64,
    /// Other car starts uniformly on `other_start[0]..=other_start[1]`.
    pub other_start: [i64; 2],
    /// Other car's speed is uniform on `other_speed[0]..=other_speed[1]`.
    pub other_speed: [i64; 2],
    pub horizon: usize,
    #[serde(default, rename = "_comment", skip_serializing)]
    pub comment: Option<String>,
}

impl Default for LaneMergerConfig {
    fn default() -> Self {
        Self {
            road_length: 20,
            merge_deadline: 14,
            max_speed: 2,
            sensor_accuracy: 0.8,
            speed_change_prob: 0.1,
            agent_start: 0,
            agent_speed: 1,
            other_start: [0, 6],
            other_speed: [0, 2],
            horizon: 40,
            comment: None,
        }
    }
}

impl LaneMergerConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::InvalidConfig(m.to_string()));
        if self.road_length < 2
            || self.merge_deadline <= 0
            || self.merge_deadline >= self.road_length
        {
            return bad("need 0 < merge_deadline < road_length");
        }
        if self.max_speed < 0 {
            return bad("speeds must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.sensor_accuracy)
            || !(0.0..=1.0).contains(&self.speed_change_prob)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.agent_start < 0 || self.agent_start >= self.merge_deadline {
            return bad("agent must start before the deadline");
        }
        if self.agent_speed < 0 || self.agent_speed > self.max_speed {
            return bad("agent_speed out of range");
        }
        let [a, b] = self.other_start;
        if a < 0 || b < a || b >= self.road_length {
            return bad("other_start must be a range on the road");
        }
        let [a, b] = self.other_speed;
        if a < 0 || b < a || b > self.max_speed {
            return bad("other_speed must be a range within [0, max_speed]");
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmState {
    Live { xa: i64, va: i64, xo: i64, vo: i64 },
    Merged,
    Crashed,
    Missed,
}

/// The merge gap condition.
pub fn gap_clear(xa: i64, va: i64, xo: i64, vo: i64) -> bool {
    xa > xo + vo + 2 || xa + va + 2 < xo
}

/// Zone of the other car: 0 behind, 1 beside, 2 ahead.
fn zone(xa: i64, xo: i64) -> usize {
    if xo < xa - 1 {
        0
    } else if xo <= xa + 1 {
        1
    } else {
        2
    }
}

struct Layout {
    l: i64,
    s: i64,
}

impl Layout {
    fn live(&self, xa: i64, va: i64, xo: i64, vo: i64) -> usize {
        (((xa * self.s + va) * self.l + xo) * self.s + vo) as usize
    }
    fn n_live(&self) -> usize {
        (self.l * self.s * self.l * self.s) as usize
    }
}

pub const ACTIONS: [&str; 4] = ["speed_up", "slow_down", "keep_speed", "merge"];

pub fn lm_model<T: Scalar>(cfg: &LaneMergerConfig) -> Result<GPomdp<T>, DomainError> {
    cfg.validate()?;
    let lay = Layout {
        l: cfg.road_length,
        s: cfg.max_speed + 1,
    };
    let mut states = Vec::with_capacity(lay.n_live() + 3);
    for xa in 0..lay.l {
        for va in 0..lay.s {
            for xo in 0..lay.l {
                for vo in 0..lay.s {
                    states.push(LmState::Live { xa, va, xo, vo });
                }
            }
        }
    }
    let (merged, crashed, missed) = (states.len(), states.len() + 1, states.len() + 2);
    states.extend([LmState::Merged, LmState::Crashed, LmState::Missed]);
    let names = states
        .iter()
        .map(|s| match s {
            LmState::Live { xa, va, xo, vo } => format!("a{xa}v{va}_o{xo}v{vo}"),
            LmState::Merged => "merged".into(),
            LmState::Crashed => "crashed".into(),
            LmState::Missed => "missed".into(),
        })
        .collect();
    let obs = vec!["behind".to_string(), "beside".into(), "ahead".into()];
    let mut b = GPomdpBuilder::<T>::new(
        "lane_merger",
        names,
        ACTIONS.iter().map(|a| a.to_string()).collect(),
        obs,
    );
    b.horizon = cfg.horizon;
    b.goal[merged] = true;

    let pc = cfg.speed_change_prob;
    let acc = cfg.sensor_accuracy;
    for (si, st) in states.iter().enumerate() {
        for a in 0..ACTIONS.len() {
            match *st {
                LmState::Live { xa, va, xo, vo } => {
                    if a == 3 {
                        let to = if gap_clear(xa, va, xo, vo) {
                            merged
                        } else {
                            crashed
                        };
                        b.add_transition(si, a, to, T::one());
                    } else {
                        let va2 = match a {
                            0 => (va + 1).min(cfg.max_speed),
                            1 => (va - 1).max(0),
                            _ => va,
                        };
                        let xa2 = xa + va2;
                        if xa2 >= cfg.merge_deadline {
                            b.add_transition(si, a, missed, T::one());
                        } else {
                            let mut spd = vec![(vo, 1.0 - pc)];
                            spd.push(((vo + 1).min(cfg.max_speed), pc / 2.0));
                            spd.push(((vo - 1).max(0), pc / 2.0));
                            for (vo2, p) in spd {
                                if p > 0.0 {
                                    let xo2 = (xo + vo2).min(lay.l - 1);
                                    b.add_transition(si, a, lay.live(xa2, va2, xo2, vo2), T::of(p));
                                }
                            }
                        }
                    }
                }
                _ => b.add_transition(si, a, si, T::one()),
            }
            // the sensor reading describes the state just entered
            match *st {
                LmState::Live { xa, xo, .. } => {
                    let z = zone(xa, xo);
                    for o in 0..3 {
                        let p = if o == z { acc } else { (1.0 - acc) / 2.0 };
                        b.set_observation(si, a, o, T::of(p));
                    }
                }
                _ => {
                    for o in 0..3 {
                        b.set_observation(si, a, o, T::of(1.0 / 3.0));
                    }
                }
            }
        }
    }

    let mut init = Vec::new();
    for xo in cfg.other_start[0]..=cfg.other_start[1] {
        for vo in cfg.other_speed[0]..=cfg.other_speed[1] {
            init.push((lay.live(cfg.agent_start, cfg.agent_speed, xo, vo), T::one()));
        }
    }
    b.init = init;

    let field = |f: fn(&LmState) -> f64| -> Vec<f64> { states.iter().map(f).collect() };
    b.vocab.add_sort("cars", vec![sym("agent"), sym("other")]);
    let xa = field(|s| match s {
        LmState::Live { xa, .. } => *xa as f64,
        _ => -1.0,
    });
    let va = field(|s| match s {
        LmState::Live { va, .. } => *va as f64,
        _ => 0.0,
    });
    let xo = field(|s| match s {
        LmState::Live { xo, .. } => *xo as f64,
        _ => -1.0,
    });
    let vo = field(|s| match s {
        LmState::Live { vo, .. } => *vo as f64,
        _ => 0.0,
    });
    b.vocab.define_column("loc", vec![sym("agent")], true, xa);
    b.vocab.define_column("speed", vec![sym("agent")], true, va);
    b.vocab.define_column("loc", vec![sym("other")], false, xo);
    b.vocab
        .define_column("speed", vec![sym("other")], false, vo);
    b.vocab.define_column(
        "crashed",
        vec![],
        false,
        indicator(&states, |s| *s == LmState::Crashed),
    );
    Ok(b.build()?)
}

pub fn build_lane_merger<T: Scalar>(
    cfg: &LaneMergerConfig,
) -> Result<(GPomdp<T>, BsqPreference<T>), DomainError> {
    let m = lm_model(cfg)?;
    let p = parse_preference(PREFERENCE, &m)?;
    Ok((m, p))
}

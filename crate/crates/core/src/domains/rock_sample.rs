//! Graph Rock Sample: a rover moves over a waypoint graph, scans rocks with a
//! distance-dependent sensor, and must collect one safe rock of every type
//! that has one before driving to the dropoff. Sampling an unsafe rock breaks
//! the rover for good.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{indicator, DomainError};
use crate::bsq::{parse_preference, BsqPreference};
use crate::pomdp::{sym, GPomdp, GPomdpBuilder};
use crate::scalar::Scalar;

pub const PREFERENCE: &str = include_str!("../../assets/graph_rock_sample.bsq");
pub const CONFIG: &str = include_str!("../../assets/graph_rock_sample.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSpec {
    pub name: String,
    pub waypoint: String,
    pub rock_type: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRockSampleConfig {
    pub waypoints: Vec<Waypoint>,
    pub edges: Vec<(String, String)>,
    pub rocks: Vec<RockSpec>,
    pub types: Vec<String>,
    pub safe_prior: f64,
    /// Distance at which scan accuracy drops to 0.75.
    pub d0: f64,
    pub start: String,
    pub dropoff: String,
    pub horizon: usize,
    #[serde(default, rename = "_comment", skip_serializing)]
    pub comment: Option<String>,
}

impl Default for GraphRockSampleConfig {
    fn default() -> Self {
        serde_json::from_str(CONFIG).expect("shipped config parses")
    }
}

/// Probability that a scan from distance `dist` reports the true safe bit.
pub fn scan_accuracy(dist: f64, d0: f64) -> f64 {
    0.5 + 0.5 * (-dist / d0).exp2()
}

struct Graph {
    pos: Vec<(f64, f64)>,
    /// `next[w][t]`: waypoint after one step from `w` toward `t`.
    next: Vec<Vec<usize>>,
}

impl GraphRockSampleConfig {
    fn waypoint(&self, name: &str) -> Result<usize, DomainError> {
        self.waypoints
            .iter()
            .position(|w| w.name == name)
            .ok_or_else(|| DomainError::InvalidConfig(format!("unknown waypoint '{name}'")))
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        self.graph().map(|_| ())
    }

    fn graph(&self) -> Result<Graph, DomainError> {
        let bad = |m: String| Err(DomainError::InvalidConfig(m));
        let n = self.waypoints.len();
        if n == 0 {
            return bad("no waypoints".into());
        }
        let names: BTreeSet<&str> = self.waypoints.iter().map(|w| w.name.as_str()).collect();
        if names.len() != n {
            return bad("duplicate waypoint names".into());
        }
        if self.rocks.is_empty() || self.rocks.len() > 12 {
            return bad("need between 1 and 12 rocks".into());
        }
        if self.types.is_empty() || self.types.len() > 8 {
            return bad("need between 1 and 8 rock types".into());
        }
        for r in &self.rocks {
            self.waypoint(&r.waypoint)?;
            if !self.types.contains(&r.rock_type) {
                return bad(format!(
                    "rock '{}' has undeclared type '{}'",
                    r.name, r.rock_type
                ));
            }
            if names.contains(r.name.as_str()) {
                return bad(format!("rock '{}' shadows a waypoint name", r.name));
            }
        }
        if !(0.0..=1.0).contains(&self.safe_prior) {
            return bad("safe_prior must lie in [0, 1]".into());
        }
        if !(self.d0 > 0.0) {
            return bad("d0 must be positive".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        self.waypoint(&self.start)?;
        self.waypoint(&self.dropoff)?;
        let mut adj = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            let (a, b) = (self.waypoint(a)?, self.waypoint(b)?);
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let mut next = vec![vec![0; n]; n];
        for t in 0..n {
            // BFS from the target; the step toward `t` goes to the lowest-index
            // neighbor one hop closer
            let mut dist = vec![usize::MAX; n];
            dist[t] = 0;
            let mut q = VecDeque::from([t]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            if dist.contains(&usize::MAX) {
                return bad("waypoint graph is not connected".into());
            }
            for w in 0..n {
                next[w][t] = if w == t {
                    w
                } else {
                    *adj[w]
                        .iter()
                        .find(|&&v| dist[v] + 1 == dist[w])
                        .expect("connected")
                };
            }
        }
        Ok(Graph {
            pos: self.waypoints.iter().map(|w| (w.x, w.y)).collect(),
            next,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GrsState {
    pos: usize,
    safe: u32,
    needed: u32,
    broken: bool,
}

pub fn grs_model<T: Scalar>(cfg: &GraphRockSampleConfig) -> Result<GPomdp<T>, DomainError> {
    let g = cfg.graph()?;
    let nw = cfg.waypoints.len();
    let nr = cfg.rocks.len();
    let nt = cfg.types.len();
    let rock_wp: Vec<usize> = cfg
        .rocks
        .iter()
        .map(|r| cfg.waypoint(&r.waypoint).unwrap())
        .collect();
    let rock_ty: Vec<usize> = cfg
        .rocks
        .iter()
        .map(|r| cfg.types.iter().position(|t| *t == r.rock_type).unwrap())
        .collect();
    let dropoff = cfg.waypoint(&cfg.dropoff)?;
    let dist = |w: usize, r: usize| {
        let (a, b) = (g.pos[w], g.pos[rock_wp[r]]);
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    };

    let mut states = Vec::new();
    for broken in [false, true] {
        for pos in 0..nw {
            for safe in 0..(1u32 << nr) {
                for needed in 0..(1u32 << nt) {
                    states.push(GrsState {
                        pos,
                        safe,
                        needed,
                        broken,
                    });
                }
            }
        }
    }
    let index = |s: GrsState| -> usize {
        let per_pos = (1usize << nr) << nt;
        (s.broken as usize) * nw * per_pos
            + s.pos * per_pos
            + ((s.safe as usize) << nt)
            + s.needed as usize
    };
    let is_goal = |s: &GrsState| {
        !s.broken
            && s.pos == dropoff
            && (0..nt).all(|t| {
                s.needed & (1 << t) == 0
                    || !(0..nr).any(|r| rock_ty[r] == t && s.safe & (1 << r) != 0)
            })
    };

    let mut targets: Vec<(String, usize)> = cfg
        .rocks
        .iter()
        .zip(&rock_wp)
        .map(|(r, &w)| (r.name.clone(), w))
        .collect();
    targets.push(("dropoff".into(), dropoff));
    let mut actions: Vec<String> = targets.iter().map(|(n, _)| format!("goto({n})")).collect();
    let n_goto = actions.len();
    actions.extend(cfg.rocks.iter().map(|r| format!("sample({})", r.name)));
    actions.extend(cfg.rocks.iter().map(|r| format!("scan({})", r.name)));
    let observations = vec!["none".to_string(), "safe".into(), "unsafe".into()];

    let names = states
        .iter()
        .map(|s| {
            format!(
                "{}@{}_s{:0nr$b}_n{:0nt$b}",
                if s.broken { "broken" } else { "ok" },
                cfg.waypoints[s.pos].name,
                s.safe,
                s.needed,
            )
        })
        .collect();
    let mut b = GPomdpBuilder::<T>::new("graph_rock_sample", names, actions, observations);
    b.horizon = cfg.horizon;

    for (si, s) in states.iter().enumerate() {
        let goal = is_goal(s);
        b.goal[si] = goal;
        for a in 0..b.actions.len() {
            let next = if goal || s.broken {
                *s
            } else if a < n_goto {
                GrsState {
                    pos: g.next[s.pos][targets[a].1],
                    ..*s
                }
            } else if a < n_goto + nr {
                let r = a - n_goto;
                if rock_wp[r] != s.pos {
                    *s
                } else if s.safe & (1 << r) != 0 {
                    GrsState {
                        needed: s.needed & !(1 << rock_ty[r]),
                        ..*s
                    }
                } else {
                    GrsState { broken: true, ..*s }
                }
            } else {
                *s
            };
            b.add_transition(si, a, index(next), T::one());
            if a >= n_goto + nr && !goal && !s.broken {
                let r = a - n_goto - nr;
                let acc = scan_accuracy(dist(s.pos, r), cfg.d0);
                let truth = if s.safe & (1 << r) != 0 { 1 } else { 2 };
                b.set_observation(si, a, truth, T::of(acc));
                b.set_observation(si, a, 3 - truth, T::of(1.0 - acc));
            } else {
                b.set_observation(si, a, 0, T::one());
            }
        }
    }

    let start = cfg.waypoint(&cfg.start)?;
    let full_need = (1u32 << nt) - 1;
    let mut init = Vec::new();
    for safe in 0..(1u32 << nr) {
        let k = safe.count_ones() as i32;
        let p = cfg.safe_prior.powi(k) * (1.0 - cfg.safe_prior).powi(nr as i32 - k);
        if p > 0.0 {
            init.push((
                index(GrsState {
                    pos: start,
                    safe,
                    needed: full_need,
                    broken: false,
                }),
                T::of(p),
            ));
        }
    }
    b.init = init;

    let rocks: Vec<_> = cfg.rocks.iter().map(|r| sym(&r.name)).collect();
    b.vocab.add_sort("rocks", rocks);
    b.vocab
        .add_sort("types", cfg.types.iter().map(|t| sym(t)).collect());
    b.vocab.add_sort("places", vec![sym("dropoff")]);
    for (name, w) in &targets {
        b.vocab.define_column(
            "loc",
            vec![sym(name)],
            true,
            indicator(&states, |s| s.pos == *w),
        );
    }
    for (r, spec) in cfg.rocks.iter().enumerate() {
        let k = sym(&spec.name);
        b.vocab.define_column(
            "safe",
            vec![k.clone()],
            false,
            indicator(&states, |s| s.safe & (1 << r) != 0),
        );
        let d: Vec<f64> = states.iter().map(|s| dist(s.pos, r)).collect();
        b.vocab.define_column("distance", vec![k.clone()], true, d);
        for (t, ty) in cfg.types.iter().enumerate() {
            b.vocab.define_const(
                "type",
                vec![k.clone(), sym(ty)],
                if rock_ty[r] == t { 1.0 } else { 0.0 },
            );
        }
    }
    for (t, ty) in cfg.types.iter().enumerate() {
        b.vocab.define_column(
            "needed",
            vec![sym(ty)],
            false,
            indicator(&states, |s| s.needed & (1 << t) != 0),
        );
    }
    b.vocab
        .define_column("broken", vec![], false, indicator(&states, |s| s.broken));
    Ok(b.build()?)
}

pub fn build_graph_rock_sample<T: Scalar>(
    cfg: &GraphRockSampleConfig,
) -> Result<(GPomdp<T>, BsqPreference<T>), DomainError> {
    let m = grs_model(cfg)?;
    let p = parse_preference(PREFERENCE, &m)?;
    Ok((m, p))
}

//! Store Visit: an agent with an uncertain position on a city grid must visit
//! a bank and afterwards a store, without stepping onto an unsafe cell.
//! Scanning reports which of the four neighboring cells are blocked (border
//! or unsafe), correctly with probability `scan_accuracy`.

use serde::{Deserialize, Serialize};

use super::{indicator, DomainError};
use crate::bsq::{parse_preference, BsqPreference};
use crate::pomdp::{sym, GPomdp, GPomdpBuilder, Key};
use crate::scalar::Scalar;

pub const PREFERENCE: &str = include_str!("../../assets/store_visit.bsq");
pub const CONFIG: &str = include_str!("../../assets/store_visit.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub name: String,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreVisitConfig {
    pub width: i64,
    pub height: i64,
    pub unsafe_cells: Vec<(i64, i64)>,
    pub banks: Vec<Building>,
    pub stores: Vec<Building>,
    /// The agent starts uniformly on one of these cells.
    pub start_cells: Vec<(i64, i64)>,
    pub scan_accuracy: f64,
    pub horizon: usize,
    #[serde(default, rename = "_comment", skip_serializing)]
    pub comment: Option<String>,
}

impl Default for StoreVisitConfig {
    fn default() -> Self {
        serde_json::from_str(CONFIG).expect("shipped config parses")
    }
}

/// Move directions in action order: left, right, down, up.
const DIRS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
pub const ACTIONS: [&str; 6] = ["left", "right", "down", "up", "visit", "scan"];

impl StoreVisitConfig {
    fn in_grid(&self, c: (i64, i64)) -> bool {
        c.0 >= 0 && c.1 >= 0 && c.0 < self.width && c.1 < self.height
    }

    pub fn is_safe(&self, c: (i64, i64)) -> bool {
        self.in_grid(c) && !self.unsafe_cells.contains(&c)
    }

    /// Bit `i` is set when the neighbor in direction `DIRS[i]` is blocked.
    pub fn signature(&self, c: (i64, i64)) -> usize {
        DIRS.iter()
            .enumerate()
            .filter(|(_, d)| !self.is_safe((c.0 + d.0, c.1 + d.1)))
            .map(|(i, _)| 1 << i)
            .sum()
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::InvalidConfig(m.to_string()));
        if self.width < 1 || self.height < 1 || self.width * self.height > 400 {
            return bad("grid must have between 1 and 400 cells");
        }
        if self.banks.is_empty() || self.stores.is_empty() {
            return bad("need at least one bank and one store");
        }
        for b in self.banks.iter().chain(&self.stores) {
            if !self.is_safe((b.x, b.y)) {
                return bad("buildings must stand on safe cells");
            }
        }
        if self.start_cells.is_empty() || !self.start_cells.iter().all(|&c| self.is_safe(c)) {
            return bad("start cells must be safe and non-empty");
        }
        if !(0.0..=1.0).contains(&self.scan_accuracy) {
            return bad("scan_accuracy must lie in [0, 1]");
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SvState {
    At { x: i64, y: i64, vbank: bool },
    Damaged,
    Done,
}

pub fn sv_model<T: Scalar>(cfg: &StoreVisitConfig) -> Result<GPomdp<T>, DomainError> {
    cfg.validate()?;
    let mut states = Vec::new();
    for vbank in [false, true] {
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                if cfg.is_safe((x, y)) {
                    states.push(SvState::At { x, y, vbank });
                }
            }
        }
    }
    let (damaged, done) = (states.len(), states.len() + 1);
    states.extend([SvState::Damaged, SvState::Done]);
    let find = |s: SvState| states.iter().position(|t| *t == s).expect("state exists");
    let names = states
        .iter()
        .map(|s| match s {
            SvState::At { x, y, vbank } => {
                format!("({x},{y}){}", if *vbank { "+bank" } else { "" })
            }
            SvState::Damaged => "damaged".into(),
            SvState::Done => "done".into(),
        })
        .collect();
    let mut observations = vec!["none".to_string()];
    observations.extend((0..16).map(|i| format!("sig{i:04b}")));
    let mut b = GPomdpBuilder::<T>::new(
        "store_visit",
        names,
        ACTIONS.iter().map(|a| a.to_string()).collect(),
        observations,
    );
    b.horizon = cfg.horizon;
    b.goal[done] = true;

    let is_bank = |x, y| cfg.banks.iter().any(|k| (k.x, k.y) == (x, y));
    let is_store = |x, y| cfg.stores.iter().any(|k| (k.x, k.y) == (x, y));
    let wrong = (1.0 - cfg.scan_accuracy) / 15.0;
    for (si, s) in states.iter().enumerate() {
        for a in 0..ACTIONS.len() {
            let next = match *s {
                SvState::At { x, y, vbank } => match a {
                    0..=3 => {
                        let c = (x + DIRS[a].0, y + DIRS[a].1);
                        if !cfg.in_grid(c) {
                            si
                        } else if !cfg.is_safe(c) {
                            damaged
                        } else {
                            find(SvState::At {
                                x: c.0,
                                y: c.1,
                                vbank,
                            })
                        }
                    }
                    4 if vbank && is_store(x, y) => done,
                    4 if !vbank && is_bank(x, y) => find(SvState::At { x, y, vbank: true }),
                    _ => si,
                },
                _ => si,
            };
            b.add_transition(si, a, next, T::one());
            match *s {
                SvState::At { x, y, .. } if a == 5 => {
                    let sig = cfg.signature((x, y));
                    for o in 0..16 {
                        let p = if o == sig { cfg.scan_accuracy } else { wrong };
                        b.set_observation(si, a, o + 1, T::of(p));
                    }
                }
                _ => b.set_observation(si, a, 0, T::one()),
            }
        }
    }
    b.init = cfg
        .start_cells
        .iter()
        .map(|&(x, y)| (find(SvState::At { x, y, vbank: false }), T::one()))
        .collect();

    let v = &mut b.vocab;
    v.add_sort("agents", vec![sym("agent")]);
    v.add_sort("stores", cfg.stores.iter().map(|s| sym(&s.name)).collect());
    v.add_sort("banks", cfg.banks.iter().map(|s| sym(&s.name)).collect());
    v.add_sort("xs", (0..cfg.width).map(Key::Int).collect());
    v.add_sort("ys", (0..cfg.height).map(Key::Int).collect());
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            let col = indicator(
                &states,
                |s| matches!(*s, SvState::At { x: sx, y: sy, .. } if (sx, sy) == (x, y)),
            );
            v.define_column(
                "loc",
                vec![sym("agent"), Key::Int(x), Key::Int(y)],
                false,
                col,
            );
            if cfg.is_safe((x, y)) {
                v.define_const("is_safe", vec![Key::Int(x), Key::Int(y)], 1.0);
            }
        }
    }
    for k in &cfg.banks {
        v.define_const("loc", vec![sym(&k.name), Key::Int(k.x), Key::Int(k.y)], 1.0);
        v.define_const("bank", vec![sym(&k.name)], 1.0);
    }
    for s in &cfg.stores {
        v.define_const("loc", vec![sym(&s.name), Key::Int(s.x), Key::Int(s.y)], 1.0);
        v.define_const("store", vec![sym(&s.name)], 1.0);
    }
    // ensure both labels exist even when one side has no entries for an object
    v.function_mut("bank", 1);
    v.function_mut("store", 1);
    let vb = indicator(&states, |s| matches!(s, SvState::At { vbank: true, .. }));
    v.define_column("vbank", vec![], false, vb);
    v.define_column(
        "damaged",
        vec![],
        false,
        indicator(&states, |s| *s == SvState::Damaged),
    );
    Ok(b.build()?)
}

pub fn build_store_visit<T: Scalar>(
    cfg: &StoreVisitConfig,
) -> Result<(GPomdp<T>, BsqPreference<T>), DomainError> {
    let m = sv_model(cfg)?;
    let p = parse_preference(PREFERENCE, &m)?;
    Ok((m, p))
}

//! Benchmark domains, each shipped with a default JSON config and its
//! preference text under `assets/`.

pub mod lane_merger;
pub mod rock_sample;
pub mod spaceship;
pub mod store_visit;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bsq::{parse_preference, BsqError, BsqPreference};
use crate::pomdp::{GPomdp, PomdpError};
use crate::scalar::Scalar;

pub use lane_merger::{build_lane_merger, LaneMergerConfig};
pub use rock_sample::{build_graph_rock_sample, scan_accuracy, GraphRockSampleConfig};
pub use spaceship::{
    build_spaceship_repair, filter_check, sr_closed_form, FilterCheck, SpaceshipRepairConfig,
};
pub use store_visit::{build_store_visit, StoreVisitConfig};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] PomdpError),
    #[error(transparent)]
    Preference(#[from] BsqError),
    #[error("unknown domain '{0}' (expected sr, lm, grs or sv)")]
    UnknownDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    SpaceshipRepair,
    LaneMerger,
    GraphRockSample,
    StoreVisit,
}

impl DomainKind {
    pub const ALL: [DomainKind; 4] = [
        DomainKind::LaneMerger,
        DomainKind::GraphRockSample,
        DomainKind::SpaceshipRepair,
        DomainKind::StoreVisit,
    ];

    pub fn short(self) -> &'static str {
        match self {
            DomainKind::SpaceshipRepair => "sr",
            DomainKind::LaneMerger => "lm",
            DomainKind::GraphRockSample => "grs",
            DomainKind::StoreVisit => "sv",
        }
    }

    pub fn default_config(self) -> &'static str {
        match self {
            DomainKind::SpaceshipRepair => spaceship::CONFIG,
            DomainKind::LaneMerger => lane_merger::CONFIG,
            DomainKind::GraphRockSample => rock_sample::CONFIG,
            DomainKind::StoreVisit => store_visit::CONFIG,
        }
    }

    pub fn default_preference(self) -> &'static str {
        match self {
            DomainKind::SpaceshipRepair => spaceship::PREFERENCE,
            DomainKind::LaneMerger => lane_merger::PREFERENCE,
            DomainKind::GraphRockSample => rock_sample::PREFERENCE,
            DomainKind::StoreVisit => store_visit::PREFERENCE,
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for DomainKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sr" | "spaceship_repair" => Ok(DomainKind::SpaceshipRepair),
            "lm" | "lane_merger" => Ok(DomainKind::LaneMerger),
            "grs" | "graph_rock_sample" => Ok(DomainKind::GraphRockSample),
            "sv" | "store_visit" => Ok(DomainKind::StoreVisit),
            _ => Err(DomainError::UnknownDomain(s.to_string())),
        }
    }
}

/// A built model together with its preference.
#[derive(Debug, Clone)]
pub struct Domain<T> {
    pub kind: DomainKind,
    pub model: GPomdp<T>,
    pub pref: BsqPreference<T>,
}

/// Builds `kind` from optional config JSON and preference text, falling back
/// to the shipped defaults. `horizon` overrides the config's horizon.
pub fn load_domain<T: Scalar>(
    kind: DomainKind,
    config_json: Option<&str>,
    preference: Option<&str>,
    horizon: Option<usize>,
) -> Result<Domain<T>, DomainError> {
    let json = config_json.unwrap_or(kind.default_config());
    let model = match kind {
        DomainKind::SpaceshipRepair => {
            let mut c: SpaceshipRepairConfig = serde_json::from_str(json)?;
            c.horizon = horizon.unwrap_or(c.horizon);
            spaceship::sr_model(&c)?
        }
        DomainKind::LaneMerger => {
            let mut c: LaneMergerConfig = serde_json::from_str(json)?;
            c.horizon = horizon.unwrap_or(c.horizon);
            lane_merger::lm_model(&c)?
        }
        DomainKind::GraphRockSample => {
            let mut c: GraphRockSampleConfig = serde_json::from_str(json)?;
            c.horizon = horizon.unwrap_or(c.horizon);
            rock_sample::grs_model(&c)?
        }
        DomainKind::StoreVisit => {
            let mut c: StoreVisitConfig = serde_json::from_str(json)?;
            c.horizon = horizon.unwrap_or(c.horizon);
            store_visit::sv_model(&c)?
        }
    };
    let pref = parse_preference(preference.unwrap_or(kind.default_preference()), &model)?;
    Ok(Domain { kind, model, pref })
}

/// Per-state column built from a predicate.
pub(crate) fn indicator<S>(states: &[S], f: impl Fn(&S) -> bool) -> Vec<f64> {
    states
        .iter()
        .map(|s| if f(s) { 1.0 } else { 0.0 })
        .collect()
}

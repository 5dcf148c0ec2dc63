//! The four placement scenarios and their comparison.
//!
//! | id | filters run on | destinations      |
//! |----|----------------|-------------------|
//! | 1  | receiver       | B                 |
//! | 2  | receiver       | B, C, D (round robin) |
//! | 3  | sender (A)     | B                 |
//! | 4  | sender (A)     | B, C, D (round robin) |
//!
//! Every scenario is driven by one virtual clock, so its total is exactly
//! the sum of filter and network charges.

mod report;
mod scenario;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{labeled, CorpusRecord, ListBundle};
use crate::filters::{bayes_train, FilterError};
use crate::netsim::{CostModel, Micros, World};
use crate::pipeline::{FilterContext, Mount, PipelineConfig};

pub use report::{
    compare_scenarios, csv_header, csv_row, render_csv, render_plot, speedup, Comparison,
};
pub use scenario::{run_scenario, AttemptRecord, ScenarioRun};

pub const SENDER: &str = "A";
pub const DESTINATIONS: [&str; 3] = ["B", "C", "D"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("world does not fit the scenario: {0}")]
    WorldMismatch(String),
    #[error("corpus has {have} messages, scenario needs {need}")]
    CorpusTooSmall { have: usize, need: usize },
    #[error("sender-side filter time is zero")]
    DivisionByZero,
    #[error("ordering violated: {0}")]
    OrderingViolation(String),
    #[error("scenarios cannot be compared: {0}")]
    MismatchedSpecs(String),
    #[error("routing error: {0}")]
    Routing(String),
    #[error("training failed: {0}")]
    Training(#[from] FilterError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    S1 = 1,
    S2 = 2,
    S3 = 3,
    S4 = 4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn mount(self) -> Mount {
        match self {
            ScenarioId::S1 | ScenarioId::S2 => Mount::ReceiverSide,
            ScenarioId::S3 | ScenarioId::S4 => Mount::SenderSide,
        }
    }

    pub fn layout(self) -> Layout {
        match self {
            ScenarioId::S1 | ScenarioId::S3 => Layout::Single,
            ScenarioId::S2 | ScenarioId::S4 => Layout::Multi,
        }
    }
}

impl TryFrom<u8> for ScenarioId {
    type Error = String;
    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(ScenarioId::S1),
            2 => Ok(ScenarioId::S2),
            3 => Ok(ScenarioId::S3),
            4 => Ok(ScenarioId::S4),
            _ => Err(format!("scenario must be 1, 2, 3 or 4, got {n}")),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: u8 = s.trim().parse().map_err(|_| format!("not a scenario id: {s:?}"))?;
        ScenarioId::try_from(n)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Where recipients live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Everyone on B.
    Single,
    /// Recipients dealt round robin over B, C, D in corpus order.
    Multi,
}

impl Layout {
    pub fn destinations(self) -> &'static [&'static str] {
        match self {
            Layout::Single => &DESTINATIONS[..1],
            Layout::Multi => &DESTINATIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    /// `None` uses the whole corpus.
    pub n_messages: Option<usize>,
    pub cost: CostModel,
    pub dedup: bool,
    /// Receiver-side blocked mail goes to the spam folder instead of being dropped.
    pub keep_blocked: bool,
}

impl ScenarioSpec {
    pub fn all(cost: &CostModel) -> Vec<ScenarioSpec> {
        ScenarioId::ALL.iter().map(|&id| ScenarioSpec::new(id, cost.clone())).collect()
    }

    /// Dedup follows the mount: on for sender-side scenarios.
    pub fn new(id: ScenarioId, cost: CostModel) -> Self {
        ScenarioSpec {
            id,
            n_messages: None,
            cost,
            dedup: id.mount() == Mount::SenderSide,
            keep_blocked: false,
        }
    }
}

/// Virtual-time and traffic totals for one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScenarioMetrics {
    pub total: Micros,
    pub filter: Micros,
    pub network: Micros,
    pub filter_invocations: u64,
    pub sessions_opened: u64,
    pub bytes_transferred: u64,
    pub delivered: u64,
    pub blocked: u64,
    pub temp_rejected: u64,
    pub failure_notices: u64,
}

impl ScenarioMetrics {
    pub fn outcomes(&self) -> u64 {
        self.delivered + self.blocked + self.temp_rejected + self.failure_notices
    }
}

/// Builds the filter state every mount starts from. Without stored token
/// statistics the content filter is trained on the corpus labels.
pub fn build_template(
    world: &World,
    lists: &ListBundle,
    corpus: &[CorpusRecord],
    config: PipelineConfig,
) -> Result<FilterContext, HarnessError> {
    let sender = world
        .server(SENDER)
        .ok_or_else(|| HarnessError::WorldMismatch(format!("no server {SENDER}")))?;
    let mut ctx = FilterContext::new(sender.clients.clone(), config);
    ctx.whitelist = lists.whitelist.clone();
    ctx.blacklist = lists.blacklist.clone();
    ctx.rules = lists.rules.clone();
    ctx.stats = match &lists.stats {
        Some(stats) => stats.clone(),
        None => bayes_train(labeled(corpus))?,
    };
    Ok(ctx)
}

//! Individual filter families. Each is usable on its own; the pipeline
//! module decides order and composition.

pub mod bayes;
pub mod counter;
pub mod greylist;
pub mod lists;
pub mod reverse;
pub mod rules;

use thiserror::Error;

pub use bayes::{bayes_score, bayes_train, BayesParams, Label, TokenStats};
pub use counter::{counter_check, CounterOutcome, CounterParams, CounterState};
pub use greylist::{greylist_check, GreylistKey, GreylistOutcome, GreylistParams, GreylistState};
pub use lists::{blacklist_check, whitelist_check, AddressList, ListKey};
pub use reverse::{reverse_lookup_check, ReverseMode, ReverseOutcome};
pub use rules::{rules_apply, Rule, RuleAction, RuleField, RuleOutcome, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListMatch {
    Hit,
    Miss,
}

impl From<bool> for ListMatch {
    fn from(hit: bool) -> Self {
        if hit {
            ListMatch::Hit
        } else {
            ListMatch::Miss
        }
    }
}

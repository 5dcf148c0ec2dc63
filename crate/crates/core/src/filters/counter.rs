use std::collections::{BTreeMap, VecDeque};

use crate::message::IpAddress;
use crate::netsim::Micros;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterParams {
    pub limit: u64,
    pub window: Micros,
}

impl Default for CounterParams {
    fn default() -> Self {
        CounterParams {
            limit: 100,
            window: Micros::from_secs(3600),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterOutcome {
    Pass,
    Block,
}

/// Per-client sliding window of accepted send times.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterState {
    pub params: CounterParams,
    sends: BTreeMap<IpAddress, VecDeque<Micros>>,
}

impl CounterState {
    pub fn new(params: CounterParams) -> Self {
        CounterState {
            params,
            sends: BTreeMap::new(),
        }
    }

    pub fn recorded(&self, client: IpAddress) -> Vec<Micros> {
        self.sends
            .get(&client)
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }
}

/// Forgets sends more than `window` before `now`, then admits the send if
/// fewer than `limit` remain. Blocked sends are not recorded.
pub fn counter_check(client: IpAddress, now: Micros, state: &mut CounterState) -> CounterOutcome {
    let CounterParams { limit, window } = state.params;
    let queue = state.sends.entry(client).or_default();
    while queue.front().is_some_and(|&t| now.saturating_sub(t) > window) {
        queue.pop_front();
    }
    if (queue.len() as u64) < limit {
        queue.push_back(now);
        CounterOutcome::Pass
    } else {
        CounterOutcome::Block
    }
}

use std::collections::BTreeMap;

use crate::message::{EmailAddress, IpAddress};
use crate::netsim::Micros;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GreylistKey {
    pub sender_ip: IpAddress,
    pub from: EmailAddress,
    pub rcpt: EmailAddress,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GreylistRecord {
    pub first_seen: Micros,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreylistOutcome {
    TempReject,
    Pass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GreylistParams {
    pub min_delay: Micros,
    pub max_lifetime: Micros,
}

impl Default for GreylistParams {
    fn default() -> Self {
        GreylistParams {
            min_delay: Micros::from_secs(120),
            max_lifetime: Micros::from_secs(86_400),
        }
    }
}

/// First-contact rejection state keyed by (ip, from, rcpt).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GreylistState {
    pub params: GreylistParams,
    records: BTreeMap<GreylistKey, GreylistRecord>,
}

impl GreylistState {
    pub fn new(params: GreylistParams) -> Self {
        GreylistState {
            params,
            records: BTreeMap::new(),
        }
    }

    pub fn record(&self, key: &GreylistKey) -> Option<GreylistRecord> {
        self.records.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn expired(&self, rec: &GreylistRecord, now: Micros) -> bool {
        now.saturating_sub(rec.first_seen) > self.params.max_lifetime
    }

    /// Drops records past their lifetime.
    pub fn purge(&mut self, now: Micros) {
        let max = self.params.max_lifetime;
        self.records
            .retain(|_, rec| now.saturating_sub(rec.first_seen) <= max);
    }
}

/// Unseen (or expired) key: remember it and reject. Seen key retried at least
/// `min_delay` after first contact and within `max_lifetime`: accept.
/// Otherwise reject without touching `first_seen`.
pub fn greylist_check(key: &GreylistKey, now: Micros, state: &mut GreylistState) -> GreylistOutcome {
    let live = state
        .records
        .get(key)
        .filter(|rec| !state.expired(rec, now))
        .copied();
    match live {
        None => {
            state.records.insert(
                key.clone(),
                GreylistRecord {
                    first_seen: now,
                    accepted: false,
                },
            );
            GreylistOutcome::TempReject
        }
        Some(rec) if now.saturating_sub(rec.first_seen) >= state.params.min_delay => {
            if let Some(r) = state.records.get_mut(key) {
                r.accepted = true;
            }
            GreylistOutcome::Pass
        }
        Some(_) => GreylistOutcome::TempReject,
    }
}

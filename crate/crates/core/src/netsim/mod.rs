//! Deterministic virtual-time model of mail servers, DNS and SMTP sessions.
//!
//! Nothing here reads the wall clock. Every cost is charged explicitly to a
//! [`VirtualClock`], which keeps an audit ledger so that totals can be split
//! into filter time and network time and checked for additivity.

mod clock;
mod cost;
mod session;
mod time;
mod world;

use thiserror::Error;

pub use clock::{Charge, ChargeKind, VirtualClock};
pub use cost::{CostModel, Profile};
pub use session::{charge_filter, close_session, establish_session, transmit, SmtpSession};
pub use time::{DurationParseError, Micros};
pub use world::{dns_resolve, dns_reverse, DnsDirectory, MailServer, World};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown server {0}")]
    UnknownServer(String),
    #[error("server {0} cannot open a session to itself")]
    SelfSession(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("transmit needs at least one recipient")]
    NoRecipients,
    #[error("unknown cost profile {0:?}")]
    UnknownProfile(String),
    #[error("invalid cost {0}: {1}")]
    InvalidCost(String, String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("world file line {line}: {reason}")]
    WorldParse { line: usize, reason: String },
}

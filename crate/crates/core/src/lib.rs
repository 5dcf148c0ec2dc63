//! Mail-network simulator and spam-filtering engine.
//!
//! The crate models a small network of mail servers in deterministic virtual
//! time and runs a staged filtering pipeline either on the sending server or
//! on the receiving servers, so the cost of each placement can be compared.
//!
//! * [`message`]: addresses, messages, digests, verdicts.
//! * [`filters`]: list, greylist, Bayesian, rule, reverse-lookup and counter filters.
//! * [`pipeline`]: the per-recipient filtering algorithm and the digest cache.
//! * [`netsim`]: virtual clock, cost profiles, DNS, servers and SMTP sessions.
//! * [`harness`]: the four placement scenarios and their reports.
//! * [`corpus`]: corpus generation and every on-disk format.
//! * [`config`] and [`cli`]: the `spamsim` command line.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod filters;
pub mod harness;
pub mod message;
pub mod netsim;
pub mod pipeline;

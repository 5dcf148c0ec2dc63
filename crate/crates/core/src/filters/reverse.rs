use std::str::FromStr;

use crate::message::IpAddress;
use crate::netsim::DnsDirectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReverseMode {
    Strict,
    /// Unconfirmed senders pass with a flag; suits mobile and dynamic IPs.
    Lenient,
}

impl FromStr for ReverseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ReverseMode::Strict),
            "lenient" => Ok(ReverseMode::Lenient),
            other => Err(format!("unknown reverse-lookup mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReverseOutcome {
    Pass,
    /// Identity not confirmed, passed because the mode is lenient.
    PassUnconfirmed,
    Block,
}

impl ReverseOutcome {
    pub fn passed(self) -> bool {
        !matches!(self, ReverseOutcome::Block)
    }
}

/// The PTR name must equal the HELO name or be one of its parent domains.
pub fn reverse_lookup_check(
    ip: IpAddress,
    helo_domain: &str,
    dns: &DnsDirectory,
    mode: ReverseMode,
) -> ReverseOutcome {
    let helo = helo_domain.to_lowercase();
    let confirmed = dns
        .reverse(ip)
        .is_some_and(|ptr| helo == ptr || helo.ends_with(&format!(".{ptr}")));
    match (confirmed, mode) {
        (true, _) => ReverseOutcome::Pass,
        (false, ReverseMode::Strict) => ReverseOutcome::Block,
        (false, ReverseMode::Lenient) => ReverseOutcome::PassUnconfirmed,
    }
}

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{FilterError, ListMatch};
use crate::message::{normalize_domain, parse_address, EmailAddress, IpAddress};

/// One list entry: a full address, a bare domain or an IPv4 address.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ListKey {
    Address(EmailAddress),
    Domain(String),
    Ip(IpAddress),
}

impl FromStr for ListKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('@') {
            return parse_address(s).map(ListKey::Address).map_err(|e| e.to_string());
        }
        let dotted_numeric = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit() || b == b'.');
        if dotted_numeric {
            return s
                .parse::<IpAddress>()
                .map(ListKey::Ip)
                .map_err(|e| e.to_string());
        }
        normalize_domain(s)
            .map(ListKey::Domain)
            .ok_or_else(|| format!("not an address, domain or ip: {s:?}"))
    }
}

impl fmt::Display for ListKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ListKey::Address(a) => a.fmt(f),
            ListKey::Domain(d) => f.write_str(d),
            ListKey::Ip(ip) => ip.fmt(f),
        }
    }
}

/// Set of list keys with exact-match membership.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AddressList {
    entries: BTreeSet<ListKey>,
}

impl AddressList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: ListKey) -> bool {
        self.entries.insert(key)
    }

    pub fn contains(&self, key: &ListKey) -> bool {
        self.entries.contains(key)
    }

    pub fn contains_address(&self, addr: &EmailAddress) -> bool {
        // Key construction clones; lists are small and this is not a hot path.
        self.entries.contains(&ListKey::Address(addr.clone()))
    }

    pub fn contains_domain(&self, domain: &str) -> bool {
        self.entries.contains(&ListKey::Domain(domain.to_lowercase()))
    }

    pub fn contains_ip(&self, ip: IpAddress) -> bool {
        self.entries.contains(&ListKey::Ip(ip))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ListKey> {
        self.entries.iter()
    }

    /// One key per line; `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<AddressList, FilterError> {
        let mut list = AddressList::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let key = line.parse().map_err(|reason| FilterError::Parse {
                line: idx + 1,
                reason,
            })?;
            list.insert(key);
        }
        Ok(list)
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|k| format!("{k}\n")).collect()
    }
}

impl FromIterator<ListKey> for AddressList {
    fn from_iter<I: IntoIterator<Item = ListKey>>(iter: I) -> Self {
        AddressList {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Hit when the sender address or its domain is listed.
pub fn whitelist_check(from: &EmailAddress, list: &AddressList) -> ListMatch {
    ListMatch::from(list.contains_address(from) || list.contains_domain(from.domain()))
}

/// Hit when the sending server's IP or domain is listed.
pub fn blacklist_check(ip: IpAddress, domain: &str, list: &AddressList) -> ListMatch {
    ListMatch::from(list.contains_ip(ip) || list.contains_domain(domain))
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::NetError;
use crate::message::{normalize_domain, EmailAddress, IpAddress};
use crate::pipeline::FilterContext;

/// Forward (domain to server) and reverse (PTR) records.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DnsDirectory {
    forward: BTreeMap<String, String>,
    reverse: BTreeMap<IpAddress, String>,
}

impl DnsDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_mx(&mut self, domain: &str, server: &str) {
        self.forward.insert(domain.to_lowercase(), server.to_string());
    }

    pub fn insert_ptr(&mut self, ip: IpAddress, domain: &str) {
        self.reverse.insert(ip, domain.to_lowercase());
    }

    pub fn resolve(&self, domain: &str) -> Option<&str> {
        self.forward.get(&domain.to_lowercase()).map(String::as_str)
    }

    pub fn reverse(&self, ip: IpAddress) -> Option<&str> {
        self.reverse.get(&ip).map(String::as_str)
    }

    pub fn forward_records(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(d, s)| (d.as_str(), s.as_str()))
    }

    pub fn ptr_records(&self) -> impl Iterator<Item = (IpAddress, &str)> {
        self.reverse.iter().map(|(ip, d)| (*ip, d.as_str()))
    }
}

/// Resolves a domain to the name of the server hosting it.
pub fn dns_resolve<'a>(domain: &str, dns: &'a DnsDirectory) -> Option<&'a str> {
    dns.resolve(domain)
}

/// PTR lookup.
pub fn dns_reverse(ip: IpAddress, dns: &DnsDirectory) -> Option<&str> {
    dns.reverse(ip)
}

#[derive(Clone, Debug)]
pub struct MailServer {
    pub name: String,
    /// Hosted domains; the first one is the primary.
    pub domains: Vec<String>,
    pub clients: BTreeSet<IpAddress>,
    pub filters: Option<FilterContext>,
    pub mailboxes: BTreeMap<EmailAddress, u64>,
    pub spam_folder: u64,
}

impl MailServer {
    pub fn primary_domain(&self) -> &str {
        &self.domains[0]
    }

    pub fn deliver(&mut self, rcpt: &EmailAddress) {
        *self.mailboxes.entry(rcpt.clone()).or_default() += 1;
    }

    pub fn delivered(&self) -> u64 {
        self.mailboxes.values().sum()
    }
}

/// Servers plus the DNS directory that points at them.
#[derive(Clone, Debug, Default)]
pub struct World {
    servers: BTreeMap<String, MailServer>,
    pub dns: DnsDirectory,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four-server layout used by the placement scenarios: A serves the
    /// submitting clients, B, C and D receive.
    pub fn scenario_default() -> Self {
        let mut world = World::new();
        let mut clients: Vec<IpAddress> = (1..=16).map(|i| IpAddress::new(10, 0, 0, i)).collect();
        clients.push(IpAddress::new(10, 0, 0, 66));
        world
            .add_server("A", &["a.example"], &clients)
            .expect("static world");
        for (name, domain) in [("B", "b.example"), ("C", "c.example"), ("D", "d.example")] {
            world.add_server(name, &[domain], &[]).expect("static world");
        }
        for i in 1..=16 {
            world.dns.insert_ptr(IpAddress::new(10, 0, 0, i), "a.example");
        }
        world
    }

    pub fn add_server(
        &mut self,
        name: &str,
        domains: &[&str],
        clients: &[IpAddress],
    ) -> Result<(), NetError> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(NetError::InvalidWorld(format!("bad server name {name:?}")));
        }
        if self.servers.contains_key(name) {
            return Err(NetError::InvalidWorld(format!("duplicate server {name}")));
        }
        if domains.is_empty() {
            return Err(NetError::InvalidWorld(format!("server {name} hosts no domain")));
        }
        let mut normalized = Vec::with_capacity(domains.len());
        for d in domains {
            let d = normalize_domain(d)
                .ok_or_else(|| NetError::InvalidWorld(format!("bad domain {d:?}")))?;
            if let Some(owner) = self.dns.resolve(&d) {
                return Err(NetError::InvalidWorld(format!(
                    "domain {d} already hosted by {owner}"
                )));
            }
            normalized.push(d);
        }
        for d in &normalized {
            self.dns.insert_mx(d, name);
        }
        self.servers.insert(
            name.to_string(),
            MailServer {
                name: name.to_string(),
                domains: normalized,
                clients: clients.iter().copied().collect(),
                filters: None,
                mailboxes: BTreeMap::new(),
                spam_folder: 0,
            },
        );
        Ok(())
    }

    pub fn server(&self, name: &str) -> Option<&MailServer> {
        self.servers.get(name)
    }

    pub fn server_mut(&mut self, name: &str) -> Option<&mut MailServer> {
        self.servers.get_mut(name)
    }

    pub fn servers(&self) -> impl Iterator<Item = &MailServer> {
        self.servers.values()
    }

    /// Every hosted domain resolves back to its server, and every forward
    /// record names a hosted domain.
    pub fn is_consistent(&self) -> bool {
        let hosted = self
            .servers
            .values()
            .all(|s| s.domains.iter().all(|d| self.dns.resolve(d) == Some(&s.name)));
        let backed = self.dns.forward_records().all(|(d, s)| {
            self.servers
                .get(s)
                .is_some_and(|srv| srv.domains.iter().any(|h| h == d))
        });
        hosted && backed
    }

    /// Parses the world description format:
    ///
    /// ```text
    /// server <name> domains=<d1,d2> [clients=<ip,...>]
    /// ptr <ip> <domain>
    /// ```
    pub fn parse(text: &str) -> Result<World, NetError> {
        let mut world = World::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| NetError::WorldParse { line: line_no, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("server") => {
                    let name = parts.next().ok_or_else(|| err("missing server name".into()))?;
                    let mut domains: Option<Vec<&str>> = None;
                    let mut clients = Vec::new();
                    for kv in parts {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected key=value, got {kv:?}")))?;
                        match k {
                            "domains" => domains = Some(v.split(',').filter(|s| !s.is_empty()).collect()),
                            "clients" => {
                                for ip in v.split(',').filter(|s| !s.is_empty()) {
                                    clients.push(ip.parse().map_err(|e| err(format!("{e}")))?);
                                }
                            }
                            other => return Err(err(format!("unknown server attribute {other:?}"))),
                        }
                    }
                    let domains = domains.ok_or_else(|| err("server needs domains=".into()))?;
                    world
                        .add_server(name, &domains, &clients)
                        .map_err(|e| err(e.to_string()))?;
                }
                Some("ptr") => {
                    let ip: IpAddress = parts
                        .next()
                        .ok_or_else(|| err("missing ptr address".into()))?
                        .parse()
                        .map_err(|e| err(format!("{e}")))?;
                    let domain = parts.next().ok_or_else(|| err("missing ptr domain".into()))?;
                    let domain = normalize_domain(domain)
                        .ok_or_else(|| err(format!("bad ptr domain {domain:?}")))?;
                    if parts.next().is_some() {
                        return Err(err("trailing fields after ptr".into()));
                    }
                    world.dns.insert_ptr(ip, &domain);
                }
                Some(other) => return Err(err(format!("unknown directive {other:?}"))),
                None => unreachable!("blank lines skipped"),
            }
        }
        Ok(world)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in self.servers.values() {
            let _ = write!(out, "server {} domains={}", s.name, s.domains.join(","));
            if !s.clients.is_empty() {
                let clients: Vec<String> = s.clients.iter().map(ToString::to_string).collect();
                let _ = write!(out, " clients={}", clients.join(","));
            }
            out.push('\n');
        }
        for (ip, d) in self.dns.ptr_records() {
            let _ = writeln!(out, "ptr {ip} {d}");
        }
        out
    }
}

//! Addresses, messages, content digests and verdicts shared by every stage.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::netsim::Micros;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("malformed address {0:?}: {1}")]
    MalformedAddress(String, &'static str),
    #[error("malformed ip address {0:?}")]
    MalformedIp(String),
    #[error("invalid message: {0}")]
    InvalidMessage(String),
}

/// A mailbox address. The local part keeps its original case for display;
/// equality, ordering and hashing use the case-folded form.
#[derive(Clone, Debug)]
pub struct EmailAddress {
    local: String,
    folded_local: String,
    domain: String,
}

impl EmailAddress {
    pub fn local(&self) -> &str {
        &self.local
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    /// Same local part, different domain.
    pub fn with_domain(&self, domain: &str) -> Result<EmailAddress, MessageError> {
        parse_address(&format!("{}@{}", self.local, domain))
    }

    fn key(&self) -> (&str, &str) {
        (&self.folded_local, &self.domain)
    }
}

impl PartialEq for EmailAddress {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for EmailAddress {}

impl Hash for EmailAddress {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for EmailAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EmailAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for EmailAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.local, self.domain)
    }
}

impl FromStr for EmailAddress {
    type Err = MessageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_address(s)
    }
}

/// Checks a bare domain name and returns it lowercased.
pub fn normalize_domain(text: &str) -> Option<String> {
    if text.is_empty() || text.chars().any(|c| c.is_whitespace() || c == '@') {
        return None;
    }
    // At least one dot that is neither first nor last.
    let bytes = text.as_bytes();
    let interior_dot = bytes
        .iter()
        .enumerate()
        .any(|(i, &b)| b == b'.' && i > 0 && i + 1 < bytes.len());
    if !interior_dot || text.starts_with('.') || text.ends_with('.') || text.contains("..") {
        return None;
    }
    Some(text.to_lowercase())
}

pub fn parse_address(text: &str) -> Result<EmailAddress, MessageError> {
    let err = |why| MessageError::MalformedAddress(text.to_string(), why);
    let (local, domain) = text.split_once('@').ok_or_else(|| err("missing '@'"))?;
    if local.is_empty() {
        return Err(err("empty local part"));
    }
    if local.chars().any(char::is_whitespace) {
        return Err(err("whitespace in local part"));
    }
    if domain.contains('@') {
        return Err(err("more than one '@'"));
    }
    let domain = normalize_domain(domain).ok_or_else(|| err("domain must be a dotted name"))?;
    Ok(EmailAddress {
        folded_local: local.to_lowercase(),
        local: local.to_string(),
        domain,
    })
}

/// IPv4 address; rendered as a dotted quad.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IpAddress(pub Ipv4Addr);

impl IpAddress {
    pub const fn new(a: u8, b: u8, c: u8, d: u8) -> Self {
        IpAddress(Ipv4Addr::new(a, b, c, d))
    }
}

impl FromStr for IpAddress {
    type Err = MessageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Ipv4Addr>()
            .map(IpAddress)
            .map_err(|_| MessageError::MalformedIp(s.to_string()))
    }
}

impl fmt::Display for IpAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One submitted mail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmailMessage {
    pub id: String,
    pub sender_ip: IpAddress,
    pub helo_domain: String,
    pub from: EmailAddress,
    rcpt: Vec<EmailAddress>,
    pub subject: String,
    pub body: String,
    pub submitted_at: Micros,
}

impl EmailMessage {
    /// Builds a message, rejecting an empty or duplicated recipient list.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        sender_ip: IpAddress,
        helo_domain: impl Into<String>,
        from: EmailAddress,
        rcpt: Vec<EmailAddress>,
        subject: impl Into<String>,
        body: impl Into<String>,
        submitted_at: Micros,
    ) -> Result<Self, MessageError> {
        let id = id.into();
        if id.is_empty() {
            return Err(MessageError::InvalidMessage("empty id".into()));
        }
        if rcpt.is_empty() {
            return Err(MessageError::InvalidMessage("empty recipient list".into()));
        }
        for (i, r) in rcpt.iter().enumerate() {
            if rcpt[..i].contains(r) {
                return Err(MessageError::InvalidMessage(format!("duplicate recipient {r}")));
            }
        }
        Ok(EmailMessage {
            id,
            sender_ip,
            helo_domain: helo_domain.into(),
            from,
            rcpt,
            subject: subject.into(),
            body: body.into(),
            submitted_at,
        })
    }

    pub fn rcpt(&self) -> &[EmailAddress] {
        &self.rcpt
    }

    /// Byte length of [`encode`]; always recomputed, never cached.
    pub fn size_bytes(&self) -> u64 {
        encoded_size(self)
    }
}

/// Canonical wire encoding:
/// `FROM:<from>\nTO:<r1,r2,...>\nSUBJECT:<subject>\n\n<body>`.
pub fn encode(msg: &EmailMessage) -> String {
    let to = msg
        .rcpt
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "FROM:{}\nTO:{}\nSUBJECT:{}\n\n{}",
        msg.from, to, msg.subject, msg.body
    )
}

pub fn encoded_size(msg: &EmailMessage) -> u64 {
    encode(msg).len() as u64
}

/// Case-folds, collapses whitespace runs to one space and trims.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// SHA-256 over the normalized subject and body, lowercase hex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentDigest(String);

impl ContentDigest {
    pub fn hex(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn content_digest(msg: &EmailMessage) -> ContentDigest {
    digest_parts(&msg.subject, &msg.body)
}

pub fn digest_parts(subject: &str, body: &str) -> ContentDigest {
    let mut hasher = Sha256::new();
    hasher.update(normalize_text(subject).as_bytes());
    // subject, NUL, body
    hasher.update([0u8]);
    hasher.update(normalize_text(body).as_bytes());
    ContentDigest(hex::encode(hasher.finalize()))
}

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    SenderAuth,
    CounterCheck,
    ReceiverIdent,
    WhitelistCheck,
    BlacklistCheck,
    GreylistCheck,
    ContentFilter,
    RuleFilter,
    Forwarded,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::SenderAuth,
        Stage::CounterCheck,
        Stage::ReceiverIdent,
        Stage::WhitelistCheck,
        Stage::BlacklistCheck,
        Stage::GreylistCheck,
        Stage::ContentFilter,
        Stage::RuleFilter,
        Stage::Forwarded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SenderAuth => "SenderAuth",
            Stage::CounterCheck => "CounterCheck",
            Stage::ReceiverIdent => "ReceiverIdent",
            Stage::WhitelistCheck => "WhitelistCheck",
            Stage::BlacklistCheck => "BlacklistCheck",
            Stage::GreylistCheck => "GreylistCheck",
            Stage::ContentFilter => "ContentFilter",
            Stage::RuleFilter => "RuleFilter",
            Stage::Forwarded => "Forwarded",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Pass,
    Block,
    TempReject,
    FailureToSender,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Pass => "Pass",
            Decision::Block => "Block",
            Decision::TempReject => "TempReject",
            Decision::FailureToSender => "FailureToSender",
        })
    }
}

/// Per-attempt outcome. Constructors enforce that `Pass` lands on
/// `Forwarded` and `FailureToSender` on `ReceiverIdent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Verdict {
    decision: Decision,
    stage: Stage,
    reason: String,
}

impl Verdict {
    pub fn pass(reason: impl Into<String>) -> Self {
        Verdict {
            decision: Decision::Pass,
            stage: Stage::Forwarded,
            reason: reason.into(),
        }
    }

    pub fn block(stage: Stage, reason: impl Into<String>) -> Self {
        debug_assert_ne!(stage, Stage::Forwarded);
        Verdict {
            decision: Decision::Block,
            stage,
            reason: reason.into(),
        }
    }

    pub fn temp_reject(stage: Stage, reason: impl Into<String>) -> Self {
        Verdict {
            decision: Decision::TempReject,
            stage,
            reason: reason.into(),
        }
    }

    pub fn failure_to_sender(reason: impl Into<String>) -> Self {
        Verdict {
            decision: Decision::FailureToSender,
            stage: Stage::ReceiverIdent,
            reason: reason.into(),
        }
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn reason(&self) -> &str {
        &self.reason
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} ({})", self.decision, self.stage, self.reason)
    }
}

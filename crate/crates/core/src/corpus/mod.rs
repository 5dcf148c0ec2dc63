//! Labeled corpora and every on-disk artifact: corpus JSON Lines, filter
//! lists, rules, token statistics and world files.

mod files;
mod generate;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::Label;
use crate::message::{parse_address, EmailAddress, EmailMessage, MessageError};
use crate::netsim::Micros;

pub use files::{load_lists, load_world, save_lists, ListBundle};
pub use generate::{generate_corpus, GeneratorParams};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetryPolicy {
    None,
    RetryOnce,
}

impl FromStr for RetryPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(RetryPolicy::None),
            "retry_once" => Ok(RetryPolicy::RetryOnce),
            other => Err(format!("unknown retry policy {other:?}")),
        }
    }
}

/// A message plus its ground-truth label and sender retry behaviour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusRecord {
    pub message: EmailMessage,
    pub label: Label,
    pub retry: RetryPolicy,
}

impl fmt::Display for CorpusRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    sender_ip: String,
    helo: String,
    from: String,
    rcpt: String,
    subject: String,
    body: String,
    label: Label,
    retry: RetryPolicy,
    submitted_at: f64,
}

impl CorpusRecord {
    pub fn to_line(&self) -> String {
        let m = &self.message;
        let line = RecordLine {
            id: m.id.clone(),
            sender_ip: m.sender_ip.to_string(),
            helo: m.helo_domain.clone(),
            from: m.from.to_string(),
            rcpt: m
                .rcpt()
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
            subject: m.subject.clone(),
            body: m.body.clone(),
            label: self.label,
            retry: self.retry,
            submitted_at: m.submitted_at.as_secs_f64(),
        };
        serde_json::to_string(&line).expect("record serializes")
    }

    pub fn from_line(text: &str) -> Result<CorpusRecord, String> {
        let line: RecordLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let msg_err = |e: MessageError| e.to_string();
        let rcpt = line
            .rcpt
            .split(',')
            .filter(|s| !s.is_empty())
            .map(parse_address)
            .collect::<Result<Vec<EmailAddress>, _>>()
            .map_err(msg_err)?;
        let submitted_at = Micros::from_secs_f64(line.submitted_at)
            .ok_or_else(|| format!("bad submitted_at {}", line.submitted_at))?;
        if line.helo.trim().is_empty() {
            return Err("empty helo".into());
        }
        let message = EmailMessage::new(
            line.id,
            line.sender_ip.parse().map_err(msg_err)?,
            line.helo,
            parse_address(&line.from).map_err(msg_err)?,
            rcpt,
            line.subject,
            line.body,
            submitted_at,
        )
        .map_err(msg_err)?;
        Ok(CorpusRecord {
            message,
            label: line.label,
            retry: line.retry,
        })
    }
}

/// One JSON object per line, `\n` terminated.
pub fn render_corpus(records: &[CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_corpus(text: &str, origin: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| CorpusError::Parse {
            path: origin.to_string(),
            line: idx + 1,
            reason,
        };
        let record = CorpusRecord::from_line(line).map_err(err)?;
        if !ids.insert(record.message.id.clone()) {
            return Err(err(format!("duplicate id {:?}", record.message.id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_corpus(&text, &path.display().to_string())
}

pub fn save_corpus(records: &[CorpusRecord], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, render_corpus(records)).map_err(|e| CorpusError::io(path, e))
}

/// Training pairs for [`crate::filters::bayes_train`].
pub fn labeled(records: &[CorpusRecord]) -> impl Iterator<Item = (&EmailMessage, Label)> {
    records.iter().map(|r| (&r.message, r.label))
}

//! Token-probability content classifier.
//!
//! Each message contributes its *set* of tokens once. A token's spam
//! probability is the ratio of its normalized spam frequency to the sum of
//! normalized spam and ham frequencies, clamped to `[floor, ceil]`. A message
//! is scored by taking the `top_n` tokens furthest from 0.5 and combining
//! them as `prod(p) / (prod(p) + prod(1 - p))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FilterError;
use crate::message::EmailMessage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spam,
    Ham,
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spam" => Ok(Label::Spam),
            "ham" => Ok(Label::Ham),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BayesParams {
    pub unknown: f64,
    pub floor: f64,
    pub ceil: f64,
    pub top_n: usize,
    pub threshold: f64,
}

impl Default for BayesParams {
    fn default() -> Self {
        BayesParams {
            unknown: 0.4,
            floor: 0.01,
            ceil: 0.99,
            top_n: 15,
            threshold: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TokenCount {
    pub spam: u64,
    pub ham: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStats {
    tokens: BTreeMap<String, TokenCount>,
    pub spam_msgs: u64,
    pub ham_msgs: u64,
}

/// Case-folded maximal runs of letters and digits, at least three characters.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| run.chars().count() >= 3)
        .map(str::to_lowercase)
        .collect()
}

pub fn message_tokens(msg: &EmailMessage) -> BTreeSet<String> {
    let mut tokens = tokenize(&msg.subject);
    tokens.extend(tokenize(&msg.body));
    tokens
}

impl TokenStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, token: &str) -> Option<TokenCount> {
        self.tokens.get(token).copied()
    }

    pub fn vocabulary(&self) -> usize {
        self.tokens.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TokenCount)> {
        self.tokens.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn learn(&mut self, msg: &EmailMessage, label: Label) {
        for token in message_tokens(msg) {
            let entry = self.tokens.entry(token).or_default();
            match label {
                Label::Spam => entry.spam += 1,
                Label::Ham => entry.ham += 1,
            }
        }
        match label {
            Label::Spam => self.spam_msgs += 1,
            Label::Ham => self.ham_msgs += 1,
        }
    }

    pub fn token_probability(&self, token: &str, params: &BayesParams) -> f64 {
        let Some(count) = self.get(token) else {
            return params.unknown;
        };
        let freq = |n: u64, total: u64| if total == 0 { 0.0 } else { n as f64 / total as f64 };
        let spam = freq(count.spam, self.spam_msgs);
        let ham = freq(count.ham, self.ham_msgs);
        if spam + ham == 0.0 {
            return params.unknown;
        }
        (spam / (spam + ham)).clamp(params.floor, params.ceil)
    }

    /// `#totals<TAB>spam_msgs<TAB>ham_msgs` then `token<TAB>spam<TAB>ham`
    /// lines in token order.
    pub fn render(&self) -> String {
        let mut out = format!("#totals\t{}\t{}\n", self.spam_msgs, self.ham_msgs);
        for (token, c) in &self.tokens {
            let _ = writeln!(out, "{token}\t{}\t{}", c.spam, c.ham);
        }
        out
    }

    pub fn parse(text: &str) -> Result<TokenStats, FilterError> {
        let mut stats = TokenStats::new();
        let mut saw_totals = false;
        for (idx, line) in text.lines().enumerate() {
            let err = |reason: String| FilterError::Parse { line: idx + 1, reason };
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad count {s:?}")));
            let (a, b) = (num(fields[1])?, num(fields[2])?);
            if fields[0] == "#totals" {
                if saw_totals || idx != 0 {
                    return Err(err("totals line must come first, once".into()));
                }
                saw_totals = true;
                stats.spam_msgs = a;
                stats.ham_msgs = b;
                continue;
            }
            if !saw_totals {
                return Err(err("missing #totals header".into()));
            }
            let token = fields[0];
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(err(format!("bad token {token:?}")));
            }
            if a > stats.spam_msgs || b > stats.ham_msgs {
                return Err(err(format!("counts for {token:?} exceed totals")));
            }
            if stats
                .tokens
                .insert(token.to_string(), TokenCount { spam: a, ham: b })
                .is_some()
            {
                return Err(err(format!("duplicate token {token:?}")));
            }
        }
        if !saw_totals {
            return Err(FilterError::Parse {
                line: 1,
                reason: "missing #totals header".into(),
            });
        }
        Ok(stats)
    }
}

pub fn bayes_train<'a, I>(corpus: I) -> Result<TokenStats, FilterError>
where
    I: IntoIterator<Item = (&'a EmailMessage, Label)>,
{
    let mut stats = TokenStats::new();
    let mut seen = false;
    for (msg, label) in corpus {
        stats.learn(msg, label);
        seen = true;
    }
    if !seen {
        return Err(FilterError::EmptyCorpus);
    }
    Ok(stats)
}

const COMPLEMENT_EPS: f64 = 1e-12;

/// Combines already-selected token probabilities.
///
/// A pair `p`, `q` with `p + q == 1` multiplies both products by the same
/// amount, so complementary pairs are cancelled before multiplying. In f64
/// `1 - 0.99 != 0.01`, and without the cancellation a balanced set would
/// land a few ulps off 0.5.
pub fn combine(probs: &[f64]) -> f64 {
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut kept = Vec::with_capacity(sorted.len());
    let (mut lo, mut hi) = (0usize, sorted.len());
    while lo + 1 < hi {
        let sum = sorted[lo] + sorted[hi - 1];
        if (sum - 1.0).abs() <= COMPLEMENT_EPS {
            lo += 1;
            hi -= 1;
        } else if sum < 1.0 {
            kept.push(sorted[lo]);
            lo += 1;
        } else {
            kept.push(sorted[hi - 1]);
            hi -= 1;
        }
    }
    kept.extend_from_slice(&sorted[lo..hi]);
    if kept.is_empty() {
        return 0.5;
    }
    let spam: f64 = kept.iter().product();
    let ham: f64 = kept.iter().map(|p| 1.0 - p).product();
    if spam + ham == 0.0 {
        return 0.5;
    }
    spam / (spam + ham)
}

/// Picks the `top_n` most decisive tokens: furthest from 0.5, ties broken
/// by token order.
pub fn select_tokens(scored: &mut Vec<(&str, f64)>, top_n: usize) {
    scored.sort_by(|(ta, pa), (tb, pb)| {
        let (da, db) = ((pa - 0.5).abs(), (pb - 0.5).abs());
        db.total_cmp(&da).then_with(|| ta.cmp(tb))
    });
    scored.truncate(top_n);
}

pub fn score_tokens<'a, I>(tokens: I, stats: &TokenStats, params: &BayesParams) -> f64
where
    I: IntoIterator<Item = &'a str>,
{
    let mut scored: Vec<(&str, f64)> = tokens
        .into_iter()
        .map(|t| (t, stats.token_probability(t, params)))
        .collect();
    select_tokens(&mut scored, params.top_n);
    let probs: Vec<f64> = scored.into_iter().map(|(_, p)| p).collect();
    combine(&probs)
}

pub fn bayes_score(msg: &EmailMessage, stats: &TokenStats, params: &BayesParams) -> f64 {
    let tokens = message_tokens(msg);
    score_tokens(tokens.iter().map(String::as_str), stats, params)
}

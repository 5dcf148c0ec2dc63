use std::fmt;
use std::str::FromStr;

use super::FilterError;
use crate::message::{normalize_text, EmailMessage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleField {
    Subject,
    Body,
    FromDomain,
    Helo,
}

impl RuleField {
    /// Subject and body rules depend only on message content.
    pub fn is_content(self) -> bool {
        matches!(self, RuleField::Subject | RuleField::Body)
    }

    fn name(self) -> &'static str {
        match self {
            RuleField::Subject => "subject",
            RuleField::Body => "body",
            RuleField::FromDomain => "from_domain",
            RuleField::Helo => "helo",
        }
    }
}

impl FromStr for RuleField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subject" => Ok(RuleField::Subject),
            "body" => Ok(RuleField::Body),
            "from_domain" => Ok(RuleField::FromDomain),
            "helo" => Ok(RuleField::Helo),
            other => Err(format!("unknown rule field {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleAction {
    Pass,
    Block,
}

impl FromStr for RuleAction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pass" => Ok(RuleAction::Pass),
            "block" => Ok(RuleAction::Block),
            other => Err(format!("unknown rule action {other:?}")),
        }
    }
}

impl fmt::Display for RuleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleAction::Pass => "pass",
            RuleAction::Block => "block",
        })
    }
}

/// Case-insensitive literal substring rule. Subject and body are compared
/// after whitespace normalization, so the pattern is stored normalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    field: RuleField,
    pattern: String,
    action: RuleAction,
}

impl Rule {
    pub fn new(field: RuleField, pattern: &str, action: RuleAction) -> Result<Rule, String> {
        let pattern = if field.is_content() {
            normalize_text(pattern)
        } else {
            pattern.trim().to_lowercase()
        };
        if pattern.is_empty() {
            return Err("empty rule pattern".into());
        }
        Ok(Rule {
            field,
            pattern,
            action,
        })
    }

    pub fn field(&self) -> RuleField {
        self.field
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn action(&self) -> RuleAction {
        self.action
    }

    fn matches_normalized(&self, haystack: &str) -> bool {
        haystack.contains(&self.pattern)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

/// Result of evaluating a rule set: the action and the index of the rule
/// that decided it, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleOutcome {
    pub action: RuleAction,
    pub index: Option<usize>,
}

impl RuleOutcome {
    pub const DEFAULT: RuleOutcome = RuleOutcome {
        action: RuleAction::Pass,
        index: None,
    };
}

/// Message fields prepared once for repeated rule evaluation.
pub struct RuleInput {
    subject: String,
    body: String,
    from_domain: String,
    helo: String,
}

impl RuleInput {
    pub fn new(msg: &EmailMessage) -> Self {
        RuleInput {
            subject: normalize_text(&msg.subject),
            body: normalize_text(&msg.body),
            from_domain: msg.from.domain().to_lowercase(),
            helo: msg.helo_domain.to_lowercase(),
        }
    }

    fn field(&self, f: RuleField) -> &str {
        match f {
            RuleField::Subject => &self.subject,
            RuleField::Body => &self.body,
            RuleField::FromDomain => &self.from_domain,
            RuleField::Helo => &self.helo,
        }
    }
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn outcome_at(&self, index: Option<usize>) -> RuleOutcome {
        match index {
            Some(i) => RuleOutcome {
                action: self.rules[i].action,
                index: Some(i),
            },
            None => RuleOutcome::DEFAULT,
        }
    }

    /// Lowest index among rules whose field satisfies `which` and that match.
    pub fn first_match(&self, input: &RuleInput, which: impl Fn(RuleField) -> bool) -> Option<usize> {
        self.rules
            .iter()
            .position(|r| which(r.field) && r.matches_normalized(input.field(r.field)))
    }

    /// `field<TAB>pattern<TAB>action` per line; `#` comments and blank lines skipped.
    pub fn parse(text: &str) -> Result<RuleSet, FilterError> {
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let err = |reason: String| FilterError::Parse { line: idx + 1, reason };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [field, pattern, action] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            };
            let rule = Rule::new(
                field.trim().parse().map_err(err)?,
                pattern,
                action.trim().parse().map_err(err)?,
            )
            .map_err(err)?;
            rules.push(rule);
        }
        Ok(RuleSet { rules })
    }

    pub fn render(&self) -> String {
        self.rules
            .iter()
            .map(|r| format!("{}\t{}\t{}\n", r.field.name(), r.pattern, r.action))
            .collect()
    }
}

/// First matching rule wins; no match means Pass.
pub fn rules_apply(msg: &EmailMessage, rules: &RuleSet) -> RuleOutcome {
    let input = RuleInput::new(msg);
    rules.outcome_at(rules.first_match(&input, |_| true))
}

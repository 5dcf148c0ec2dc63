//! The filtering algorithm run by a mail server for each (message, recipient)
//! pair: sender authentication, optional outbound counter, receiver
//! identification, list filters, then the statistical stage, which can be
//! shared between recipients through a digest-keyed cache.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::filters::{
    bayes_score, blacklist_check, counter_check, greylist_check, reverse_lookup_check,
    whitelist_check, AddressList, BayesParams, CounterOutcome, CounterState, GreylistKey,
    GreylistOutcome, GreylistState, ListMatch, ReverseMode, ReverseOutcome, RuleAction, RuleSet,
    TokenStats,
};
use crate::filters::rules::RuleInput;
use crate::message::{content_digest, ContentDigest, EmailAddress, EmailMessage, IpAddress, Stage, Verdict};
use crate::netsim::{DnsDirectory, Micros};

/// Which end of the transfer the pipeline runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mount {
    SenderSide,
    ReceiverSide,
}

impl fmt::Display for Mount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mount::SenderSide => "sender",
            Mount::ReceiverSide => "receiver",
        })
    }
}

/// On/off switches for the optional stages. Sender authentication and
/// receiver identification always run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageToggles {
    pub counter: bool,
    pub whitelist: bool,
    pub blacklist: bool,
    pub greylist: bool,
    pub content: bool,
    pub rules: bool,
}

impl StageToggles {
    pub const ALL: StageToggles = StageToggles {
        counter: true,
        whitelist: true,
        blacklist: true,
        greylist: true,
        content: true,
        rules: true,
    };
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            counter: false,
            whitelist: true,
            blacklist: true,
            greylist: false,
            content: true,
            rules: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub stages: StageToggles,
    pub bayes: BayesParams,
    /// `None` disables the reverse lookup inside sender authentication.
    pub reverse_lookup: Option<ReverseMode>,
    pub dedup: bool,
    pub whitelist_skips_content: bool,
    pub mount: Mount,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: StageToggles::default(),
            bayes: BayesParams::default(),
            reverse_lookup: None,
            dedup: false,
            whitelist_skips_content: false,
            mount: Mount::SenderSide,
        }
    }
}

/// Content-determined part of the statistical stage, cached per digest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContentOutcome {
    /// `None` when the content filter is disabled.
    pub score: Option<f64>,
    /// First subject/body rule that matched.
    pub content_rule: Option<usize>,
}

/// Filters and mutable state mounted on one server.
#[derive(Clone, Debug, Default)]
pub struct FilterContext {
    pub client_directory: BTreeSet<IpAddress>,
    pub whitelist: AddressList,
    pub blacklist: AddressList,
    pub greylist: GreylistState,
    pub stats: TokenStats,
    pub rules: RuleSet,
    pub counter: CounterState,
    pub config: PipelineConfig,
    dedup_cache: HashMap<ContentDigest, ContentOutcome>,
}

impl FilterContext {
    pub fn new(client_directory: BTreeSet<IpAddress>, config: PipelineConfig) -> Self {
        FilterContext {
            client_directory,
            config,
            ..Default::default()
        }
    }

    pub fn cached_digests(&self) -> usize {
        self.dedup_cache.len()
    }

    pub fn clear_cache(&mut self) {
        self.dedup_cache.clear();
    }

    /// Same lists, statistics and configuration with fresh greylist,
    /// counter and cache state.
    pub fn fresh_copy(&self) -> FilterContext {
        FilterContext {
            client_directory: self.client_directory.clone(),
            whitelist: self.whitelist.clone(),
            blacklist: self.blacklist.clone(),
            greylist: GreylistState::new(self.greylist.params),
            stats: self.stats.clone(),
            rules: self.rules.clone(),
            counter: CounterState::new(self.counter.params),
            config: self.config.clone(),
            dedup_cache: HashMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuthOutcome {
    Ok { unconfirmed: bool },
    Terminate(String),
}

pub fn authenticate_sender(msg: &EmailMessage, ctx: &FilterContext, dns: &DnsDirectory) -> AuthOutcome {
    if !ctx.client_directory.contains(&msg.sender_ip) {
        return AuthOutcome::Terminate(format!("sender ip {} is not a registered client", msg.sender_ip));
    }
    match ctx.config.reverse_lookup {
        None => AuthOutcome::Ok { unconfirmed: false },
        Some(mode) => match reverse_lookup_check(msg.sender_ip, &msg.helo_domain, dns, mode) {
            ReverseOutcome::Pass => AuthOutcome::Ok { unconfirmed: false },
            ReverseOutcome::PassUnconfirmed => AuthOutcome::Ok { unconfirmed: true },
            ReverseOutcome::Block => AuthOutcome::Terminate(format!(
                "reverse lookup of {} does not confirm {}",
                msg.sender_ip, msg.helo_domain
            )),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReceiverOutcome {
    /// Name of the server hosting the recipient's domain.
    Ok(String),
    Failure,
}

pub fn identify_receiver(rcpt: &EmailAddress, dns: &DnsDirectory) -> ReceiverOutcome {
    match dns.resolve(rcpt.domain()) {
        Some(server) => ReceiverOutcome::Ok(server.to_string()),
        None => ReceiverOutcome::Failure,
    }
}

/// Result of the statistical stage for one attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContentResult {
    pub verdict: Verdict,
    pub cache_hit: bool,
    /// True when the filter actually ran (and must be paid for).
    pub executed: bool,
}

fn evaluate_content(msg: &EmailMessage, input: &RuleInput, ctx: &FilterContext) -> ContentOutcome {
    let cfg = &ctx.config;
    ContentOutcome {
        score: cfg
            .stages
            .content
            .then(|| bayes_score(msg, &ctx.stats, &cfg.bayes)),
        content_rule: if cfg.stages.rules {
            ctx.rules.first_match(input, |f| f.is_content())
        } else {
            None
        },
    }
}

fn content_verdict(outcome: ContentOutcome, input: &RuleInput, ctx: &FilterContext) -> Verdict {
    let cfg = &ctx.config;
    if let Some(score) = outcome.score {
        if score >= cfg.bayes.threshold {
            return Verdict::block(
                Stage::ContentFilter,
                format!("bayes score {score:.6} >= {:.6}", cfg.bayes.threshold),
            );
        }
    }
    if cfg.stages.rules {
        let envelope_rule = ctx.rules.first_match(input, |f| !f.is_content());
        let first = match (outcome.content_rule, envelope_rule) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let decided = ctx.rules.outcome_at(first);
        if decided.action == RuleAction::Block {
            let i = decided.index.expect("block comes from a rule");
            let rule = &ctx.rules.rules()[i];
            return Verdict::block(
                Stage::RuleFilter,
                format!("rule {i} matched {:?}", rule.pattern()),
            );
        }
    }
    Verdict::pass("forwarded")
}

/// Runs the statistical stage once per distinct content when dedup is on;
/// later messages with the same digest reuse the cached outcome for free.
pub fn filter_once(msg: &EmailMessage, ctx: &mut FilterContext) -> ContentResult {
    let input = RuleInput::new(msg);
    if !ctx.config.dedup {
        let outcome = evaluate_content(msg, &input, ctx);
        return ContentResult {
            verdict: content_verdict(outcome, &input, ctx),
            cache_hit: false,
            executed: true,
        };
    }
    let digest = content_digest(msg);
    let (outcome, cache_hit) = match ctx.dedup_cache.get(&digest) {
        Some(cached) => (*cached, true),
        None => {
            let outcome = evaluate_content(msg, &input, ctx);
            ctx.dedup_cache.insert(digest, outcome);
            (outcome, false)
        }
    };
    ContentResult {
        verdict: content_verdict(outcome, &input, ctx),
        cache_hit,
        executed: !cache_hit,
    }
}

/// Everything one pipeline run did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineOutcome {
    pub verdict: Verdict,
    /// Stages in the order they were entered.
    pub entered: Vec<Stage>,
    pub content_executed: bool,
    pub cache_hit: bool,
    pub notes: Vec<String>,
}

impl PipelineOutcome {
    pub fn reached(&self, stage: Stage) -> bool {
        self.entered.contains(&stage)
    }

    /// Entered stages other than the statistical ones and the final hop.
    pub fn cheap_stages(&self) -> u64 {
        self.entered
            .iter()
            .filter(|s| !matches!(s, Stage::ContentFilter | Stage::RuleFilter | Stage::Forwarded))
            .count() as u64
    }
}

/// Filters one (message, recipient) pair, stopping at the first stage that
/// does not pass. `now` is the logical arrival time used by the greylist
/// and the counter.
pub fn run_pipeline(
    msg: &EmailMessage,
    rcpt: &EmailAddress,
    now: Micros,
    ctx: &mut FilterContext,
    dns: &DnsDirectory,
) -> PipelineOutcome {
    debug_assert!(msg.rcpt().contains(rcpt), "recipient not on the message");
    let mut out = PipelineOutcome {
        verdict: Verdict::pass("forwarded"),
        entered: Vec::with_capacity(8),
        content_executed: false,
        cache_hit: false,
        notes: Vec::new(),
    };
    let stop = |mut out: PipelineOutcome, verdict: Verdict| {
        out.verdict = verdict;
        out
    };
    let toggles = ctx.config.stages;

    out.entered.push(Stage::SenderAuth);
    match authenticate_sender(msg, ctx, dns) {
        AuthOutcome::Terminate(reason) => return stop(out, Verdict::block(Stage::SenderAuth, reason)),
        AuthOutcome::Ok { unconfirmed: true } => out
            .notes
            .push(format!("reverse lookup unconfirmed for {}", msg.sender_ip)),
        AuthOutcome::Ok { unconfirmed: false } => {}
    }

    if toggles.counter && ctx.config.mount == Mount::SenderSide {
        out.entered.push(Stage::CounterCheck);
        if counter_check(msg.sender_ip, now, &mut ctx.counter) == CounterOutcome::Block {
            let limit = ctx.counter.params.limit;
            return stop(
                out,
                Verdict::block(Stage::CounterCheck, format!("client {} over send limit {limit}", msg.sender_ip)),
            );
        }
    }

    out.entered.push(Stage::ReceiverIdent);
    if identify_receiver(rcpt, dns) == ReceiverOutcome::Failure {
        return stop(
            out,
            Verdict::failure_to_sender(format!("recipient domain {} does not resolve", rcpt.domain())),
        );
    }

    let mut whitelisted = false;
    if toggles.whitelist {
        out.entered.push(Stage::WhitelistCheck);
        whitelisted = whitelist_check(&msg.from, &ctx.whitelist) == ListMatch::Hit;
        if whitelisted {
            out.notes.push(format!("{} is whitelisted", msg.from));
        }
    }

    if !whitelisted {
        if toggles.blacklist {
            out.entered.push(Stage::BlacklistCheck);
            let listed = blacklist_check(msg.sender_ip, &msg.helo_domain, &ctx.blacklist) == ListMatch::Hit
                || blacklist_check(msg.sender_ip, msg.from.domain(), &ctx.blacklist) == ListMatch::Hit
                || ctx.blacklist.contains_address(&msg.from);
            if listed {
                return stop(
                    out,
                    Verdict::block(Stage::BlacklistCheck, format!("sender {} / {} is blacklisted", msg.sender_ip, msg.from)),
                );
            }
        }
        if toggles.greylist {
            out.entered.push(Stage::GreylistCheck);
            let key = GreylistKey {
                sender_ip: msg.sender_ip,
                from: msg.from.clone(),
                rcpt: rcpt.clone(),
            };
            if greylist_check(&key, now, &mut ctx.greylist) == GreylistOutcome::TempReject {
                return stop(
                    out,
                    Verdict::temp_reject(Stage::GreylistCheck, "greylisted, retry later"),
                );
            }
        }
    }

    let skip_content = whitelisted && ctx.config.whitelist_skips_content;
    if !skip_content && (toggles.content || toggles.rules) {
        let result = filter_once(msg, ctx);
        out.content_executed = result.executed;
        out.cache_hit = result.cache_hit;
        if toggles.content {
            out.entered.push(Stage::ContentFilter);
        }
        let blocked_by_content = result.verdict.stage() == Stage::ContentFilter;
        if toggles.rules && !blocked_by_content {
            out.entered.push(Stage::RuleFilter);
        }
        if result.verdict.decision() != crate::message::Decision::Pass {
            return stop(out, result.verdict);
        }
    }

    out.entered.push(Stage::Forwarded);
    out
}

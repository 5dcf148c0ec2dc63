use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::{HarnessError, Layout, ScenarioMetrics, ScenarioSpec, SENDER};
use crate::corpus::{CorpusRecord, RetryPolicy};
use crate::message::{Decision, EmailAddress, EmailMessage, Stage, Verdict};
use crate::netsim::{
    charge_filter, close_session, establish_session, transmit, ChargeKind, CostModel, DnsDirectory,
    Micros, NetError, SmtpSession, VirtualClock, World,
};
use crate::pipeline::{run_pipeline, FilterContext, Mount, PipelineOutcome};

/// One pipeline run for one recipient.
#[derive(Clone, Debug, PartialEq)]
pub struct AttemptRecord {
    pub msg_index: usize,
    pub msg_id: String,
    /// Recipient after routing.
    pub rcpt: EmailAddress,
    /// Logical arrival time.
    pub at: Micros,
    /// Server whose filters ran.
    pub server: String,
    pub verdict: Verdict,
    /// Stages entered, in order.
    pub stages: Vec<Stage>,
    pub reached_content: bool,
    pub content_executed: bool,
    pub cache_hit: bool,
    pub retry: bool,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub n_messages: usize,
    pub metrics: ScenarioMetrics,
    /// Every attempt in processing order, retries included.
    pub attempts: Vec<AttemptRecord>,
    pub clock: VirtualClock,
    /// The world after delivery, with each server's filter state attached.
    pub world: World,
    finals: Vec<usize>,
}

impl ScenarioRun {
    /// The last attempt per (message, recipient), in corpus order.
    pub fn final_attempts(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.finals.iter().map(|&i| &self.attempts[i])
    }
}

struct Routed<'a> {
    record: &'a CorpusRecord,
    message: EmailMessage,
    /// Assigned destination per recipient.
    dests: Vec<&'static str>,
}

/// Deals recipients over the layout in corpus order and moves each
/// resolvable recipient onto its assigned server's primary domain.
/// Unresolvable recipients keep their domain so identification fails.
fn route<'a>(
    corpus: &'a [CorpusRecord],
    layout: Layout,
    world: &World,
) -> Result<Vec<Routed<'a>>, HarnessError> {
    let dests = layout.destinations();
    let mut k = 0usize;
    corpus
        .iter()
        .map(|record| {
            let m = &record.message;
            let mut rcpt = Vec::with_capacity(m.rcpt().len());
            let mut assigned = Vec::with_capacity(m.rcpt().len());
            for r in m.rcpt() {
                let dest = dests[k % dests.len()];
                k += 1;
                assigned.push(dest);
                if world.dns.resolve(r.domain()).is_some() {
                    let domain = world.server(dest).expect("checked").primary_domain();
                    rcpt.push(r.with_domain(domain).map_err(|e| HarnessError::Routing(e.to_string()))?);
                } else {
                    rcpt.push(r.clone());
                }
            }
            let message = with_rcpt(m, rcpt).map_err(|_| {
                HarnessError::Routing(format!("recipients of {} collide after routing", m.id))
            })?;
            Ok(Routed { record, message, dests: assigned })
        })
        .collect()
}

fn with_rcpt(m: &EmailMessage, rcpt: Vec<EmailAddress>) -> Result<EmailMessage, crate::message::MessageError> {
    EmailMessage::new(
        m.id.clone(),
        m.sender_ip,
        m.helo_domain.clone(),
        m.from.clone(),
        rcpt,
        m.subject.clone(),
        m.body.clone(),
        m.submitted_at,
    )
}

fn subset(m: &EmailMessage, idxs: &[usize]) -> EmailMessage {
    let rcpt = idxs.iter().map(|&i| m.rcpt()[i].clone()).collect();
    with_rcpt(m, rcpt).expect("subset of a valid recipient list")
}

struct Event {
    at: Micros,
    msg: usize,
    rcpts: Vec<usize>,
    retry: bool,
}

struct Runner<'a> {
    spec: &'a ScenarioSpec,
    cost: &'a CostModel,
    dns: DnsDirectory,
    world: World,
    clock: VirtualClock,
    sessions: BTreeMap<String, SmtpSession>,
    contexts: BTreeMap<String, FilterContext>,
    routed: Vec<Routed<'a>>,
    attempts: Vec<AttemptRecord>,
    finals: Vec<Vec<Option<usize>>>,
    metrics: ScenarioMetrics,
    events: Vec<Event>,
    queue: BinaryHeap<Reverse<(Micros, usize)>>,
    retry_delay: Micros,
}

impl<'a> Runner<'a> {
    fn schedule(&mut self, event: Event) {
        let seq = self.events.len();
        self.queue.push(Reverse((event.at, seq)));
        self.events.push(event);
    }

    fn open_session(&mut self, dest: &str) -> Result<(), HarnessError> {
        if !self.sessions.contains_key(dest) {
            let s = establish_session(&self.world, SENDER, dest, &mut self.clock, self.cost)
                .map_err(net_error)?;
            self.sessions.insert(dest.to_string(), s);
            self.metrics.sessions_opened += 1;
        }
        Ok(())
    }

    /// Sends `copy` from A to `dest` over the (possibly new) session.
    fn send(&mut self, dest: &str, copy: &EmailMessage) -> Result<(), HarnessError> {
        self.open_session(dest)?;
        let session = self.sessions.get_mut(dest).expect("opened above");
        transmit(copy, copy.rcpt().len() as u64, session, &mut self.clock, self.cost)
            .map_err(net_error)?;
        self.metrics.bytes_transferred += copy.size_bytes();
        Ok(())
    }

    fn filter(&mut self, server: &str, copy: &EmailMessage, rcpt_idx: usize, event: usize) -> PipelineOutcome {
        let (at, msg, retry) = {
            let e = &self.events[event];
            (e.at, e.msg, e.retry)
        };
        let rcpt = self.routed[msg].message.rcpt()[rcpt_idx].clone();
        debug_assert!(copy.rcpt().contains(&rcpt));
        let ctx = self.contexts.get_mut(server).expect("context per filtering server");
        let outcome = run_pipeline(copy, &rcpt, at, ctx, &self.dns);

        let stage_cost = self.cost.per_stage * outcome.cheap_stages();
        if stage_cost > Micros::ZERO {
            self.clock.charge(ChargeKind::Stage, stage_cost);
        }
        if outcome.content_executed {
            charge_filter(&mut self.clock, self.cost, 1);
            self.metrics.filter_invocations += 1;
        }

        let record: &'a CorpusRecord = self.routed[msg].record;
        self.attempts.push(AttemptRecord {
            msg_index: msg,
            msg_id: record.message.id.clone(),
            rcpt,
            at,
            server: server.to_string(),
            verdict: outcome.verdict.clone(),
            stages: outcome.entered.clone(),
            reached_content: outcome.reached(Stage::ContentFilter) || outcome.reached(Stage::RuleFilter),
            content_executed: outcome.content_executed,
            cache_hit: outcome.cache_hit,
            retry,
        });
        self.finals[msg][rcpt_idx] = Some(self.attempts.len() - 1);

        if outcome.verdict.decision() == Decision::TempReject
            && record.retry == RetryPolicy::RetryOnce
            && !retry
        {
            self.schedule(Event {
                at: at + self.retry_delay,
                msg,
                rcpts: vec![rcpt_idx],
                retry: true,
            });
        }
        outcome
    }

    fn deliver(&mut self, dest: &str, rcpt: &EmailAddress) {
        if let Some(server) = self.world.server_mut(dest) {
            server.deliver(rcpt);
        }
    }

    fn receiver_side(&mut self, event: usize) -> Result<(), HarnessError> {
        let msg = self.events[event].msg;
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &idx in &self.events[event].rcpts {
            groups.entry(self.routed[msg].dests[idx]).or_default().push(idx);
        }
        for (dest, idxs) in groups {
            let copy = subset(&self.routed[msg].message, &idxs);
            self.send(dest, &copy)?;
            for (&idx, rcpt) in idxs.iter().zip(copy.rcpt()) {
                let outcome = self.filter(dest, &copy, idx, event);
                match outcome.verdict.decision() {
                    Decision::Pass => self.deliver(dest, rcpt),
                    Decision::Block if self.spec.keep_blocked => {
                        if let Some(s) = self.world.server_mut(dest) {
                            s.spam_folder += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn sender_side(&mut self, event: usize) -> Result<(), HarnessError> {
        let (msg, idxs, retry) = {
            let e = &self.events[event];
            (e.msg, e.rcpts.clone(), e.retry)
        };
        let copy = if retry {
            subset(&self.routed[msg].message, &idxs)
        } else {
            self.routed[msg].message.clone()
        };
        let mut passed: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for &idx in &idxs {
            let outcome = self.filter(SENDER, &copy, idx, event);
            if outcome.verdict.decision() == Decision::Pass {
                let rcpt = &self.routed[msg].message.rcpt()[idx];
                let dest = self.dns.resolve(rcpt.domain()).expect("passed identification").to_string();
                passed.entry(dest).or_default().push(idx);
            }
        }
        for (dest, group) in passed {
            let out = subset(&self.routed[msg].message, &group);
            if dest == SENDER {
                for r in out.rcpt() {
                    self.deliver(SENDER, r);
                }
                continue;
            }
            self.send(&dest, &out)?;
            for r in out.rcpt() {
                self.deliver(&dest, r);
            }
        }
        Ok(())
    }

}

fn net_error(e: NetError) -> HarnessError {
    HarnessError::WorldMismatch(e.to_string())
}

fn check_world(world: &World, spec: &ScenarioSpec) -> Result<(), HarnessError> {
    let missing = std::iter::once(SENDER)
        .chain(spec.id.layout().destinations().iter().copied())
        .find(|name| world.server(name).is_none());
    if let Some(name) = missing {
        return Err(HarnessError::WorldMismatch(format!(
            "scenario {} needs server {name}",
            spec.id
        )));
    }
    if !world.is_consistent() {
        return Err(HarnessError::WorldMismatch("dns and servers disagree".into()));
    }
    Ok(())
}

/// Runs one scenario over the first `n_messages` corpus records.
///
/// Receiver-side ids transmit every message and filter at the destination;
/// sender-side ids filter at A and transmit only what passes. Greylist and
/// counter decisions use each attempt's logical arrival time, so verdicts do
/// not depend on where the filters are mounted.
pub fn run_scenario(
    spec: &ScenarioSpec,
    world: &World,
    template: &FilterContext,
    corpus: &[CorpusRecord],
) -> Result<ScenarioRun, HarnessError> {
    check_world(world, spec)?;
    let n = spec.n_messages.unwrap_or(corpus.len());
    if n == 0 || corpus.len() < n {
        return Err(HarnessError::CorpusTooSmall {
            have: corpus.len(),
            need: n.max(1),
        });
    }
    let layout = spec.id.layout();
    let mount = spec.id.mount();
    let routed = route(&corpus[..n], layout, world)?;

    let mut contexts = BTreeMap::new();
    let filtering: &[&str] = match mount {
        Mount::SenderSide => &[SENDER],
        Mount::ReceiverSide => layout.destinations(),
    };
    for name in filtering {
        let mut ctx = template.fresh_copy();
        ctx.config.mount = mount;
        ctx.config.dedup = spec.dedup;
        contexts.insert(name.to_string(), ctx);
    }

    let mut runner = Runner {
        spec,
        cost: &spec.cost,
        dns: world.dns.clone(),
        world: world.clone(),
        clock: VirtualClock::new(),
        sessions: BTreeMap::new(),
        contexts,
        finals: routed.iter().map(|r| vec![None; r.message.rcpt().len()]).collect(),
        routed,
        attempts: Vec::new(),
        metrics: ScenarioMetrics::default(),
        events: Vec::new(),
        queue: BinaryHeap::new(),
        retry_delay: template.greylist.params.min_delay,
    };

    for msg in 0..n {
        let r = &runner.routed[msg].message;
        let event = Event {
            at: r.submitted_at,
            msg,
            rcpts: (0..r.rcpt().len()).collect(),
            retry: false,
        };
        runner.schedule(event);
    }

    if mount == Mount::SenderSide {
        // A connects to every destination it routes to before filtering.
        let mut dests: Vec<String> = runner
            .routed
            .iter()
            .flat_map(|r| r.message.rcpt().iter())
            .filter_map(|a| runner.dns.resolve(a.domain()))
            .filter(|d| *d != SENDER)
            .map(str::to_string)
            .collect();
        dests.sort();
        dests.dedup();
        for d in dests {
            runner.open_session(&d)?;
        }
    }

    while let Some(Reverse((_, seq))) = runner.queue.pop() {
        match mount {
            Mount::ReceiverSide => runner.receiver_side(seq)?,
            Mount::SenderSide => runner.sender_side(seq)?,
        }
    }

    let cost = runner.cost;
    for session in runner.sessions.values_mut() {
        close_session(session, &mut runner.clock, cost);
    }

    let finals: Vec<usize> = runner
        .finals
        .iter()
        .flatten()
        .map(|f| f.expect("every recipient attempted"))
        .collect();
    let mut metrics = runner.metrics;
    for &i in &finals {
        match runner.attempts[i].verdict.decision() {
            Decision::Pass => metrics.delivered += 1,
            Decision::Block => metrics.blocked += 1,
            Decision::TempReject => metrics.temp_rejected += 1,
            Decision::FailureToSender => metrics.failure_notices += 1,
        }
    }
    let clock = runner.clock;
    debug_assert!(clock.audit());
    metrics.total = clock.now();
    metrics.filter = clock.filter_total();
    metrics.network = clock.network_total();

    let mut world = runner.world;
    for (name, ctx) in runner.contexts {
        if let Some(server) = world.server_mut(&name) {
            server.filters = Some(ctx);
        }
    }
    Ok(ScenarioRun {
        spec: spec.clone(),
        n_messages: n,
        metrics,
        attempts: runner.attempts,
        clock,
        world,
        finals,
    })
}

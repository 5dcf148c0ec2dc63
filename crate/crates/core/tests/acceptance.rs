//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails. Oracles here are written independently of the
//! library code they check.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use spamsim::corpus::{generate_corpus, CorpusRecord, GeneratorParams, ListBundle, RetryPolicy};
use spamsim::filters::{
    bayes_score, bayes_train, counter_check, greylist_check, BayesParams, CounterOutcome,
    CounterParams, CounterState, GreylistKey, GreylistOutcome, GreylistParams, GreylistState,
    Label, ListKey, ReverseMode, Rule, RuleAction, RuleField, RuleSet,
};
use spamsim::harness::{build_template, run_scenario, speedup, ScenarioId, ScenarioRun, ScenarioSpec};
use spamsim::message::{parse_address, Decision, EmailMessage, IpAddress, Stage, Verdict};
use spamsim::netsim::{charge_filter, CostModel, Micros, Profile, VirtualClock, World};
use spamsim::pipeline::{FilterContext, PipelineConfig, StageToggles};

type Outcome = Result<String, String>;
type Criterion = (u8, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn secs(text: &str) -> Micros {
    text.parse().expect("literal duration")
}

// ---------------------------------------------------------------- fixtures

struct Case {
    world: World,
    template: FilterContext,
    corpus: Vec<CorpusRecord>,
}

fn blast_case(n: usize, distinct: usize) -> Case {
    let world = World::scenario_default();
    let mut params = GeneratorParams::blast(n, 7);
    params.distinct_spam_bodies = distinct;
    let corpus = generate_corpus(&params).unwrap();
    let template = build_template(&world, &ListBundle::default(), &corpus, PipelineConfig::default()).unwrap();
    Case { world, template, corpus }
}

fn rebuild(m: &EmailMessage, ip: IpAddress, rcpt: Vec<spamsim::message::EmailAddress>) -> EmailMessage {
    EmailMessage::new(
        m.id.clone(),
        ip,
        m.helo_domain.clone(),
        m.from.clone(),
        rcpt,
        m.subject.clone(),
        m.body.clone(),
        m.submitted_at,
    )
    .unwrap()
}

/// A mixed corpus with every filter family exercised: unresolvable
/// recipients, unknown clients, list entries, rules, greylisting and a
/// content filter trained on a different corpus.
fn random_case(i: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ i);
    let count = rng.random_range(200..=300);
    let spam_ratio = rng.random_range(0.2..0.8);
    let spam = (count as f64 * spam_ratio).round() as usize;
    let params = GeneratorParams {
        seed: 1_000 + i,
        count,
        spam_ratio,
        distinct_spam_bodies: rng.random_range(1..=8.min(spam.max(1))),
        spam_vocab: rng.random_range(20..60),
        ham_vocab: rng.random_range(20..60),
        body_words_min: 5,
        body_words_max: 30,
        max_recipients: rng.random_range(1..=3),
        ..GeneratorParams::default()
    };
    let mut corpus = generate_corpus(&params).unwrap();
    for rec in &mut corpus {
        let m = &rec.message;
        let mut ip = m.sender_ip;
        let mut rcpt = m.rcpt().to_vec();
        if rng.random_bool(0.05) {
            let k = rng.random_range(0..rcpt.len());
            rcpt[k] = rcpt[k].with_domain("nowhere.invalid").unwrap();
        }
        if rng.random_bool(0.03) {
            ip = IpAddress::new(10, 9, 9, 9);
        }
        rec.message = rebuild(m, ip, rcpt);
    }

    let training = generate_corpus(&GeneratorParams { seed: 50_000 + i, count: 120, ..params.clone() }).unwrap();
    let stats = bayes_train(training.iter().map(|r| (&r.message, r.label))).unwrap();

    let mut lists = ListBundle { stats: Some(stats), ..ListBundle::default() };
    let client = rng.random_range(1..=16u8);
    lists.blacklist.insert(ListKey::Ip(IpAddress::new(10, 0, 0, client)));
    if rng.random_bool(0.3) {
        lists.blacklist.insert("bulk-offers.example".parse().unwrap());
    }
    let friend = rng.random_range(1..=16u8);
    lists.whitelist.insert(format!("staff{friend}@a.example").parse().unwrap());
    if rng.random_bool(0.2) {
        lists.whitelist.insert("offers@bulk-offers.example".parse().unwrap());
    }
    let pick = |rng: &mut ChaCha8Rng, m: &CorpusRecord| {
        let words: Vec<&str> = m.message.body.split(' ').collect();
        words[rng.random_range(0..words.len())].to_string()
    };
    let sample = corpus[rng.random_range(0..corpus.len())].clone();
    let mut rules = vec![
        Rule::new(RuleField::Body, &pick(&mut rng, &sample), RuleAction::Block).unwrap(),
        Rule::new(RuleField::Subject, "CLAIM", RuleAction::Block).unwrap(),
    ];
    if rng.random_bool(0.5) {
        rules.insert(0, Rule::new(RuleField::Helo, "a.example", RuleAction::Pass).unwrap());
    }
    if rng.random_bool(0.3) {
        rules.push(Rule::new(RuleField::FromDomain, "bulk-offers", RuleAction::Block).unwrap());
    }
    lists.rules = RuleSet::new(rules);

    let config = PipelineConfig {
        // The counter only exists on the sender side, so it is left out here.
        stages: StageToggles { counter: false, ..StageToggles::ALL },
        reverse_lookup: match i % 3 {
            0 => Some(ReverseMode::Strict),
            1 => Some(ReverseMode::Lenient),
            _ => None,
        },
        whitelist_skips_content: rng.random_bool(0.5),
        ..PipelineConfig::default()
    };
    let world = World::scenario_default();
    let template = build_template(&world, &lists, &corpus, config).unwrap();
    Case { world, template, corpus }
}

struct CaseRuns {
    case: Case,
    /// Dedup off, then on, for ids 1..4.
    plain: BTreeMap<ScenarioId, ScenarioRun>,
    dedup: BTreeMap<ScenarioId, ScenarioRun>,
}

fn run_all(case: &Case, dedup: bool) -> BTreeMap<ScenarioId, ScenarioRun> {
    ScenarioId::ALL
        .iter()
        .map(|&id| {
            let mut spec = ScenarioSpec::new(id, CostModel::for_profile(Profile::Dspam));
            spec.dedup = dedup;
            (id, run_scenario(&spec, &case.world, &case.template, &case.corpus).unwrap())
        })
        .collect()
}

fn random_runs() -> &'static [CaseRuns] {
    static RUNS: OnceLock<Vec<CaseRuns>> = OnceLock::new();
    RUNS.get_or_init(|| {
        (0..100)
            .map(|i| {
                let case = random_case(i);
                let plain = run_all(&case, false);
                let dedup = run_all(&case, true);
                CaseRuns { case, plain, dedup }
            })
            .collect()
    })
}

/// (message, recipient, retry) -> verdict over every attempt.
fn attempt_table(run: &ScenarioRun) -> BTreeMap<(usize, String, bool), Verdict> {
    run.attempts
        .iter()
        .map(|a| ((a.msg_index, a.rcpt.to_string(), a.retry), a.verdict.clone()))
        .collect()
}

fn final_verdicts(run: &ScenarioRun) -> Vec<Verdict> {
    let mut v: Vec<Verdict> = run.final_attempts().map(|a| a.verdict.clone()).collect();
    v.sort();
    v
}

/// Independent digest: lowercase, whitespace runs collapsed, trimmed;
/// subject and body joined by NUL; SHA-256 hex.
fn oracle_digest(m: &EmailMessage) -> String {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let mut h = Sha256::new();
    h.update(norm(&m.subject).as_bytes());
    h.update([0u8]);
    h.update(norm(&m.body).as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------- criteria

fn c1_profile_costs() -> Outcome {
    let start = Instant::now();
    let expected = [
        (Profile::Hotmail, "0.1"),
        (Profile::Aol, "0.09"),
        (Profile::Microsoft, "0.1"),
        (Profile::Trec, "200"),
        (Profile::Dspam, "250"),
    ];
    let mut shown = Vec::new();
    for (profile, total) in expected {
        let cost = CostModel::for_profile(profile);
        let mut batch = VirtualClock::new();
        charge_filter(&mut batch, &cost, 1000);
        let mut single = VirtualClock::new();
        for _ in 0..1000 {
            charge_filter(&mut single, &cost, 1);
        }
        ensure!(batch.now() == secs(total), "{}: batch {} != {total}", profile.name(), batch.now());
        ensure!(single.now() == secs(total), "{}: per-message {} != {total}", profile.name(), single.now());
        ensure!(batch.filter_total() == batch.now() && batch.audit(), "{}: ledger", profile.name());
        shown.push(format!("{} {}", profile.name(), batch.now()));
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(shown.join(", "))
}

fn c2_speedup() -> Outcome {
    let start = Instant::now();
    let cost = CostModel::for_profile(Profile::Dspam);
    let pair = |case: &Case| {
        let r1 = run_scenario(&ScenarioSpec::new(ScenarioId::S1, cost.clone()), &case.world, &case.template, &case.corpus).unwrap();
        let r3 = run_scenario(&ScenarioSpec::new(ScenarioId::S3, cost.clone()), &case.world, &case.template, &case.corpus).unwrap();
        (r1, r3)
    };

    let case = blast_case(1000, 1);
    let (r1, r3) = pair(&case);
    ensure!(r1.metrics.filter == secs("250"), "scenario 1 filter {}", r1.metrics.filter);
    ensure!(r3.metrics.filter == secs("0.25"), "scenario 3 filter {}", r3.metrics.filter);
    let s = speedup(&r1.metrics, &r3.metrics).unwrap();
    ensure!(s == 1000.0, "blast speedup {s}");

    let case10 = blast_case(1000, 10);
    let digests: HashSet<String> = case10.corpus.iter().map(|r| oracle_digest(&r.message)).collect();
    ensure!(digests.len() == 10, "generator produced {} bodies", digests.len());
    let (r1, r3) = pair(&case10);
    ensure!(r3.metrics.filter_invocations == digests.len() as u64, "invocations {}", r3.metrics.filter_invocations);
    let s10 = speedup(&r1.metrics, &r3.metrics).unwrap();
    ensure!(s10 == 100.0, "10-body speedup {s10}");

    let (r1, r3) = pair(&blast_case(50, 1));
    let s50 = speedup(&r1.metrics, &r3.metrics).unwrap();
    ensure!(s50 == 50.0, "n=50 speedup {s50}");

    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!("250 s vs 0.25 s; speedups {s}, {s10}, {s50}"))
}

fn c3_ordering() -> Outcome {
    let start = Instant::now();
    let mixed = {
        let world = World::scenario_default();
        let corpus = generate_corpus(&GeneratorParams { seed: 11, count: 1000, ..GeneratorParams::default() }).unwrap();
        let template = build_template(&world, &ListBundle::default(), &corpus, PipelineConfig::default()).unwrap();
        Case { world, template, corpus }
    };
    let cases = [("blast", blast_case(1000, 1)), ("mixed", mixed)];
    let mut checked = 0;
    for (name, case) in &cases {
        for profile in Profile::BUILT_IN {
            let cost = CostModel::for_profile(profile);
            let t: Vec<Micros> = ScenarioId::ALL
                .iter()
                .map(|&id| {
                    run_scenario(&ScenarioSpec::new(id, cost.clone()), &case.world, &case.template, &case.corpus)
                        .unwrap()
                        .metrics
                        .total
                })
                .collect();
            let (t1, t2, t3, t4) = (t[0], t[1], t[2], t[3]);
            let tag = format!("{name}/{}", profile.name());
            ensure!(t3 < t4, "{tag}: total(3) {t3} !< total(4) {t4}");
            ensure!(t4 < t2, "{tag}: total(4) {t4} !< total(2) {t2}");
            ensure!(t4 < t1, "{tag}: total(4) {t4} !< total(1) {t1}");
            // Two extra receiver sessions, each one setup plus one QUIT.
            let delta = (CostModel::DEFAULT_SESSION_SETUP + CostModel::DEFAULT_PER_COMMAND) * 2;
            let gap = if t1 > t2 { t1.saturating_sub(t2) } else { t2.saturating_sub(t1) };
            ensure!(gap <= delta, "{tag}: |total(1) - total(2)| = {gap} > {delta}");
            checked += 1;
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!("{checked} profile/corpus pairs strictly ordered"))
}

fn c4_location_invariance() -> Outcome {
    let mut pairs = 0usize;
    let mut decisions: BTreeMap<Decision, usize> = BTreeMap::new();
    for (i, cr) in random_runs().iter().enumerate() {
        ensure!(cr.case.corpus.len() >= 200, "case {i} too small");
        let labels: HashSet<Label> = cr.case.corpus.iter().map(|r| r.label).collect();
        ensure!(labels.len() == 2, "case {i} not mixed");
        for (recv, send) in [(ScenarioId::S1, ScenarioId::S3), (ScenarioId::S2, ScenarioId::S4)] {
            let a = attempt_table(&cr.plain[&recv]);
            let b = attempt_table(&cr.plain[&send]);
            ensure!(a.len() == b.len(), "case {i}: {} vs {} attempts for {recv}/{send}", a.len(), b.len());
            for ((key, va), (key_b, vb)) in a.iter().zip(&b) {
                ensure!(key == key_b && va == vb, "case {i} {recv}/{send}: {key:?} {va} vs {key_b:?} {vb}");
                *decisions.entry(va.decision()).or_default() += 1;
                pairs += 1;
            }
        }
    }
    ensure!(decisions.len() == 4, "not every decision kind exercised: {decisions:?}");
    Ok(format!("{pairs} attempts identical across mounts; decisions {decisions:?}"))
}

fn c5_dedup_soundness() -> Outcome {
    let mut checked = 0;
    for (i, cr) in random_runs().iter().enumerate() {
        for id in ScenarioId::ALL {
            let (plain, dedup) = (&cr.plain[&id], &cr.dedup[&id]);
            ensure!(final_verdicts(plain) == final_verdicts(dedup), "case {i} scenario {id}: verdicts changed");
            ensure!(attempt_table(plain) == attempt_table(dedup), "case {i} scenario {id}: attempts changed");

            // Distinct digests per filtering server among attempts that
            // reached the content stage, recomputed from the messages.
            let mut per_server: HashMap<&str, HashSet<String>> = HashMap::new();
            for a in plain.attempts.iter().filter(|a| a.reached_content) {
                let msg = &cr.case.corpus[a.msg_index].message;
                per_server.entry(a.server.as_str()).or_default().insert(oracle_digest(msg));
            }
            let expected: u64 = per_server.values().map(|s| s.len() as u64).sum();
            ensure!(
                dedup.metrics.filter_invocations == expected,
                "case {i} scenario {id}: {} invocations, {expected} distinct digests",
                dedup.metrics.filter_invocations
            );
            let reached = plain.attempts.iter().filter(|a| a.reached_content).count() as u64;
            ensure!(plain.metrics.filter_invocations == reached, "case {i} scenario {id}: dedup-off invocations");
            checked += 1;
        }
    }
    Ok(format!("{checked} runs: verdicts unchanged, invocations == distinct digests"))
}

fn c6_greylist() -> Outcome {
    let key = GreylistKey {
        sender_ip: IpAddress::new(10, 0, 0, 5),
        from: parse_address("s@a.example").unwrap(),
        rcpt: parse_address("r@b.example").unwrap(),
    };
    let mut rows = 0;
    for (d, l, step) in [
        (secs("120"), secs("86400"), secs("1")),
        (secs("120"), secs("86400"), Micros(1)),
        (secs("5"), secs("30"), secs("1")),
        (secs("1"), secs("1"), Micros(1)),
    ] {
        let params = GreylistParams { min_delay: d, max_lifetime: l };
        // Offset of the retry after the first contact -> expected outcome.
        let table = [
            (Micros::ZERO, GreylistOutcome::TempReject),
            (d.saturating_sub(step), GreylistOutcome::TempReject),
            (d, GreylistOutcome::Pass),
            (l, GreylistOutcome::Pass),
            (l + step, GreylistOutcome::TempReject),
        ];
        for t0 in [Micros::ZERO, secs("1000")] {
            for (offset, want) in table {
                let mut st = GreylistState::new(params);
                let first = greylist_check(&key, t0, &mut st);
                ensure!(first == GreylistOutcome::TempReject, "first contact passed");
                let got = greylist_check(&key, t0 + offset, &mut st);
                ensure!(got == want, "d={d} l={l} offset {offset}: {got:?} != {want:?}");
                rows += 1;
            }
        }
    }

    // No-retry senders never get through a greylisting path.
    let mut greylisted = 0;
    for cr in random_runs() {
        for run in cr.plain.values().chain(cr.dedup.values()) {
            for a in &run.attempts {
                let rec = &cr.case.corpus[a.msg_index];
                if rec.retry != RetryPolicy::None {
                    continue;
                }
                ensure!(!a.retry, "{} retried", a.msg_id);
                if a.stages.contains(&Stage::GreylistCheck) {
                    ensure!(a.verdict.decision() != Decision::Pass, "{} delivered through the greylist", a.msg_id);
                    greylisted += 1;
                }
            }
        }
    }
    ensure!(greylisted > 0, "greylist never reached by a no-retry sender");
    Ok(format!("{rows} table rows; {greylisted} greylisted no-retry attempts, none delivered"))
}

fn brute_probability(counts: &HashMap<String, (u64, u64)>, totals: (u64, u64), token: &str) -> f64 {
    let Some(&(s, h)) = counts.get(token) else { return 0.4 };
    let sf = if totals.0 == 0 { 0.0 } else { s as f64 / totals.0 as f64 };
    let hf = if totals.1 == 0 { 0.0 } else { h as f64 / totals.1 as f64 };
    if sf + hf == 0.0 {
        return 0.4;
    }
    (sf / (sf + hf)).clamp(0.01, 0.99)
}

fn c7_bayes_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let vocab: Vec<String> = (0..40).map(|i| format!("tok{i:02}x")).collect();
    let params = BayesParams::default();
    let mut worst = 0.0f64;
    for case in 0..1000 {
        // Random training set.
        let mut counts: HashMap<String, (u64, u64)> = HashMap::new();
        let mut totals = (0u64, 0u64);
        let mut train = Vec::new();
        for j in 0..rng.random_range(1..30) {
            let spam = rng.random_bool(0.5);
            let words: HashSet<&String> = (0..rng.random_range(1..12)).map(|_| &vocab[rng.random_range(0..vocab.len())]).collect();
            for w in &words {
                let e = counts.entry((*w).clone()).or_default();
                if spam { e.0 += 1 } else { e.1 += 1 }
            }
            if spam { totals.0 += 1 } else { totals.1 += 1 }
            let body = words.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
            train.push((message(&format!("t{case}-{j}"), &body), if spam { Label::Spam } else { Label::Ham }));
        }
        let stats = bayes_train(train.iter().map(|(m, l)| (m, *l))).unwrap();

        // Random query including unknown tokens.
        let mut query: Vec<String> = (0..rng.random_range(0..25)).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect();
        for k in 0..rng.random_range(0..4) {
            query.push(format!("unseen{k}word"));
        }
        query.sort();
        query.dedup();
        let mut scored: Vec<(String, f64)> = query.iter().map(|t| (t.clone(), brute_probability(&counts, totals, t))).collect();
        scored.sort_by(|a, b| (b.1 - 0.5).abs().partial_cmp(&(a.1 - 0.5).abs()).unwrap().then(a.0.cmp(&b.0)));
        scored.truncate(15);
        let expected = if scored.is_empty() {
            0.5
        } else {
            let spam: f64 = scored.iter().map(|(_, p)| p).product();
            let ham: f64 = scored.iter().map(|(_, p)| 1.0 - p).product();
            spam / (spam + ham)
        };
        let got = bayes_score(&message("q", &query.join(" ")), &stats, &params);
        let err = (got - expected).abs();
        worst = worst.max(err);
        ensure!(err <= 1e-9, "case {case}: {got} vs {expected}");
    }

    // Symmetric evidence is exactly neutral.
    let stats = bayes_train([
        (&message("s", "alpha"), Label::Spam),
        (&message("h", "bravo"), Label::Ham),
    ])
    .unwrap();
    let sym = bayes_score(&message("q", "alpha bravo"), &stats, &params);
    ensure!(sym == 0.5, "symmetric score {sym}");
    ensure!(spamsim::filters::bayes::combine(&[0.3, 0.7]) == 0.5, "0.3/0.7 not neutral");
    Ok(format!("1000 sets, max error {worst:.1e}; symmetric case exactly 0.5"))
}

fn message(id: &str, body: &str) -> EmailMessage {
    EmailMessage::new(
        id,
        IpAddress::new(10, 0, 0, 1),
        "a.example",
        parse_address("s@a.example").unwrap(),
        vec![parse_address("r@b.example").unwrap()],
        "",
        body,
        Micros::ZERO,
    )
    .unwrap()
}

fn c8_counter() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let ip = IpAddress::new(10, 0, 0, 3);
    let mut passes_total = 0;
    for case in 0..1000 {
        let limit = rng.random_range(0..6u64);
        let window = Micros(rng.random_range(1..20) * 1_000_000);
        let mut state = CounterState::new(CounterParams { limit, window });
        let mut t = Micros::ZERO;
        let mut passed: Vec<Micros> = Vec::new();
        for _ in 0..rng.random_range(1..80) {
            // Bursts at the same instant, steps inside and across the window.
            t += Micros(match rng.random_range(0..4) {
                0 => 0,
                1 => rng.random_range(1..1_000_000),
                2 => window.as_micros(),
                _ => rng.random_range(0..3 * window.as_micros()),
            });
            let in_window = passed.iter().filter(|&&p| t.as_micros() - p.as_micros() <= window.as_micros()).count() as u64;
            let want = in_window < limit;
            let got = counter_check(ip, t, &mut state) == CounterOutcome::Pass;
            ensure!(got == want, "case {case}: at {t} got pass={got}, oracle {want}");
            if got {
                passed.push(t);
            }
        }
        // No closed window of length `window` holds more than `limit` passes.
        for &end in &passed {
            let n = passed.iter().filter(|&&p| p <= end && end.as_micros() - p.as_micros() <= window.as_micros()).count() as u64;
            ensure!(n <= limit, "case {case}: {n} passes in window ending {end}");
        }
        passes_total += passed.len();
    }
    Ok(format!("1000 schedules, {passes_total} passes, limit never exceeded"))
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_spamsim");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("c.jsonl");
    let status = Command::new(bin)
        .args(["gen-corpus", "--count", "300", "--spam-ratio", "0.6", "--distinct-spam", "4", "--max-recipients", "2", "--seed", "9", "--out"])
        .arg(&corpus)
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "gen-corpus failed");
    let mut outputs = Vec::new();
    for (k, parallel) in [(0, false), (1, false), (2, true)] {
        let csv = dir.path().join(format!("run{k}.csv"));
        let plot = dir.path().join(format!("run{k}.dat"));
        let mut cmd = Command::new(bin);
        cmd.args(["compare", "--profiles", "dspam,trec,hotmail", "--set", "greylist=on", "--corpus"])
            .arg(&corpus)
            .arg("--out")
            .arg(&csv)
            .arg("--plot")
            .arg(&plot);
        if parallel {
            cmd.arg("--parallel");
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "compare failed: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(&plot).unwrap()));
    }
    ensure!(outputs[0] == outputs[1], "two sequential runs differ");
    ensure!(outputs[0] == outputs[2], "parallel run differs");
    let rows = String::from_utf8_lossy(&outputs[0].0).lines().count();
    ensure!(rows == 13, "expected header + 12 rows, got {rows}");
    Ok(format!("CSV ({} bytes) and plot ({} bytes) identical across 3 runs", outputs[0].0.len(), outputs[0].1.len()))
}

fn c10_bytes() -> Outcome {
    let mut strict = 0;
    let mut equal = 0;
    let mut check = |tag: String, r1: &ScenarioRun, r3: &ScenarioRun| -> Result<(), String> {
        let (b1, b3) = (r1.metrics.bytes_transferred, r3.metrics.bytes_transferred);
        ensure!(b3 <= b1, "{tag}: sender {b3} > receiver {b1}");
        let blocked = r1.metrics.blocked > 0;
        if blocked {
            ensure!(b3 < b1, "{tag}: {} blocked but bytes equal ({b1})", r1.metrics.blocked);
            strict += 1;
        }
        if r1.metrics.delivered == r1.metrics.outcomes() && r1.attempts.iter().all(|a| !a.retry) {
            ensure!(b3 == b1, "{tag}: nothing filtered but bytes differ");
            equal += 1;
        }
        Ok(())
    };
    for (i, cr) in random_runs().iter().enumerate() {
        for runs in [&cr.plain, &cr.dedup] {
            check(format!("case {i}"), &runs[&ScenarioId::S1], &runs[&ScenarioId::S3])?;
        }
    }
    let cost = CostModel::for_profile(Profile::Dspam);
    let clean = {
        let world = World::scenario_default();
        let corpus = generate_corpus(&GeneratorParams { count: 200, spam_ratio: 0.0, ..GeneratorParams::default() }).unwrap();
        let template = build_template(&world, &ListBundle::default(), &corpus, PipelineConfig::default()).unwrap();
        Case { world, template, corpus }
    };
    for (tag, case) in [("blast", blast_case(1000, 1)), ("ham-only", clean)] {
        let r1 = run_scenario(&ScenarioSpec::new(ScenarioId::S1, cost.clone()), &case.world, &case.template, &case.corpus).unwrap();
        let r3 = run_scenario(&ScenarioSpec::new(ScenarioId::S3, cost.clone()), &case.world, &case.template, &case.corpus).unwrap();
        check(tag.to_string(), &r1, &r3)?;
    }
    ensure!(equal > 0, "equality branch never exercised");
    Ok(format!("{strict} corpora strictly smaller, {equal} unfiltered corpora equal"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "built-in profile costs for 1000 executions", c1_profile_costs),
        (2, "receiver/sender filter-time speedup", c2_speedup),
        (3, "scenario total ordering", c3_ordering),
        (4, "verdicts independent of filter location", c4_location_invariance),
        (5, "digest cache soundness", c5_dedup_soundness),
        (6, "greylist transition table", c6_greylist),
        (7, "bayes score matches brute force", c7_bayes_oracle),
        (8, "counter never exceeds its window limit", c8_counter),
        (9, "compare output is deterministic", c9_determinism),
        (10, "sender-side filtering saves bytes", c10_bytes),
    ];
    let mut failed = 0;
    for (n, title, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {title}: {detail} [{ms} ms]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {title}: {why} [{ms} ms]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! The `spamsim` command line.
//!
//! Exit codes: 0 success or pass, 1 filtered, 2 usage or configuration
//! error, 3 ordering assertion failed.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Config, ConfigError, CONFIG_ENV};
use crate::corpus::{
    generate_corpus, labeled, load_corpus, load_lists, load_world, CorpusError, CorpusRecord,
    GeneratorParams, ListBundle,
};
use crate::filters::{bayes_train, CounterState, GreylistState, Label, TokenStats};
use crate::harness::{
    build_template, compare_scenarios, csv_header, csv_row, render_csv, render_plot, run_scenario,
    Comparison, HarnessError, ScenarioId, ScenarioSpec,
};
use crate::message::{content_digest, Decision};
use crate::netsim::{Profile, World};
use crate::pipeline::{run_pipeline, FilterContext, Mount};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FILTERED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "spamsim", version, about = "Simulate sender- and receiver-side spam filtering")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled corpus.
    GenCorpus(GenArgs),
    /// Run one placement scenario and emit a CSV row.
    Run(RunArgs),
    /// Run all four scenarios and compare them.
    Compare(CompareArgs),
    /// Trace one message through the pipeline.
    Check(CheckArgs),
    /// Train token statistics from a labeled corpus.
    Train(TrainArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0.5)]
    spam_ratio: f64,
    #[arg(long = "distinct-spam", default_value_t = 1)]
    distinct_spam: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    max_recipients: usize,
    #[arg(long, default_value_t = 64)]
    spam_vocab: usize,
    #[arg(long, default_value_t = 64)]
    ham_vocab: usize,
    #[arg(long, default_value_t = 20)]
    body_min: usize,
    #[arg(long, default_value_t = 60)]
    body_max: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Options shared by every command that reads configuration.
#[derive(Args, Debug, Default)]
struct Common {
    /// Config file; defaults to $SPAMSIM_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    lists: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct CorpusSource {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Messages to use; also the size of the generated blast without --corpus.
    #[arg(long)]
    n: Option<usize>,
    /// Seed for the generated blast corpus.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Distinct spam bodies in the generated blast corpus.
    #[arg(long = "distinct-spam", default_value_t = 1)]
    distinct_spam: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Toggle {
    On,
    Off,
    Auto,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    scenario: u8,
    #[arg(long)]
    profile: Option<String>,
    #[command(flatten)]
    source: CorpusSource,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    dedup: Option<Toggle>,
    /// Append the row to this CSV file instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    profile: Option<String>,
    /// Comma-separated profiles; one comparison each.
    #[arg(long, value_delimiter = ',')]
    profiles: Vec<String>,
    #[command(flatten)]
    source: CorpusSource,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    dedup: Option<Toggle>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a gnuplot data file.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Run the four scenarios on separate threads.
    #[arg(long)]
    parallel: bool,
    /// Exit 3 if totals break 3 <= 4 <= min(1, 2).
    #[arg(long)]
    assert_ordering: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MountArg {
    Sender,
    Receiver,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// File whose first line is one corpus record.
    #[arg(long)]
    message: PathBuf,
    #[arg(long, value_enum, default_value = "sender")]
    mount: MountArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::usage(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::OrderingViolation(_) => EXIT_ASSERTION,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e)
    }
}

type CmdResult = Result<u8, Failure>;

/// Parses `args` (program name first) and runs the command, writing to
/// `out` and `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::GenCorpus(a) => gen_corpus(a, out),
        Command::Run(a) => cmd_run(a, out, err),
        Command::Compare(a) => cmd_compare(a, out, err),
        Command::Check(a) => cmd_check(a, out),
        Command::Train(a) => cmd_train(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn gen_corpus(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    let params = GeneratorParams {
        seed: a.seed,
        count: a.count,
        spam_ratio: a.spam_ratio,
        distinct_spam_bodies: a.distinct_spam,
        spam_vocab: a.spam_vocab,
        ham_vocab: a.ham_vocab,
        body_words_min: a.body_min,
        body_words_max: a.body_max,
        max_recipients: a.max_recipients,
        ..GeneratorParams::default()
    };
    let records = generate_corpus(&params)?;
    crate::corpus::save_corpus(&records, &a.out)?;
    let spam = records.iter().filter(|r| r.label == Label::Spam).count();
    let digests: HashSet<_> = records.iter().map(|r| content_digest(&r.message)).collect();
    let spam_digests: HashSet<_> = records
        .iter()
        .filter(|r| r.label == Label::Spam)
        .map(|r| content_digest(&r.message))
        .collect();
    writeln!(
        out,
        "records {} spam {} ham {} digests {} spam_digests {} -> {}",
        records.len(),
        spam,
        records.len() - spam,
        digests.len(),
        spam_digests.len(),
        a.out.display()
    )?;
    Ok(EXIT_OK)
}

fn load_config(common: &Common) -> Result<Config, Failure> {
    let path = common
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for pair in &common.set {
        cfg.set_pair(pair).map_err(|e| Failure::usage(format!("--set {pair}: {e}")))?;
    }
    if let Some(w) = &common.world {
        cfg.world = Some(w.clone());
    }
    if let Some(l) = &common.lists {
        cfg.lists = Some(l.clone());
    }
    Ok(cfg)
}

fn apply_flags(cfg: &mut Config, profile: Option<&str>, source: &CorpusSource, dedup: Option<Toggle>) -> Result<(), Failure> {
    if let Some(p) = profile {
        cfg.set("profile", p).map_err(Failure::usage)?;
    }
    if let Some(c) = &source.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(n) = source.n {
        cfg.n_messages = Some(n);
    }
    match dedup {
        Some(Toggle::On) => cfg.dedup = Some(true),
        Some(Toggle::Off) => cfg.dedup = Some(false),
        Some(Toggle::Auto) => cfg.dedup = None,
        None => {}
    }
    Ok(())
}

fn world_of(cfg: &Config) -> Result<World, Failure> {
    Ok(match &cfg.world {
        Some(p) => load_world(p)?,
        None => World::scenario_default(),
    })
}

fn lists_of(cfg: &Config) -> Result<ListBundle, Failure> {
    Ok(match &cfg.lists {
        Some(p) => load_lists(p)?,
        None => ListBundle::default(),
    })
}

fn corpus_of(cfg: &Config, source: &CorpusSource) -> Result<Vec<CorpusRecord>, Failure> {
    match &cfg.corpus {
        Some(p) => Ok(load_corpus(p)?),
        None => {
            let mut params = GeneratorParams::blast(cfg.n_messages.unwrap_or(1000), source.seed);
            params.distinct_spam_bodies = source.distinct_spam;
            Ok(generate_corpus(&params)?)
        }
    }
}

fn template(cfg: &Config, world: &World, lists: &ListBundle, corpus: &[CorpusRecord]) -> Result<FilterContext, Failure> {
    if corpus.is_empty() {
        return Err(HarnessError::CorpusTooSmall { have: 0, need: 1 }.into());
    }
    let mut ctx = build_template(world, lists, corpus, cfg.pipeline.clone())?;
    ctx.greylist = GreylistState::new(cfg.greylist);
    ctx.counter = CounterState::new(cfg.counter);
    Ok(ctx)
}

fn spec_for(cfg: &Config, id: ScenarioId, profile: Profile) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(id, cfg.cost_model_for(profile));
    spec.n_messages = cfg.n_messages;
    if let Some(d) = cfg.dedup {
        spec.dedup = d;
    }
    spec.keep_blocked = cfg.keep_blocked;
    spec
}

fn append_csv(path: &Path, rows: &str) -> Result<(), Failure> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{}", csv_header())?;
    }
    f.write_all(rows.as_bytes())?;
    Ok(())
}

fn cmd_run(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut cfg = load_config(&a.common)?;
    apply_flags(&mut cfg, a.profile.as_deref(), &a.source, a.dedup)?;
    if let Some(o) = &a.out {
        cfg.output = Some(o.clone());
    }
    let id = ScenarioId::try_from(a.scenario).map_err(Failure::usage)?;
    let world = world_of(&cfg)?;
    let lists = lists_of(&cfg)?;
    let corpus = corpus_of(&cfg, &a.source)?;
    let ctx = template(&cfg, &world, &lists, &corpus)?;
    let run = run_scenario(&spec_for(&cfg, id, cfg.profile), &world, &ctx, &corpus)?;
    let row = format!("{}\n", csv_row(&run));
    match &cfg.output {
        Some(path) => append_csv(path, &row)?,
        None => write!(out, "{}\n{row}", csv_header())?,
    }
    let m = &run.metrics;
    writeln!(
        err,
        "scenario {id} ({} side), profile {}: total {} s = filter {} s + network {} s; {} delivered, {} blocked, {} temp-rejected, {} failures",
        id.mount(),
        cfg.profile.name(),
        m.total,
        m.filter,
        m.network,
        m.delivered,
        m.blocked,
        m.temp_rejected,
        m.failure_notices
    )?;
    Ok(EXIT_OK)
}

fn format_speedup(c: &Comparison) -> String {
    match c.speedup() {
        Some(Ok(r)) => format!("{r:.1}"),
        Some(Err(_)) => "inf".to_string(),
        None => "n/a".to_string(),
    }
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut cfg = load_config(&a.common)?;
    apply_flags(&mut cfg, a.profile.as_deref(), &a.source, a.dedup)?;
    if let Some(o) = &a.out {
        cfg.output = Some(o.clone());
    }
    let profiles: Vec<Profile> = if a.profiles.is_empty() {
        vec![cfg.profile]
    } else {
        a.profiles
            .iter()
            .map(|p| p.trim().parse::<Profile>().map_err(Failure::usage))
            .collect::<Result<_, _>>()?
    };
    let world = world_of(&cfg)?;
    let lists = lists_of(&cfg)?;
    let corpus = corpus_of(&cfg, &a.source)?;
    let ctx = template(&cfg, &world, &lists, &corpus)?;

    let mut comparisons = Vec::with_capacity(profiles.len());
    for &p in &profiles {
        let specs: Vec<ScenarioSpec> = ScenarioId::ALL.iter().map(|&id| spec_for(&cfg, id, p)).collect();
        comparisons.push(compare_scenarios(&specs, &world, &ctx, &corpus, a.parallel)?);
    }

    let csv = render_csv(&comparisons);
    match &cfg.output {
        Some(path) => fs::write(path, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    if let Some(plot) = &a.plot {
        fs::write(plot, render_plot(&comparisons))?;
    }

    let mut violated = false;
    for c in &comparisons {
        let ordering = match &c.ordering {
            None => "ordering ok".to_string(),
            Some(v) => {
                violated = true;
                format!("ORDERING VIOLATION: {v}")
            }
        };
        writeln!(
            err,
            "profile {}: speedup(1/3) {}; {ordering}",
            c.cost.profile.name(),
            format_speedup(c)
        )?;
    }
    if violated && a.assert_ordering {
        return Ok(EXIT_ASSERTION);
    }
    Ok(EXIT_OK)
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config(&a.common)?;
    let text = fs::read_to_string(&a.message).map_err(|e| Failure::usage(format!("{}: {e}", a.message.display())))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Failure::usage(format!("{}: no record", a.message.display())))?;
    let record = CorpusRecord::from_line(line)
        .map_err(|e| Failure::usage(format!("{}: line 1: {e}", a.message.display())))?;
    let world = world_of(&cfg)?;
    let mut lists = lists_of(&cfg)?;
    lists.stats.get_or_insert_with(TokenStats::new);
    let mut ctx = template(&cfg, &world, &lists, std::slice::from_ref(&record))?;
    ctx.config.mount = match a.mount {
        MountArg::Sender => Mount::SenderSide,
        MountArg::Receiver => Mount::ReceiverSide,
    };
    ctx.config.dedup = false;

    let msg = &record.message;
    let mut all_pass = true;
    for rcpt in msg.rcpt() {
        let outcome = run_pipeline(msg, rcpt, msg.submitted_at, &mut ctx, &world.dns);
        writeln!(out, "rcpt {rcpt}")?;
        for stage in &outcome.entered {
            writeln!(out, "  {stage}")?;
        }
        for note in &outcome.notes {
            writeln!(out, "  note: {note}")?;
        }
        writeln!(out, "  verdict: {}", outcome.verdict)?;
        all_pass &= outcome.verdict.decision() == Decision::Pass;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_FILTERED })
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> CmdResult {
    let corpus = load_corpus(&a.corpus)?;
    let stats = bayes_train(labeled(&corpus)).map_err(Failure::usage)?;
    fs::write(&a.out, stats.render())?;
    writeln!(
        out,
        "trained on {} messages ({} spam, {} ham), {} tokens -> {}",
        corpus.len(),
        stats.spam_msgs,
        stats.ham_msgs,
        stats.vocabulary(),
        a.out.display()
    )?;
    Ok(EXIT_OK)
}

/// Convenience for `main`: process args and stdio.
pub fn main_exit() -> std::process::ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::ExitCode::from(code)
}

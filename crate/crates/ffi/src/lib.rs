//! C ABI over the spamsim engine.
//!
//! Every call returns a [`SpamsimStatus`]; on failure the message is
//! available from [`spamsim_last_error`] on the same thread. Engines are
//! opaque and must be released with [`spamsim_engine_free`]; strings handed
//! out by the library are released with [`spamsim_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use spamsim::config::Config;
use spamsim::corpus::{generate_corpus, load_corpus, load_lists, load_world, CorpusRecord, GeneratorParams, ListBundle};
use spamsim::filters::{CounterState, GreylistState, TokenStats};
use spamsim::harness::{build_template, run_scenario, ScenarioId, ScenarioSpec};
use spamsim::message::{digest_parts, Decision, Stage};
use spamsim::netsim::World;
use spamsim::pipeline::{run_pipeline, FilterContext, Mount};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpamsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Io = 5,
    Harness = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpamsimDecision {
    Pass = 0,
    Block = 1,
    TempReject = 2,
    FailureToSender = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpamsimStage {
    SenderAuth = 0,
    CounterCheck = 1,
    ReceiverIdent = 2,
    WhitelistCheck = 3,
    BlacklistCheck = 4,
    GreylistCheck = 5,
    ContentFilter = 6,
    RuleFilter = 7,
    Forwarded = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpamsimMount {
    Sender = 0,
    Receiver = 1,
}

/// Outcome of one recipient through the pipeline.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpamsimVerdict {
    pub decision: SpamsimDecision,
    pub stage: SpamsimStage,
    /// Number of stages entered, including the deciding one.
    pub stages_entered: u32,
}

/// Scenario totals; times are virtual microseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpamsimMetrics {
    pub total_us: u64,
    pub filter_us: u64,
    pub network_us: u64,
    pub filter_invocations: u64,
    pub sessions_opened: u64,
    pub bytes_transferred: u64,
    pub delivered: u64,
    pub blocked: u64,
    pub temp_rejected: u64,
    pub failure_notices: u64,
}

/// Opaque engine: configuration, world, lists and the loaded corpus.
pub struct SpamsimEngine {
    config: Config,
    world: World,
    lists: ListBundle,
    corpus: Vec<CorpusRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SpamsimStatus, String);

impl Failure {
    fn new(status: SpamsimStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', "\\0")).expect("NULs escaped");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpamsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SpamsimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SpamsimStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(SpamsimStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(SpamsimStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn engine_arg<'a>(p: *mut SpamsimEngine) -> Result<&'a mut SpamsimEngine, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(SpamsimStatus::NullPointer, "engine is null"))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(SpamsimStatus::NullPointer, format!("{name} is null")))
}

fn stage_of(s: Stage) -> SpamsimStage {
    match s {
        Stage::SenderAuth => SpamsimStage::SenderAuth,
        Stage::CounterCheck => SpamsimStage::CounterCheck,
        Stage::ReceiverIdent => SpamsimStage::ReceiverIdent,
        Stage::WhitelistCheck => SpamsimStage::WhitelistCheck,
        Stage::BlacklistCheck => SpamsimStage::BlacklistCheck,
        Stage::GreylistCheck => SpamsimStage::GreylistCheck,
        Stage::ContentFilter => SpamsimStage::ContentFilter,
        Stage::RuleFilter => SpamsimStage::RuleFilter,
        Stage::Forwarded => SpamsimStage::Forwarded,
    }
}

fn decision_of(d: Decision) -> SpamsimDecision {
    match d {
        Decision::Pass => SpamsimDecision::Pass,
        Decision::Block => SpamsimDecision::Block,
        Decision::TempReject => SpamsimDecision::TempReject,
        Decision::FailureToSender => SpamsimDecision::FailureToSender,
    }
}

impl SpamsimEngine {
    fn from_config(config: Config) -> Result<Self, Failure> {
        let world = match &config.world {
            Some(p) => load_world(p).map_err(|e| Failure::new(SpamsimStatus::Io, e))?,
            None => World::scenario_default(),
        };
        let lists = match &config.lists {
            Some(p) => load_lists(p).map_err(|e| Failure::new(SpamsimStatus::Io, e))?,
            None => ListBundle::default(),
        };
        let corpus = match &config.corpus {
            Some(p) => load_corpus(p).map_err(|e| Failure::new(SpamsimStatus::Parse, e))?,
            None => Vec::new(),
        };
        Ok(SpamsimEngine { config, world, lists, corpus })
    }

    fn template(&self, lists: &ListBundle, corpus: &[CorpusRecord]) -> Result<FilterContext, Failure> {
        let mut ctx = build_template(&self.world, lists, corpus, self.config.pipeline.clone())
            .map_err(|e| Failure::new(SpamsimStatus::Harness, e))?;
        ctx.greylist = GreylistState::new(self.config.greylist);
        ctx.counter = CounterState::new(self.config.counter);
        Ok(ctx)
    }
}

/// Creates an engine. `config_path` may be null for defaults; otherwise it
/// names a `key = value` file whose corpus, lists and world paths are
/// loaded immediately.
///
/// # Safety
/// `config_path` must be null or a valid NUL-terminated string; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_new(config_path: *const c_char, out: *mut *mut SpamsimEngine) -> SpamsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = if config_path.is_null() {
            Config::default()
        } else {
            let path = str_arg(config_path, "config_path")?;
            Config::load(path).map_err(|e| Failure::new(SpamsimStatus::Parse, e))?
        };
        *out = Box::into_raw(Box::new(SpamsimEngine::from_config(config)?));
        Ok(())
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from [`spamsim_engine_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_free(engine: *mut SpamsimEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Sets one configuration key, as in a config file. Path keys (`corpus`,
/// `lists`, `world`) are loaded at once.
///
/// # Safety
/// All pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_set(
    engine: *mut SpamsimEngine,
    key: *const c_char,
    value: *const c_char,
) -> SpamsimStatus {
    guard(|| {
        let engine = engine_arg(engine)?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let mut config = engine.config.clone();
        config
            .set(key, value)
            .map_err(|e| Failure::new(SpamsimStatus::InvalidArgument, format!("{key}: {e}")))?;
        if matches!(key, "corpus" | "lists" | "world") {
            *engine = SpamsimEngine::from_config(config)?;
        } else {
            engine.config = config;
        }
        Ok(())
    })
}

/// Replaces the engine's corpus with a generated one.
///
/// # Safety
/// `engine` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_generate(
    engine: *mut SpamsimEngine,
    count: size_t,
    spam_ratio: f64,
    distinct_spam_bodies: size_t,
    seed: u64,
) -> SpamsimStatus {
    guard(|| {
        let engine = engine_arg(engine)?;
        let params = GeneratorParams {
            seed,
            count,
            spam_ratio,
            distinct_spam_bodies,
            ..GeneratorParams::default()
        };
        engine.corpus = generate_corpus(&params).map_err(|e| Failure::new(SpamsimStatus::InvalidArgument, e))?;
        Ok(())
    })
}

/// Number of records in the engine's corpus.
///
/// # Safety
/// `engine` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_corpus_len(engine: *const SpamsimEngine, out: *mut size_t) -> SpamsimStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure::new(SpamsimStatus::NullPointer, "engine is null"))?;
        *out_arg(out, "out")? = engine.corpus.len();
        Ok(())
    })
}

/// Runs one corpus record (a single JSON line) through a fresh pipeline
/// for recipient `rcpt_index`. `mount` is a [`SpamsimMount`] value. Token statistics come from the lists
/// directory only; without them the content filter sees an empty model.
///
/// # Safety
/// All pointers must be valid; `record_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_check(
    engine: *const SpamsimEngine,
    record_json: *const c_char,
    mount: u32,
    rcpt_index: size_t,
    out: *mut SpamsimVerdict,
) -> SpamsimStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure::new(SpamsimStatus::NullPointer, "engine is null"))?;
        let out = out_arg(out, "out")?;
        let json = str_arg(record_json, "record_json")?;
        let record = CorpusRecord::from_line(json.trim()).map_err(|e| Failure::new(SpamsimStatus::Parse, e))?;
        let msg = &record.message;
        let rcpt = msg.rcpt().get(rcpt_index).ok_or_else(|| {
            Failure::new(
                SpamsimStatus::InvalidArgument,
                format!("rcpt_index {rcpt_index} out of range ({} recipients)", msg.rcpt().len()),
            )
        })?;
        let mut lists = engine.lists.clone();
        lists.stats.get_or_insert_with(TokenStats::new);
        let mut ctx = engine.template(&lists, std::slice::from_ref(&record))?;
        ctx.config.mount = match mount {
            m if m == SpamsimMount::Sender as u32 => Mount::SenderSide,
            m if m == SpamsimMount::Receiver as u32 => Mount::ReceiverSide,
            m => return Err(Failure::new(SpamsimStatus::InvalidArgument, format!("unknown mount {m}"))),
        };
        ctx.config.dedup = false;
        let outcome = run_pipeline(msg, rcpt, msg.submitted_at, &mut ctx, &engine.world.dns);
        *out = SpamsimVerdict {
            decision: decision_of(outcome.verdict.decision()),
            stage: stage_of(outcome.verdict.stage()),
            stages_entered: outcome.entered.len() as u32,
        };
        Ok(())
    })
}

/// Runs scenario 1–4 over the engine's corpus and writes its totals.
///
/// # Safety
/// `engine` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spamsim_engine_run_scenario(
    engine: *const SpamsimEngine,
    scenario: u8,
    out: *mut SpamsimMetrics,
) -> SpamsimStatus {
    guard(|| {
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure::new(SpamsimStatus::NullPointer, "engine is null"))?;
        let out = out_arg(out, "out")?;
        let id = ScenarioId::try_from(scenario).map_err(|e| Failure::new(SpamsimStatus::InvalidArgument, e))?;
        if engine.corpus.is_empty() {
            return Err(Failure::new(SpamsimStatus::InvalidArgument, "corpus is empty"));
        }
        let cfg = &engine.config;
        let ctx = engine.template(&engine.lists, &engine.corpus)?;
        let mut spec = ScenarioSpec::new(id, cfg.cost_model());
        spec.n_messages = cfg.n_messages;
        if let Some(d) = cfg.dedup {
            spec.dedup = d;
        }
        spec.keep_blocked = cfg.keep_blocked;
        let run = run_scenario(&spec, &engine.world, &ctx, &engine.corpus)
            .map_err(|e| Failure::new(SpamsimStatus::Harness, e))?;
        let m = &run.metrics;
        *out = SpamsimMetrics {
            total_us: m.total.0,
            filter_us: m.filter.0,
            network_us: m.network.0,
            filter_invocations: m.filter_invocations,
            sessions_opened: m.sessions_opened,
            bytes_transferred: m.bytes_transferred,
            delivered: m.delivered,
            blocked: m.blocked,
            temp_rejected: m.temp_rejected,
            failure_notices: m.failure_notices,
        };
        Ok(())
    })
}

/// Hex SHA-256 content digest of a subject and body after normalization.
/// The result is released with [`spamsim_string_free`].
///
/// # Safety
/// Strings must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spamsim_content_digest(
    subject: *const c_char,
    body: *const c_char,
    out: *mut *mut c_char,
) -> SpamsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let digest = digest_parts(str_arg(subject, "subject")?, str_arg(body, "body")?);
        *out = CString::new(digest.hex()).expect("hex has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn spamsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn spamsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

//! Flat `key = value` configuration. `#` starts a comment; unknown keys
//! are errors. Command-line flags are applied after the file through the
//! same [`Config::set`] entry point, so they override it.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::filters::{CounterParams, GreylistParams, ReverseMode};
use crate::netsim::{CostModel, Micros, Profile};
use crate::pipeline::PipelineConfig;

pub const CONFIG_ENV: &str = "SPAMSIM_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
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
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub profile: Profile,
    /// Cost overrides in application order, replayed over the profile.
    pub cost_overrides: Vec<(String, String)>,
    pub pipeline: PipelineConfig,
    pub greylist: GreylistParams,
    pub counter: CounterParams,
    /// `None` lets each scenario pick (on for sender side).
    pub dedup: Option<bool>,
    pub keep_blocked: bool,
    pub n_messages: Option<usize>,
    pub corpus: Option<PathBuf>,
    pub lists: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            profile: Profile::Dspam,
            cost_overrides: Vec::new(),
            pipeline: PipelineConfig::default(),
            greylist: GreylistParams::default(),
            counter: CounterParams::default(),
            dedup: None,
            keep_blocked: false,
            n_messages: None,
            corpus: None,
            lists: None,
            world: None,
            output: None,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn parse_secs(v: &str) -> Result<Micros, String> {
    v.parse::<Micros>().map_err(|e| e.to_string())
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a number, got {v:?}"))
}

impl Config {
    pub const KEYS: &'static [&'static str] = &[
        "profile",
        "session_setup_s",
        "per_command_s",
        "per_byte_s",
        "filter_cost_s",
        "per_stage_s",
        "counter",
        "whitelist",
        "blacklist",
        "greylist",
        "content",
        "rules",
        "reverse_lookup",
        "dedup",
        "whitelist_skips_content",
        "keep_blocked",
        "bayes_threshold",
        "bayes_top_n",
        "bayes_unknown",
        "greylist_min_delay_s",
        "greylist_max_lifetime_s",
        "counter_limit",
        "counter_window_s",
        "n_messages",
        "corpus",
        "lists",
        "world",
        "output",
    ];

    /// Sets one key. The error is a reason without location.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        let stages = &mut self.pipeline.stages;
        match key {
            "profile" => self.profile = v.parse().map_err(|e: crate::netsim::NetError| e.to_string())?,
            "session_setup_s" | "per_command_s" | "per_byte_s" | "filter_cost_s" | "per_stage_s" => {
                parse_secs(v)?;
                self.cost_overrides.push((key.to_string(), v.to_string()));
            }
            "counter" => stages.counter = parse_bool(v)?,
            "whitelist" => stages.whitelist = parse_bool(v)?,
            "blacklist" => stages.blacklist = parse_bool(v)?,
            "greylist" => stages.greylist = parse_bool(v)?,
            "content" => stages.content = parse_bool(v)?,
            "rules" => stages.rules = parse_bool(v)?,
            "reverse_lookup" => {
                self.pipeline.reverse_lookup = match v {
                    "off" | "none" => None,
                    mode => Some(mode.parse::<ReverseMode>()?),
                }
            }
            "dedup" => self.dedup = if v == "auto" { None } else { Some(parse_bool(v)?) },
            "whitelist_skips_content" => self.pipeline.whitelist_skips_content = parse_bool(v)?,
            "keep_blocked" => self.keep_blocked = parse_bool(v)?,
            "bayes_threshold" => {
                let t: f64 = parse_num(v)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(format!("bayes_threshold must lie in [0, 1], got {t}"));
                }
                self.pipeline.bayes.threshold = t;
            }
            "bayes_top_n" => {
                let n: usize = parse_num(v)?;
                if n == 0 {
                    return Err("bayes_top_n must be positive".into());
                }
                self.pipeline.bayes.top_n = n;
            }
            "bayes_unknown" => {
                let p: f64 = parse_num(v)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("bayes_unknown must lie in [0, 1], got {p}"));
                }
                self.pipeline.bayes.unknown = p;
            }
            "greylist_min_delay_s" => self.greylist.min_delay = parse_secs(v)?,
            "greylist_max_lifetime_s" => self.greylist.max_lifetime = parse_secs(v)?,
            "counter_limit" => self.counter.limit = parse_num(v)?,
            "counter_window_s" => self.counter.window = parse_secs(v)?,
            "n_messages" => self.n_messages = Some(parse_num(v)?),
            "corpus" => self.corpus = Some(PathBuf::from(v)),
            "lists" => self.lists = Some(PathBuf::from(v)),
            "world" => self.world = Some(PathBuf::from(v)),
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        if self.greylist.min_delay > self.greylist.max_lifetime {
            return Err("greylist_min_delay_s exceeds greylist_max_lifetime_s".into());
        }
        Ok(())
    }

    /// Applies `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), String> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {pair:?}"))?;
        self.set(k.trim(), v)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        cfg.apply_text(text, origin)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ConfigError::Parse {
                path: origin.to_string(),
                line: idx + 1,
                reason,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            self.set(k.trim(), v).map_err(err)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text, &path.display().to_string())
    }

    /// The profile's prices with every override applied in order.
    pub fn cost_model(&self) -> CostModel {
        self.cost_model_for(self.profile)
    }

    pub fn cost_model_for(&self, profile: Profile) -> CostModel {
        let mut cost = CostModel::for_profile(profile);
        for (k, v) in &self.cost_overrides {
            cost.apply_override(k, v).expect("validated in set");
        }
        cost
    }
}

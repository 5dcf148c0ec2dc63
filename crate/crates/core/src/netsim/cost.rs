use std::fmt;
use std::str::FromStr;

use super::{Micros, NetError};

/// Named cost profiles. Each built-in profile's filter cost is its measured
/// time for 1000 messages divided by 1000.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Profile {
    Hotmail,
    Aol,
    Microsoft,
    Trec,
    Dspam,
    Custom,
}

impl Profile {
    pub const BUILT_IN: [Profile; 5] = [
        Profile::Hotmail,
        Profile::Aol,
        Profile::Microsoft,
        Profile::Trec,
        Profile::Dspam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Hotmail => "hotmail",
            Profile::Aol => "aol",
            Profile::Microsoft => "microsoft",
            Profile::Trec => "trec",
            Profile::Dspam => "dspam",
            Profile::Custom => "custom",
        }
    }

    pub fn filter_cost(self) -> Micros {
        match self {
            Profile::Hotmail | Profile::Microsoft => Micros(100),
            Profile::Aol => Micros(90),
            Profile::Trec => Micros(200_000),
            Profile::Dspam => Micros(250_000),
            Profile::Custom => Micros::ZERO,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Profile::Custom]
            .into_iter()
            .chain(Profile::BUILT_IN)
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| NetError::UnknownProfile(s.to_string()))
    }
}

/// Virtual-time prices for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub profile: Profile,
    pub session_setup: Micros,
    pub per_command: Micros,
    pub per_byte: Micros,
    pub filter_cost: Micros,
    pub per_stage: Micros,
}

impl CostModel {
    pub const DEFAULT_SESSION_SETUP: Micros = Micros(50_000);
    pub const DEFAULT_PER_COMMAND: Micros = Micros(1_000);
    pub const DEFAULT_PER_BYTE: Micros = Micros(1);

    pub fn for_profile(profile: Profile) -> Self {
        CostModel {
            profile,
            session_setup: Self::DEFAULT_SESSION_SETUP,
            per_command: Self::DEFAULT_PER_COMMAND,
            per_byte: Self::DEFAULT_PER_BYTE,
            filter_cost: profile.filter_cost(),
            per_stage: Micros::ZERO,
        }
    }

    /// All prices zero except the filter cost.
    pub fn without_network(mut self) -> Self {
        self.session_setup = Micros::ZERO;
        self.per_command = Micros::ZERO;
        self.per_byte = Micros::ZERO;
        self
    }

    /// Applies one `key = seconds` override. Returns `false` for keys this
    /// model does not own.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<bool, NetError> {
        let slot = match key {
            "session_setup_s" => &mut self.session_setup,
            "per_command_s" => &mut self.per_command,
            "per_byte_s" => &mut self.per_byte,
            "filter_cost_s" => &mut self.filter_cost,
            "per_stage_s" => &mut self.per_stage,
            _ => return Ok(false),
        };
        *slot = value
            .parse()
            .map_err(|e| NetError::InvalidCost(key.to_string(), format!("{e}")))?;
        Ok(true)
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::for_profile(Profile::Custom)
    }
}

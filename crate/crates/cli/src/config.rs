//! Flat `key = value` experiment configs.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::experiments::Experiment;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { key: String, message: String },
}

impl ConfigError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line: 0, message } => write!(f, "parse error: {message}"),
            Self::Parse { line, message } => write!(f, "parse error on line {line}: {message}"),
            Self::Validation { key, message } => write!(f, "invalid `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[&str] = &[
    "subcommand",
    "dimension",
    "r_max",
    "num_points",
    "h",
    "t0",
    "t1",
    "num_times",
    "weight",
    "alpha",
    "lambda",
    "delta",
    "epsilon",
    "lambda_grid",
    "delta_grid",
    "potential",
    "depth",
    "width",
    "c_decay",
    "potential_alpha",
    "w_amplitude",
    "w_alpha",
    "v2_amplitude",
    "seed",
    "suite_size",
    "field",
    "refinements",
    "levels",
    "num_modes",
    "p",
    "betas",
    "radii",
    "decay_window",
    "profile",
    "scan_r_max",
    "scan_h",
    "cutoff_radii",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Log,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialChoice {
    Zero,
    Sech,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    Suite,
    Zero,
    Waveguide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    Computed,
    Analytic,
}

/// Grid resolution as given: a node count or a spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    NumPoints(usize),
    Spacing(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: Experiment,
    pub dimension: usize,
    pub r_max: f64,
    pub resolution: Resolution,
    pub t0: f64,
    pub t1: f64,
    pub num_times: usize,
    pub weight: WeightChoice,
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub lambda_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub potential: PotentialChoice,
    pub depth: f64,
    pub width: f64,
    pub c_decay: f64,
    pub potential_alpha: f64,
    pub w_amplitude: f64,
    pub w_alpha: f64,
    pub v2_amplitude: f64,
    pub seed: u64,
    pub suite_size: usize,
    pub field: FieldChoice,
    pub refinements: usize,
    pub levels: usize,
    pub num_modes: usize,
    pub p: f64,
    pub betas: Vec<f64>,
    pub radii: Vec<f64>,
    pub decay_window: Option<[f64; 2]>,
    pub profile: ProfileChoice,
    pub scan_r_max: f64,
    pub scan_h: f64,
    pub cutoff_radii: Vec<f64>,
    #[serde(skip)]
    pub out: Option<String>,
}

/// Raw entries with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::parse(line, format!("expected `key = value`, got `{body}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::parse(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::parse(line, format!("`{key}` has no value")));
            }
            if entries.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(ConfigError::parse(line, format!("duplicate key `{key}`")));
            }
        }
        if entries.is_empty() {
            return Err(ConfigError::parse(0, "config has no entries"));
        }
        Ok(Self { entries })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::parse(*line, format!("cannot read `{v}` for `{key}`"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError::parse(*line, format!("cannot read `{s}` in `{key}`")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => options
                .iter()
                .find(|(name, _)| name == v)
                .map(|(_, t)| Some(*t))
                .ok_or_else(|| {
                    let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                    ConfigError::parse(*line, format!("`{key}` must be one of {}", names.join(", ")))
                }),
        }
    }
}

fn doubling(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| f64::from(1u32 << k)).collect()
}

impl ExperimentConfig {
    /// Typed config with per-experiment defaults; numeric ranges are checked
    /// by [`ExperimentConfig::validate`].
    pub fn from_raw(raw: &RawConfig, subcommand: Experiment) -> Result<Self, ConfigError> {
        if let Some((_, named)) = raw.entries.get("subcommand") {
            if named != subcommand.name() {
                return Err(ConfigError::validation(
                    "subcommand",
                    format!("config is for `{named}`, invoked as `{}`", subcommand.name()),
                ));
            }
        }
        use Experiment::*;
        let (r_max, h) = match subcommand {
            CertifyWeight => (10.0, 1e-2),
            VerifyCommutator => (12.0, 0.1),
            VerifyIdentity | Ledger => (6.0, 0.04),
            Positivity | Thresholds => (8.0, 0.02),
            Eigensolve | DecayScan => (20.0, 1e-3),
            LocalizedLedger => (40.0, 0.02),
        };
        let resolution = match (raw.get::<usize>("num_points")?, raw.get::<f64>("h")?) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::validation("h", "give either `h` or `num_points`, not both"))
            }
            (Some(n), None) => Resolution::NumPoints(n),
            (None, Some(h)) => Resolution::Spacing(h),
            (None, None) => Resolution::Spacing(h),
        };
        let potential_default = match subcommand {
            Eigensolve | DecayScan | LocalizedLedger | Thresholds => PotentialChoice::Sech,
            _ => PotentialChoice::Zero,
        };
        let potential = raw
            .choice(
                "potential",
                &[
                    ("zero", PotentialChoice::Zero),
                    ("sech", PotentialChoice::Sech),
                    ("power", PotentialChoice::Power),
                ],
            )?
            .unwrap_or(potential_default);
        let decay_window = match raw.list("decay_window")? {
            None => None,
            Some(v) if v.len() == 2 => Some([v[0], v[1]]),
            Some(_) => return Err(ConfigError::validation("decay_window", "needs two numbers")),
        };
        let lambda_default = if subcommand == LocalizedLedger { 0.25 } else { 1.0 };
        Ok(Self {
            subcommand,
            dimension: raw.get("dimension")?.unwrap_or(1),
            r_max: raw.get("r_max")?.unwrap_or(r_max),
            resolution,
            t0: raw.get("t0")?.unwrap_or(0.0),
            t1: raw.get("t1")?.unwrap_or(1.0),
            num_times: raw.get("num_times")?.unwrap_or(41),
            weight: raw
                .choice("weight", &[("log", WeightChoice::Log), ("power", WeightChoice::Power)])?
                .unwrap_or(WeightChoice::Log),
            alpha: raw.get("alpha")?.unwrap_or(0.0),
            lambda: raw.get("lambda")?.unwrap_or(lambda_default),
            delta: raw.get("delta")?.unwrap_or(0.01),
            epsilon: raw.get("epsilon")?.unwrap_or(0.25),
            lambda_grid: raw.list("lambda_grid")?.unwrap_or_else(|| doubling(0, 8)),
            delta_grid: raw.list("delta_grid")?.unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2, 1e-1]),
            potential,
            depth: raw.get("depth")?.unwrap_or(2.0),
            width: raw.get("width")?.unwrap_or(1.0),
            c_decay: raw.get("c_decay")?.unwrap_or(1.0),
            potential_alpha: raw.get("potential_alpha")?.unwrap_or(1.0),
            w_amplitude: raw.get("w_amplitude")?.unwrap_or(0.0),
            w_alpha: raw.get("w_alpha")?.unwrap_or(1.0),
            v2_amplitude: raw.get("v2_amplitude")?.unwrap_or(0.0),
            seed: raw.get("seed")?.unwrap_or(0),
            suite_size: raw.get("suite_size")?.unwrap_or(5),
            field: raw
                .choice(
                    "field",
                    &[
                        ("suite", FieldChoice::Suite),
                        ("zero", FieldChoice::Zero),
                        ("waveguide", FieldChoice::Waveguide),
                    ],
                )?
                .unwrap_or(FieldChoice::Suite),
            refinements: raw.get("refinements")?.unwrap_or(5),
            levels: raw.get("levels")?.unwrap_or(3),
            num_modes: raw.get("num_modes")?.unwrap_or(1),
            p: raw.get("p")?.unwrap_or(1.0),
            betas: raw
                .list("betas")?
                .unwrap_or_else(|| (0..=20).map(|i| 1.8 + 0.02 * f64::from(i)).collect()),
            radii: raw.list("radii")?.unwrap_or_default(),
            decay_window,
            profile: raw
                .choice(
                    "profile",
                    &[("computed", ProfileChoice::Computed), ("analytic", ProfileChoice::Analytic)],
                )?
                .unwrap_or(if potential == PotentialChoice::Sech {
                    ProfileChoice::Analytic
                } else {
                    ProfileChoice::Computed
                }),
            scan_r_max: raw.get("scan_r_max")?.unwrap_or(4096.0),
            scan_h: raw.get("scan_h")?.unwrap_or(0.0625),
            cutoff_radii: raw.list("cutoff_radii")?.unwrap_or_else(|| doubling(1, 4)),
            out: raw.get("out")?,
        })
    }

    /// Range checks that do not need the numerical core.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::validation(key, format!("{v} must be positive and finite")))
            }
        };
        positive("r_max", self.r_max)?;
        positive("lambda", self.lambda)?;
        positive("delta", self.delta)?;
        positive("epsilon", self.epsilon)?;
        positive("width", self.width)?;
        positive("p", self.p)?;
        positive("scan_r_max", self.scan_r_max)?;
        positive("scan_h", self.scan_h)?;
        if let Resolution::Spacing(h) = self.resolution {
            positive("h", h)?;
        }
        if self.dimension == 0 {
            return Err(ConfigError::validation("dimension", "must be at least 1"));
        }
        if !(self.t1 > self.t0) {
            return Err(ConfigError::validation("t1", format!("{} must exceed t0 = {}", self.t1, self.t0)));
        }
        if self.num_times < 7 {
            return Err(ConfigError::validation("num_times", "needs at least 7 slices"));
        }
        if self.suite_size == 0 {
            return Err(ConfigError::validation("suite_size", "must be positive"));
        }
        if self.refinements < 3 {
            return Err(ConfigError::validation("refinements", "needs at least 3 levels"));
        }
        if self.levels == 0 {
            return Err(ConfigError::validation("levels", "must be positive"));
        }
        if self.num_modes == 0 {
            return Err(ConfigError::validation("num_modes", "must be positive"));
        }
        for (key, list) in [
            ("lambda_grid", &self.lambda_grid),
            ("delta_grid", &self.delta_grid),
            ("cutoff_radii", &self.cutoff_radii),
        ] {
            if list.is_empty() {
                return Err(ConfigError::validation(key, "list is empty"));
            }
            for &v in list {
                positive(key, v)?;
            }
        }
        if self.betas.is_empty() {
            return Err(ConfigError::validation("betas", "list is empty"));
        }
        if let Some([a, b]) = self.decay_window {
            if !(a >= 0.0 && b > a) {
                return Err(ConfigError::validation("decay_window", format!("[{a}, {b}] is not a window")));
            }
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("depth", self.depth),
            ("c_decay", self.c_decay),
            ("potential_alpha", self.potential_alpha),
            ("w_alpha", self.w_alpha),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::validation(key, format!("{v} must be nonnegative")));
            }
        }
        Ok(())
    }
}

//! Flat `key = value` run configuration.
//!
//! Values come from three layers: built-in defaults, an optional config
//! file and `--set key=value` overrides, later layers winning. Every value
//! remembers where it came from so errors can point at a file line.

use std::fmt;
use std::path::{Path, PathBuf};

use clare::learners::{LossFn, OutputActivation};
use clare::{AeConfig, Criterion, Grid, KGrid};

pub const KEYS: &[&str] = &[
    "data",
    "format",
    "grid",
    "learn",
    "latent_dim_from",
    "latent_dim_to",
    "latent_dim_by",
    "folds",
    "seed",
    "tolerance_level",
    "attainment_rate",
    "cvqlines",
    "out",
    "threads",
    "verbose",
    "ae.hidden",
    "ae.epochs",
    "ae.batch",
    "ae.lr",
    "ae.output_activation",
    "ae.loss",
    "dwt.levels",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Override => write!(f, "--set"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Raw key/value pairs with their origins, before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Origin)>,
}

impl RawConfig {
    pub fn defaults() -> Self {
        let mut c = RawConfig::default();
        for (k, v) in [
            ("format", "auto"),
            ("grid", "auto"),
            ("learn", "pca"),
            ("latent_dim_from", "1"),
            ("latent_dim_to", "400"),
            ("latent_dim_by", "20"),
            ("folds", "5"),
            ("seed", "1"),
            ("tolerance_level", "0.05"),
            ("attainment_rate", "0.95"),
            ("cvqlines", "0.9"),
            ("out", "clare_out"),
            ("threads", "0"),
            ("verbose", "false"),
            ("ae.hidden", "600"),
            ("ae.epochs", "100"),
            ("ae.batch", "16"),
            ("ae.lr", "0.001"),
            ("ae.output_activation", "sigmoid"),
            ("ae.loss", "mse"),
            ("dwt.levels", "auto"),
        ] {
            c.set(k, v, Origin::Default);
        }
        c
    }

    fn set(&mut self, key: &str, value: &str, origin: Origin) {
        self.entries.retain(|(k, _, _)| k != key);
        self.entries.push((key.to_string(), value.to_string(), origin));
    }

    pub fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, o)| (v.as_str(), o))
    }

    /// Merge a config file's text. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let origin = Origin::File { path: path.to_path_buf(), line };
            let (key, value) = content.split_once('=').ok_or_else(|| {
                ConfigError(format!("{origin}: expected `key = value`, found {content:?}"))
            })?;
            let (key, mut value) = (key.trim(), value.trim().to_string());
            // Paths in a config file are relative to the file itself.
            if matches!(key, "data" | "out") && Path::new(&value).is_relative() {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    value = dir.join(&value).to_string_lossy().into_owned();
                }
            }
            self.merge_pair(key, &value, origin)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.merge_text(&text, path)
    }

    /// Merge one `key=value` override.
    pub fn merge_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects key=value, found {pair:?}")))?;
        self.merge_pair(key.trim(), value.trim(), Origin::Override)
    }

    fn merge_pair(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(ConfigError(format!("{origin}: unknown key {key:?}")));
        }
        if value.is_empty() {
            return Err(ConfigError(format!("{origin}: empty value for {key}")));
        }
        self.set(key, value, origin);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Auto,
    Csv,
    Clre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Folds {
    K(usize),
    Loo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Pca,
    Dwt,
    Dwt2d,
    Ae,
}

impl LearnerKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pca" => Some(LearnerKind::Pca),
            "dwt" => Some(LearnerKind::Dwt),
            "dwt.2d" => Some(LearnerKind::Dwt2d),
            "ae" => Some(LearnerKind::Ae),
            _ => None,
        }
    }
}

/// Typed configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub format: Format,
    pub grid: Option<Grid>,
    pub learn: Vec<LearnerKind>,
    pub k_grid: KGrid,
    pub folds: Folds,
    pub seed: u64,
    pub criterion: Criterion,
    pub out: PathBuf,
    pub threads: usize,
    pub verbose: bool,
    pub ae: AeConfig,
    pub dwt_levels: Option<usize>,
}

fn parse_grid(s: &str) -> std::result::Result<Option<Grid>, String> {
    let s = s.trim();
    if s == "auto" {
        return Ok(None);
    }
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad grid size {v:?}"));
    let g = if let Some(len) = s.strip_prefix("1d:") {
        Grid::one_d(num(len)?)
    } else if let Some((r, c)) = s.split_once(['x', 'X']) {
        Grid::two_d(num(r)?, num(c)?)
    } else {
        Grid::one_d(num(s)?)
    };
    g.map(Some).map_err(|e| e.to_string())
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected true or false, found {s:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("not a valid number: {s:?}"))
}

fn optional_usize(s: &str) -> std::result::Result<Option<usize>, String> {
    if s == "auto" {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        fn field<T>(raw: &RawConfig, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
            let (value, origin) = raw
                .get(key)
                .ok_or_else(|| ConfigError(format!("missing required key {key}")))?;
            parse(value).map_err(|e| ConfigError(format!("{origin}: {key}: {e}")))
        }
        let data = raw.get("data").map(|(v, _)| PathBuf::from(v));
        let format = field(raw, "format", |s| match s {
            "auto" => Ok(Format::Auto),
            "csv" => Ok(Format::Csv),
            "clre" => Ok(Format::Clre),
            _ => Err(format!("expected auto, csv or clre, found {s:?}")),
        })?;
        let learn = field(raw, "learn", |s| {
            s.split(',')
                .map(|name| {
                    LearnerKind::parse(name.trim())
                        .ok_or_else(|| format!("unknown learner {:?} (pca, dwt, dwt.2d, ae)", name.trim()))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        let from = field(raw, "latent_dim_from", parse_num::<usize>)?;
        let to = field(raw, "latent_dim_to", parse_num::<usize>)?;
        let by = field(raw, "latent_dim_by", parse_num::<usize>)?;
        let k_grid = KGrid::new(from, to, by).map_err(|e| {
            let origin = raw.get("latent_dim_to").map(|(_, o)| o.to_string()).unwrap_or_default();
            ConfigError(format!("{origin}: latent dimension grid: {e}"))
        })?;
        let folds = field(raw, "folds", |s| {
            if s == "loo" {
                Ok(Folds::Loo)
            } else {
                parse_num(s).map(Folds::K)
            }
        })?;
        let tolerance = field(raw, "tolerance_level", parse_num::<f64>)?;
        let attainment = field(raw, "attainment_rate", parse_num::<f64>)?;
        let user_quantile = field(raw, "cvqlines", parse_num::<f64>)?;
        let criterion = Criterion::new(tolerance, attainment, user_quantile)
            .map_err(|e| ConfigError(format!("criterion: {e}")))?;
        let ae = AeConfig {
            hidden: field(raw, "ae.hidden", parse_num)?,
            epochs: field(raw, "ae.epochs", parse_num)?,
            batch_size: field(raw, "ae.batch", parse_num)?,
            learning_rate: field(raw, "ae.lr", parse_num)?,
            output_activation: field(raw, "ae.output_activation", |s| match s {
                "sigmoid" => Ok(OutputActivation::Sigmoid),
                "linear" => Ok(OutputActivation::Linear),
                _ => Err(format!("expected sigmoid or linear, found {s:?}")),
            })?,
            loss: field(raw, "ae.loss", |s| match s {
                "mse" => Ok(LossFn::Mse),
                "bce" => Ok(LossFn::Bce),
                _ => Err(format!("expected mse or bce, found {s:?}")),
            })?,
        };
        Ok(RunConfig {
            data,
            format,
            grid: field(raw, "grid", parse_grid)?,
            learn,
            k_grid,
            folds,
            seed: field(raw, "seed", parse_num)?,
            criterion,
            out: field(raw, "out", |s| Ok(PathBuf::from(s)))?,
            threads: field(raw, "threads", parse_num)?,
            verbose: field(raw, "verbose", parse_bool)?,
            ae,
            dwt_levels: field(raw, "dwt.levels", optional_usize)?,
        })
    }
}

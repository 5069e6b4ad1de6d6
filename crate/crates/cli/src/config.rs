//! Run configuration: a named preset or a flat `key = value` file, plus
//! command-line overrides.
//!
//! Frequencies are cyclic MHz. `sigma_z` and the feature thresholds are bare
//! numbers. Everything after `#` on a line is a comment.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use optomech_core::{
    mhz, preset, BranchPolicy, DriveParams, NormalizedGrid, SystemParams, Thresholds, PRESET_NAMES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub params: SystemParams,
    pub drive: DriveParams,
    pub grid: NormalizedGrid,
    pub thresholds: Thresholds,
    pub branch: BranchPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            file: None,
            line: None,
            field: None,
            message: message.into(),
        }
    }

    fn at(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            file: None,
            line: Some(line),
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.to_owned()),
            ..Self::new(message)
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: ", p.display())?,
            (Some(p), None) => write!(f, "{}: ", p.display())?,
            (None, Some(l)) => write!(f, "line {l}: ")?,
            (None, None) => {}
        }
        if let Some(field) = &self.field {
            write!(f, "`{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parses `start:stop:count`, in units of ω_m.
pub fn parse_grid(s: &str) -> Result<NormalizedGrid, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected start:stop:count, got `{s}`"));
    };
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
    };
    let count = n
        .parse::<usize>()
        .map_err(|_| format!("`{n}` is not a point count"))?;
    NormalizedGrid::new(num(a)?, num(b)?, count).map_err(|e| e.to_string())
}

/// Parses `lowest`, `highest`, or a branch index.
pub fn parse_branch(s: &str) -> Result<BranchPolicy, String> {
    match s.trim() {
        "lowest" => Ok(BranchPolicy::Lowest),
        "highest" => Ok(BranchPolicy::Highest),
        t => t
            .parse()
            .map(BranchPolicy::Index)
            .map_err(|_| format!("expected lowest, highest or an index, got `{t}`")),
    }
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let p = preset(name).ok_or_else(|| {
            ConfigError::new(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            ))
        })?;
        Ok(Self {
            name: p.name.to_owned(),
            params: p.params,
            drive: p.drive,
            grid: p.grid,
            thresholds: Thresholds::default(),
            branch: BranchPolicy::Lowest,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read: {e}")))?;
        let name = path
            .file_stem()
            .map_or("config".into(), |s| s.to_string_lossy().into_owned());
        Self::parse(&text, &name).map_err(|e| ConfigError {
            file: Some(path.to_owned()),
            ..e
        })
    }

    pub fn parse(text: &str, name: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::at(
                    line,
                    None,
                    format!("expected `key = value`, got `{body}`"),
                ));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::at(line, None, "missing key"));
            }
            if let Some(first) = seen.insert(k, line) {
                return Err(ConfigError::at(
                    line,
                    Some(k),
                    format!("duplicate key (first set on line {first})"),
                ));
            }
            entries.push((line, k, v));
        }

        let mut cfg = match entries.iter().find(|e| e.1 == "preset") {
            Some(&(line, _, v)) => Self::from_preset(v)
                .map_err(|e| ConfigError::at(line, Some("preset"), e.message))?,
            None => Self {
                name: name.to_owned(),
                params: SystemParams::default(),
                drive: DriveParams::weak_probe(0.0),
                grid: NormalizedGrid::new(0.5, 1.5, 2001).expect("default grid"),
                thresholds: Thresholds::default(),
                branch: BranchPolicy::Lowest,
            },
        };
        cfg.name = name.to_owned();

        let mut eps_set = false;
        let mut pump_set = false;
        for &(line, key, value) in &entries {
            let num = || {
                value.parse::<f64>().map_err(|_| {
                    ConfigError::at(line, Some(key), format!("`{value}` is not a number"))
                })
            };
            let p = &mut cfg.params;
            match key {
                "preset" => {}
                "omega_m" => p.omega_m = mhz(num()?),
                "kappa" => p.kappa = mhz(num()?),
                "gamma_m" => p.gamma_m = mhz(num()?),
                "gamma_a" => p.gamma_a = mhz(num()?),
                "delta_c" => p.delta_c = mhz(num()?),
                "delta_a" => p.delta_a = mhz(num()?),
                "g_mc" => p.g_mc = mhz(num()?),
                "g_ac" => p.g_ac = mhz(num()?),
                "sigma_z" => p.sigma_z_ss = num()?,
                "omega_l" => {
                    cfg.drive.omega_l_amp = mhz(num()?);
                    pump_set = true;
                }
                "eps_p" => {
                    cfg.drive.eps_p = mhz(num()?);
                    eps_set = true;
                }
                "grid" => {
                    cfg.grid = parse_grid(value).map_err(|m| ConfigError::at(line, Some(key), m))?
                }
                "branch" => {
                    cfg.branch =
                        parse_branch(value).map_err(|m| ConfigError::at(line, Some(key), m))?
                }
                "dip_fraction" => cfg.thresholds.dip_fraction = num()?,
                "zero_threshold" => cfg.thresholds.zero_threshold = num()?,
                "asym_ratio" => cfg.thresholds.asym_ratio = num()?,
                _ => return Err(ConfigError::at(line, Some(key), "unknown key")),
            }
        }
        if pump_set && !eps_set {
            cfg.drive.eps_p = DriveParams::weak_probe(cfg.drive.omega_l_amp).eps_p;
        }

        cfg.validate().map_err(|mut e| {
            if let Some(f) = &e.field {
                e.line = seen.get(f.as_str()).copied();
            }
            e
        })?;
        Ok(cfg)
    }

    /// Re-checks every parameter, reporting failures under their config key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use optomech_core::Error;
        let key = |e: Error| match e {
            Error::InvalidParameter { field, reason } => {
                let key = match field {
                    "sigma_z_ss" => "sigma_z",
                    "omega_l_amp" => "omega_l",
                    f => f,
                };
                ConfigError::field(key, reason)
            }
            other => ConfigError::new(other.to_string()),
        };
        self.params.validate().map_err(key)?;
        self.drive.validate().map_err(key)?;
        let t = &self.thresholds;
        for (field, v) in [
            ("dip_fraction", t.dip_fraction),
            ("zero_threshold", t.zero_threshold),
            ("asym_ratio", t.asym_ratio),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::field(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

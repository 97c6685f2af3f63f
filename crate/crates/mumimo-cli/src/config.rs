//! Flat key-value scenario configuration files.
//!
//! The format is INI-style: `key = value` lines, `#`/`;` comments, and an
//! optional `[sweep]` section with `axis` and `values` keys. Every scenario
//! key defaults to the baseline system parameters, so an empty file is a
//! valid config. Unknown keys are rejected with their line number; parsing
//! either yields a fully valid config or a located error.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use mumimo_core::array_geometry::ArrayTopology;
use mumimo_core::montecarlo::{CorrelationMode, ScenarioConfig, SweepAxis};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Optional sweep block of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

/// Parsed configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub sweep: Option<SweepSpec>,
}

pub fn parse_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text, &path.display().to_string())
}

#[derive(PartialEq)]
enum Section {
    Scenario,
    Sweep,
}

pub fn parse_config_str(text: &str, path: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut array_dim: Option<f64> = None;
    let mut sweep_axis: Option<SweepAxis> = None;
    let mut sweep_values: Option<Vec<String>> = None;
    let mut section = Section::Scenario;

    let err = |line: usize, msg: String| ConfigError::Parse {
        path: path.to_string(),
        line,
        msg,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "scenario" => Section::Scenario,
                "sweep" => Section::Sweep,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();

        macro_rules! parse {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|_| {
                    err(line_no, format!("key '{key}': cannot parse '{value}'"))
                })?
            };
        }

        match section {
            Section::Sweep => match key {
                "axis" => {
                    sweep_axis = Some(SweepAxis::from_str(value).map_err(|e| {
                        err(line_no, format!("key 'axis': {e}"))
                    })?)
                }
                "values" => {
                    let values: Vec<String> = value
                        .split(',')
                        .map(|v| v.trim().to_string())
                        .filter(|v| !v.is_empty())
                        .collect();
                    if values.is_empty() {
                        return Err(err(line_no, "key 'values': empty list".into()));
                    }
                    sweep_values = Some(values);
                }
                other => return Err(err(line_no, format!("unknown key '{other}' in [sweep]"))),
            },
            Section::Scenario => match key {
                "m" => cfg.m_total = parse!(usize),
                "k" => cfg.k_users = parse!(usize),
                "n_clusters" => cfg.n_clusters = parse!(usize),
                "topology" => {
                    cfg.topology = match value {
                        "ura" => ArrayTopology::Ura,
                        "cylindrical" => ArrayTopology::Cylindrical,
                        other => {
                            return Err(err(
                                line_no,
                                format!("key 'topology': unknown value '{other}' (ura | cylindrical)"),
                            ))
                        }
                    }
                }
                "correlation_mode" => {
                    cfg.correlation_mode = match value {
                        "correlated" => CorrelationMode::Correlated,
                        "iid" => CorrelationMode::Iid,
                        other => {
                            return Err(err(
                                line_no,
                                format!(
                                    "key 'correlation_mode': unknown value '{other}' (correlated | iid)"
                                ),
                            ))
                        }
                    }
                }
                "transmit_snr_db" => cfg.tx_snr_db = parse!(f64),
                "shadowing_sd_db" => cfg.shadow_sd_db = parse!(f64),
                "pathloss_exponent" => cfg.pathloss_exponent = parse!(f64),
                "beta_max_db" => cfg.beta_max_db = parse!(f64),
                "frequency_hz" => cfg.frequency_hz = parse!(f64),
                "xpol_delta" => cfg.xpol_delta = parse!(f64),
                "array_dimension_m" => array_dim = Some(parse!(f64)),
                "xi" => cfg.xi = parse!(f64),
                "k_factor" => cfg.k_factor = parse!(f64),
                "spread_multiplier" => cfg.spread_multiplier = parse!(f64),
                "los" => cfg.los = parse!(bool),
                "region_radius_m" => cfg.region_radius_m = parse!(f64),
                "exclusion_radius_m" => cfg.exclusion_radius_m = parse!(f64),
                "p_pairs" => cfg.p_pairs = parse!(usize),
                "n_corr_draws" => cfg.n_corr_draws = parse!(usize),
                "n_trials" => cfg.n_trials = parse!(usize),
                "fading_draws_per_drop" => cfg.fading_draws_per_drop = parse!(usize),
                "master_seed" => cfg.master_seed = parse!(u64),
                other => return Err(err(line_no, format!("unknown key '{other}'"))),
            },
        }
    }

    // The array dimension defaults to 2 wavelengths at the configured
    // frequency; an explicit key overrides it.
    cfg.array_dim_m = array_dim.unwrap_or(2.0 * cfg.wavelength());

    cfg.validate().map_err(|e| ConfigError::Invalid {
        path: path.to_string(),
        msg: e.to_string(),
    })?;

    let sweep = match (sweep_axis, sweep_values) {
        (Some(axis), Some(values)) => Some(SweepSpec { axis, values }),
        (None, None) => None,
        _ => {
            return Err(ConfigError::Invalid {
                path: path.to_string(),
                msg: "[sweep] section needs both 'axis' and 'values'".into(),
            })
        }
    };
    Ok(ConfigFile { scenario: cfg, sweep })
}

/// Serialize a config document in the same key-value format `parse_config`
/// reads; `parse(write(cfg)) == cfg`.
pub fn write_config(file: &ConfigFile) -> String {
    let cfg = &file.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "m = {}", cfg.m_total);
    let _ = writeln!(out, "k = {}", cfg.k_users);
    let _ = writeln!(out, "n_clusters = {}", cfg.n_clusters);
    let topology = match cfg.topology {
        ArrayTopology::Ura => "ura",
        ArrayTopology::Cylindrical => "cylindrical",
    };
    let _ = writeln!(out, "topology = {topology}");
    let mode = match cfg.correlation_mode {
        CorrelationMode::Correlated => "correlated",
        CorrelationMode::Iid => "iid",
    };
    let _ = writeln!(out, "correlation_mode = {mode}");
    let _ = writeln!(out, "transmit_snr_db = {}", cfg.tx_snr_db);
    let _ = writeln!(out, "shadowing_sd_db = {}", cfg.shadow_sd_db);
    let _ = writeln!(out, "pathloss_exponent = {}", cfg.pathloss_exponent);
    let _ = writeln!(out, "beta_max_db = {}", cfg.beta_max_db);
    let _ = writeln!(out, "frequency_hz = {}", cfg.frequency_hz);
    let _ = writeln!(out, "xpol_delta = {}", cfg.xpol_delta);
    let _ = writeln!(out, "array_dimension_m = {}", cfg.array_dim_m);
    let _ = writeln!(out, "xi = {}", cfg.xi);
    let _ = writeln!(out, "k_factor = {}", cfg.k_factor);
    let _ = writeln!(out, "spread_multiplier = {}", cfg.spread_multiplier);
    let _ = writeln!(out, "los = {}", cfg.los);
    let _ = writeln!(out, "region_radius_m = {}", cfg.region_radius_m);
    let _ = writeln!(out, "exclusion_radius_m = {}", cfg.exclusion_radius_m);
    let _ = writeln!(out, "p_pairs = {}", cfg.p_pairs);
    let _ = writeln!(out, "n_corr_draws = {}", cfg.n_corr_draws);
    let _ = writeln!(out, "n_trials = {}", cfg.n_trials);
    let _ = writeln!(out, "fading_draws_per_drop = {}", cfg.fading_draws_per_drop);
    let _ = writeln!(out, "master_seed = {}", cfg.master_seed);
    if let Some(sweep) = &file.sweep {
        let _ = writeln!(out, "\n[sweep]");
        let _ = writeln!(out, "axis = {}", sweep.axis.name());
        let _ = writeln!(out, "values = {}", sweep.values.join(","));
    }
    out
}

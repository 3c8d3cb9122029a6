//! Run configuration: built-in defaults per experiment, then the TOML file, then
//! `--key value` overrides.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Seed used when neither the file nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub const EXPERIMENTS: [&str; 11] = [
    "free-field-check",
    "sample-gibbs",
    "correlations",
    "evolve",
    "invariance-test",
    "approx-study",
    "epsilon-study",
    "quantum-oracle",
    "duhamel-series",
    "wick-convergence",
    "time-correlations",
];

const KEYS: [&str; 27] = [
    "experiment", "seed", "kappa", "N_modes", "N", "dt", "T", "tau", "modes_M", "n_max", "K", "f_kind", "w", "m_max", "p",
    "samples", "integrator", "s", "s1", "eps", "n_list", "n_ref", "amplitude", "z", "terms", "times", "out_dir",
];
const LIST_KEYS: [&str; 4] = ["tau", "eps", "n_list", "times"];
const W_KEYS: [&str; 6] = ["type", "c", "preset", "width", "eps", "file"];

fn unit_strength() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WConfig {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default = "unit_strength")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub kappa: f64,
    #[serde(rename = "N_modes")]
    pub n_modes: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub tau: Vec<f64>,
    #[serde(rename = "modes_M")]
    pub modes_m: usize,
    pub n_max: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub f_kind: String,
    pub m_max: usize,
    pub p: usize,
    pub samples: usize,
    pub integrator: String,
    pub s: f64,
    pub s1: f64,
    pub eps: Vec<f64>,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub amplitude: f64,
    pub z: f64,
    pub terms: usize,
    pub times: Vec<f64>,
    pub out_dir: String,
    pub w: WConfig,
}

fn base_defaults() -> Table {
    let text = format!(
        r#"
seed = {DEFAULT_SEED}
kappa = 1.0
N_modes = 8
N = 16
dt = 1e-3
T = 1.0
tau = [2.0]
modes_M = 1
n_max = 6
K = 2.0
f_kind = "sharp"
m_max = 1
p = 1
samples = 10000
integrator = "strang_split"
s = 0.25
s1 = 0.0
eps = [0.4, 0.2, 0.1, 0.05]
n_list = [8, 16, 32, 64]
n_ref = 64
amplitude = 1.0
z = 1.0
terms = 5
times = [0.0, 0.5, 1.0]
out_dir = "runs"
w = {{ type = "delta", c = 1.0 }}
"#
    );
    text.parse().expect("built-in defaults parse")
}

fn experiment_defaults(experiment: &str) -> &'static str {
    match experiment {
        "free-field-check" => "N_modes = 32\nsamples = 100000",
        "sample-gibbs" => "N_modes = 8\nsamples = 10000",
        "correlations" => "N_modes = 4\nsamples = 20000",
        "evolve" => "N = 16\nT = 1.0",
        "invariance-test" => "N = 8\nsamples = 20000",
        "approx-study" => "s = 1.0\ns1 = 0.25\nT = 0.25\nn_list = [4, 8, 16]\nn_ref = 32\nw = { type = \"preset\", preset = \"gaussian\", c = 1.0, width = 0.1 }",
        "epsilon-study" => "N = 16\nT = 0.5",
        "quantum-oracle" => "w = { type = \"delta\", c = 0.5 }",
        "duhamel-series" => "w = { type = \"delta\", c = 0.5 }",
        "wick-convergence" => "tau = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]\nf_kind = \"none\"",
        "time-correlations" => "N = 8\nsamples = 4000\nw = { type = \"delta\", c = 0.5 }",
        _ => "",
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Canonical spelling of a top-level key, matched case-insensitively with `-` read as `_`.
fn canonical_key(raw: &str) -> Option<&'static str> {
    let k = raw.replace('-', "_");
    KEYS.iter().copied().find(|c| c.eq_ignore_ascii_case(&k))
}

/// Splits a command-line key into `(top, Some(sub))` for the nested `w` table.
fn split_override(raw: &str) -> (String, Option<String>) {
    let k = raw.replace('-', "_");
    for sep in ['.', '_'] {
        if let Some(rest) = k.strip_prefix(&format!("w{sep}")) {
            return ("w".into(), Some(rest.to_string()));
        }
    }
    (k, None)
}

fn parse_scalar(text: &str) -> Value {
    if let Ok(i) = text.parse::<i64>() {
        return Value::Integer(i);
    }
    if let Ok(x) = text.parse::<f64>() {
        return Value::Float(x);
    }
    match text {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => Value::String(text.to_string()),
    }
}

fn parse_list(text: &str) -> Value {
    let trimmed = text.trim().trim_start_matches('[').trim_end_matches(']');
    Value::Array(trimmed.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_scalar).collect())
}

/// Pairs `--key value` into `(key, value)`.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag.strip_prefix("--").ok_or_else(|| err(format!("expected --key, found {flag:?}")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let value = it.next().ok_or_else(|| err(format!("--{key} needs a value")))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(dst)), Value::Table(src)) if k == "w" => {
                // a new type replaces the whole potential description
                if src.contains_key("type") {
                    *dst = src;
                } else {
                    dst.extend(src);
                }
            }
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// Resolves the configuration of one run. `file_text` is the contents of `--config`.
pub fn resolve(experiment: &str, file_text: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    if !EXPERIMENTS.contains(&experiment) {
        return Err(err(format!("unknown experiment {experiment:?}; expected one of: {}", EXPERIMENTS.join(", "))));
    }
    let mut unknown = Vec::new();
    let mut file = Table::new();
    if let Some(text) = file_text {
        let raw: Table = text.parse().map_err(|e| err(format!("config does not parse: {e}")))?;
        for (k, v) in raw {
            match canonical_key(&k) {
                Some(c) => {
                    file.insert(c.to_string(), v);
                }
                None => unknown.push(k),
            }
        }
    }
    if let Some(Value::String(name)) = file.get("experiment") {
        if name != experiment {
            return Err(err(format!("config names experiment {name:?} but the command line asks for {experiment:?}")));
        }
    }
    let mut cli = Table::new();
    for (raw, text) in overrides {
        let (top, sub) = split_override(raw);
        match (canonical_key(&top), sub) {
            (Some("w"), Some(sub)) if W_KEYS.contains(&sub.as_str()) => {
                let entry = cli.entry("w").or_insert_with(|| Value::Table(Table::new()));
                if let Value::Table(t) = entry {
                    t.insert(sub, parse_scalar(text));
                }
            }
            (Some(c), None) if c != "w" => {
                let value = if LIST_KEYS.contains(&c) { parse_list(text) } else { parse_scalar(text) };
                cli.insert(c.to_string(), value);
            }
            _ => unknown.push(raw.clone()),
        }
    }
    if let Some(Value::Table(w)) = file.get("w") {
        unknown.extend(w.keys().filter(|k| !W_KEYS.contains(&k.as_str())).map(|k| format!("w.{k}")));
    }
    if !unknown.is_empty() {
        return Err(err(format!("unknown configuration keys: {}", unknown.join(", "))));
    }
    let mut table = base_defaults();
    merge(&mut table, experiment_defaults(experiment).parse().expect("built-in defaults parse"));
    merge(&mut table, file);
    merge(&mut table, cli);
    table.insert("experiment".into(), Value::String(experiment.into()));
    for key in LIST_KEYS {
        if let Some(v) = table.get_mut(key) {
            if !matches!(v, Value::Array(_)) {
                *v = Value::Array(vec![v.clone()]);
            }
        }
    }
    Value::Table(table).try_into().map_err(|e: toml::de::Error| err(format!("invalid configuration: {e}")))
}

impl RunConfig {
    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

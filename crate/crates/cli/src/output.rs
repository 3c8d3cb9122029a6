use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;

/// One in-run assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Everything an experiment produces, held in memory until the run succeeds.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub metrics: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn results_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }

    pub fn summary_json(&self, cfg: &RunConfig) -> String {
        let v = json!({
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "passed": self.passed(),
            "rows": self.rows.len(),
            "metrics": self.metrics,
            "checks": self.checks,
        });
        serde_json::to_string_pretty(&v).expect("summary serializes") + "\n"
    }

    pub fn failures_json(&self) -> String {
        serde_json::to_string_pretty(&self.failures()).expect("failures serialize") + "\n"
    }
}

/// Shortest round-trip decimal form; identical across runs and platforms.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// `<out_dir>/<experiment>-<timestamp>`, with a numeric suffix if that already exists.
pub fn run_directory(cfg: &RunConfig) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = Path::new(&cfg.out_dir).join(format!("{}-{stamp}", cfg.experiment));
    if !base.exists() {
        return base;
    }
    (1..).map(|i| PathBuf::from(format!("{}-{i}", base.display()))).find(|p| !p.exists()).expect("unbounded suffixes")
}

pub fn write_artifacts(dir: &Path, cfg: &RunConfig, outcome: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), outcome.results_csv()?)?;
    fs::write(dir.join("summary.json"), outcome.summary_json(cfg))?;
    fs::write(dir.join("failures.json"), outcome.failures_json())?;
    fs::write(dir.join("config.resolved"), cfg.to_toml())?;
    Ok(())
}

//! End-to-end runs driven by a declarative TOML config.
//!
//! ```toml
//! thresholds = [1, 7, 14, 30, 90]
//! seed = 1
//! output_dir = "out"
//! protocols = ["crossval", "round_robin"]
//!
//! [[datasets]]
//! name = "camel"
//! records = "data/camel.csv"     # per-issue feature CSV
//!
//! [[datasets]]
//! name = "hadoop"
//! dump = "dumps/hadoop"          # raw issues.json / commits.json
//! ```
//!
//! Output paths depend only on dataset name, threshold and protocol.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    class_distribution, crossval10, distribution_csv, render_report, round_robin, EvalReport,
    Protocol, ReportRow, DEFAULT_SEED, DISTRIBUTION_BUCKETS,
};
use crate::ingest::{self, IssueRecord};
use crate::tabular::Dataset;
use crate::targets::{binarize, drop_sticky, ThresholdSpec};

/// Overrides `output_dir` from the config.
pub const OUTPUT_DIR_ENV: &str = "ISSUE_LIFETIME_OUT";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump: Option<PathBuf>,
}

fn default_thresholds() -> Vec<ThresholdSpec> {
    ThresholdSpec::all().to_vec()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::CrossVal, Protocol::RoundRobin]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<ThresholdSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative dataset and output paths resolve against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            if cfg.output_dir.is_relative() {
                cfg.output_dir = base.join(&cfg.output_dir);
            }
            for d in &mut cfg.datasets {
                for p in [&mut d.records, &mut d.dump].into_iter().flatten() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets registered".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::Config("thresholds must be non-empty".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("protocols must be non-empty".into()));
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if d.name.is_empty() || d.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid dataset name {:?}", d.name)));
            }
            if !names.insert(d.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate dataset name {:?}",
                    d.name
                )));
            }
            if d.records.is_some() == d.dump.is_some() {
                return Err(Error::Config(format!(
                    "dataset {:?}: give exactly one of `records` or `dump`",
                    d.name
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Output directory after applying the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| self.output_dir.clone())
    }
}

/// One-line provenance: tool version, config hash and seed.
pub fn version_and_provenance(config: &RunConfig) -> String {
    format!(
        "issue-lifetime {TOOL_VERSION} config={} seed={}",
        config.hash(),
        config.seed
    )
}

/// Loads a registry entry's records, with stickies still present.
pub fn load_entry(entry: &DatasetEntry) -> Result<Vec<IssueRecord>> {
    let loaded = match (&entry.records, &entry.dump) {
        (Some(csv), None) => ingest::load_records(csv),
        (None, Some(dir)) => ingest::parse_dump(dir).and_then(|d| ingest::build_dataset(&d)),
        _ => Err(Error::Config(
            "exactly one of `records` or `dump` required".into(),
        )),
    };
    let mut records = loaded.map_err(|e| e.context(format!("dataset {:?}", entry.name)))?;
    for r in &mut records {
        r.project = entry.name.clone();
    }
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub report: EvalReport,
    pub output_dir: PathBuf,
    pub provenance: String,
    pub files_written: Vec<PathBuf>,
}

fn write(path: &Path, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

/// Report, every loaded record, and each (dataset, threshold) binarization.
pub type Evaluation = (
    EvalReport,
    Vec<IssueRecord>,
    Vec<(String, ThresholdSpec, Dataset)>,
);

/// Evaluates every configured (dataset, threshold, protocol) without
/// touching the filesystem beyond reading inputs.
pub fn evaluate(config: &RunConfig) -> Result<Evaluation> {
    config.validate()?;
    let loaded = config
        .datasets
        .iter()
        .map(|e| Ok((e.name.clone(), drop_sticky(load_entry(e)?))))
        .collect::<Result<Vec<_>>>()?;

    let mut binarized = Vec::new();
    for spec in &config.thresholds {
        for (name, recs) in &loaded {
            let d = binarize(recs, *spec)
                .map_err(|e| e.context(format!("dataset {name:?}, {spec} days")))?;
            binarized.push((name.clone(), *spec, d));
        }
    }

    let mut rows: Vec<ReportRow> = Vec::new();
    if config.protocols.contains(&Protocol::CrossVal) {
        let cv = binarized
            .par_iter()
            .map(|(name, spec, d)| {
                crossval10(name, *spec, d, config.seed)
                    .map_err(|e| e.context(format!("crossval {name:?}, {spec} days")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(cv);
    }
    if config.protocols.contains(&Protocol::RoundRobin) && loaded.len() >= 2 {
        for spec in &config.thresholds {
            let group: Vec<(String, Dataset)> = binarized
                .iter()
                .filter(|(_, s, _)| s == spec)
                .map(|(n, _, d)| (n.clone(), d.clone()))
                .collect();
            rows.extend(
                round_robin(&group, *spec)
                    .map_err(|e| e.context(format!("round robin, {spec} days")))?,
            );
        }
    }
    let report = EvalReport::new(rows);
    report.check_invariants()?;
    let all_records = loaded.into_iter().flat_map(|(_, r)| r).collect();
    Ok((report, all_records, binarized))
}

/// Writes `report.csv`, `medians.csv`, `report.txt`, `distribution.csv`
/// and `trees/*.txt`.
pub fn write_report(
    dir: &Path,
    report: &EvalReport,
    records: &[IssueRecord],
    provenance: &str,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let header = vec![provenance.to_string()];
    let rendered = render_report(report, &header);
    write(&dir.join("report.csv"), &rendered.csv, written)?;
    write(&dir.join("medians.csv"), &rendered.medians_csv, written)?;
    write(&dir.join("report.txt"), &rendered.text, written)?;
    for r in report.rows().iter().filter(|r| !r.degenerate) {
        write(
            &dir.join("trees").join(format!("{}.txt", r.artifact_name())),
            &r.tree,
            written,
        )?;
    }
    let dist = class_distribution(records, &DISTRIBUTION_BUCKETS)?;
    write(
        &dir.join("distribution.csv"),
        &distribution_csv(&dist, &DISTRIBUTION_BUCKETS),
        written,
    )?;
    Ok(())
}

/// Evaluate and write only the report artifacts.
pub fn run_report(config: &RunConfig) -> Result<PipelineSummary> {
    run_report_in(config, &config.resolved_output_dir())
}

pub fn run_report_in(config: &RunConfig, out: &Path) -> Result<PipelineSummary> {
    let provenance = version_and_provenance(config);
    let out = out.to_path_buf();
    let (report, records, _) = evaluate(config)?;
    let mut written = Vec::new();
    write_report(&out, &report, &records, &provenance, &mut written)?;
    Ok(PipelineSummary {
        report,
        output_dir: out,
        provenance,
        files_written: written,
    })
}

/// Full pipeline: binarized CSVs, selected features, trees, report tables.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineSummary> {
    run_pipeline_in(config, &config.resolved_output_dir())
}

pub fn run_pipeline_in(config: &RunConfig, out: &Path) -> Result<PipelineSummary> {
    let provenance = version_and_provenance(config);
    let out = out.to_path_buf();
    let (report, records, binarized) = evaluate(config)?;
    let mut written = Vec::new();
    for (name, spec, d) in &binarized {
        let path = out.join("binarized").join(format!("{name}-{spec}.csv"));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        d.save_csv(&path)?;
        written.push(path);
    }
    for r in report.rows().iter().filter(|r| !r.degenerate) {
        write(
            &out.join("selected")
                .join(format!("{}.txt", r.artifact_name())),
            &(r.selected.join("\n") + "\n"),
            &mut written,
        )?;
    }
    write_report(&out, &report, &records, &provenance, &mut written)?;
    write(
        &out.join("provenance.txt"),
        &(provenance.clone() + "\n"),
        &mut written,
    )?;
    Ok(PipelineSummary {
        report,
        output_dir: out,
        provenance,
        files_written: written,
    })
}

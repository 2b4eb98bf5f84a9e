//! Evaluation harness: metrics, stratified 10-fold cross-validation,
//! round-robin cross-project transfer, medians and report rendering.
//!
//! Feature selection and tree fitting are always done on training rows only.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfs::{self, SubsetScore};
use crate::error::{Error, Result};
use crate::ingest::{combine, IssueRecord};
use crate::tabular::{count_labels, project, ConfusionCounts, Dataset, Label};
use crate::targets::ThresholdSpec;
use crate::tree::{self, DecisionTree};

/// A cell is "bad" when precision or recall falls below this, or false
/// alarms rise above it.
pub const BAD_LIMIT: f64 = 0.33;
pub const FOLDS: usize = 10;
/// Minimum instances of each class for cross-validation to be attempted.
pub const MIN_CLASS_INSTANCES: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[serde(rename = "crossval")]
    CrossVal,
    RoundRobin,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::CrossVal => "crossval",
            Protocol::RoundRobin => "round_robin",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Precision, recall and false-alarm rate in `[0, 1]`. A 0/0 ratio is
/// reported as 0 with its `*_undefined` flag set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub prec: f64,
    pub recall: f64,
    pub pf: f64,
    #[serde(default)]
    pub prec_undefined: bool,
    #[serde(default)]
    pub recall_undefined: bool,
    #[serde(default)]
    pub pf_undefined: bool,
}

impl MetricTriple {
    pub fn is_bad(&self) -> bool {
        self.pf > BAD_LIMIT || self.prec < BAD_LIMIT || self.recall < BAD_LIMIT
    }

    pub fn any_undefined(&self) -> bool {
        self.prec_undefined || self.recall_undefined || self.pf_undefined
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(c: &ConfusionCounts) -> MetricTriple {
    let (prec, prec_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let (pf, pf_undefined) = ratio(c.fp, c.tn + c.fp);
    MetricTriple {
        prec,
        recall,
        pf,
        prec_undefined,
        recall_undefined,
        pf_undefined,
    }
}

/// Fold id per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    folds: Vec<usize>,
    k: usize,
}

impl FoldPlan {
    /// Shuffles each class with a seeded RNG and deals its rows round-robin
    /// over the folds, so every fold holds `floor` or `ceil` of its share.
    pub fn stratified(labels: &[Label], k: usize, seed: u64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("label sequence"));
        }
        if k == 0 {
            return Err(Error::Config("fold count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut folds = vec![0; labels.len()];
        let mut next = 0;
        for class in [Label::Le, Label::Gt] {
            let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            rows.shuffle(&mut rng);
            for r in rows {
                folds[r] = next % k;
                next += 1;
            }
        }
        Ok(FoldPlan { folds, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.folds[row]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.folds
    }

    /// `(train, test)` row indices for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&r| self.folds[r] != fold)
    }
}

/// Selected features plus the tree learned on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub selection: SubsetScore,
    pub tree: DecisionTree,
}

impl Model {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<Label>> {
        self.tree.predict_dataset(data)
    }
}

/// CFS on the training rows, then a tree on the selected columns with
/// `M` derived from the training size.
pub fn fit(train: &Dataset) -> Result<Model> {
    let selection = cfs::select(train)?;
    let keep: Vec<&str> = selection.subset.iter().map(String::as_str).collect();
    let projected = project(train, &keep)?;
    let tree = tree::learn(&projected, tree::min_partition(train.len())?)?;
    Ok(Model { selection, tree })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub threshold_days: u32,
    pub protocol: Protocol,
    pub metrics: MetricTriple,
    pub counts: ConfusionCounts,
    pub selected: Vec<String>,
    /// Rendered tree; empty for degenerate rows.
    pub tree: String,
    pub bad: bool,
    /// Cross-validation was not attempted (a class had too few instances).
    pub degenerate: bool,
}

impl ReportRow {
    fn new(
        dataset: &str,
        spec: ThresholdSpec,
        protocol: Protocol,
        counts: ConfusionCounts,
        model: Option<&Model>,
    ) -> Self {
        let m = metrics(&counts);
        ReportRow {
            dataset: dataset.to_string(),
            threshold_days: spec.days(),
            protocol,
            metrics: m,
            counts,
            selected: model
                .map(|m| m.selection.subset.clone())
                .unwrap_or_default(),
            tree: model.map(|m| m.tree.render()).unwrap_or_default(),
            bad: m.is_bad(),
            degenerate: model.is_none(),
        }
    }

    /// File stem for this row's artifacts.
    pub fn artifact_name(&self) -> String {
        format!("{}-{}-{}", self.dataset, self.threshold_days, self.protocol)
    }
}

/// Stratified 10-fold cross-validation with pooled (summed) confusion
/// counts. The reported tree is the one fit on the whole dataset.
pub fn crossval10(
    name: &str,
    spec: ThresholdSpec,
    dataset: &Dataset,
    seed: u64,
) -> Result<ReportRow> {
    let (pos, neg) = count_labels(dataset.labels())?;
    if pos < MIN_CLASS_INSTANCES || neg < MIN_CLASS_INSTANCES {
        let counts = ConfusionCounts::new(0, 0, neg, pos);
        return Ok(ReportRow::new(name, spec, Protocol::CrossVal, counts, None));
    }
    let plan = FoldPlan::stratified(dataset.labels(), FOLDS, seed)?;
    let per_fold = (0..FOLDS)
        .into_par_iter()
        .map(|fold| {
            let (train_idx, test_idx) = plan.split(fold);
            let train = dataset.select_rows(&train_idx)?;
            let test = dataset.select_rows(&test_idx)?;
            let model = fit(&train)?;
            ConfusionCounts::from_predictions(test.labels(), &model.predict(&test)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = ConfusionCounts::default();
    for c in per_fold {
        counts += c;
    }
    if counts.total() != dataset.len() {
        return Err(Error::Leakage(format!(
            "{name}: pooled confusion covers {} of {} rows",
            counts.total(),
            dataset.len()
        )));
    }
    let model = fit(dataset)?;
    Ok(ReportRow::new(
        name,
        spec,
        Protocol::CrossVal,
        counts,
        Some(&model),
    ))
}

/// All rows except those of `held_out`, checked to share no provenance with
/// the held-out project.
pub fn training_pool(datasets: &[(String, Dataset)], held_out: usize) -> Result<Dataset> {
    let test = &datasets[held_out].1;
    let parts: Vec<Dataset> = datasets
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .map(|(_, (_, d))| d.clone())
        .collect();
    let pool = combine(&parts)?;
    let test_projects: HashSet<&str> = test.provenance().iter().map(String::as_str).collect();
    if let Some(p) = pool
        .provenance()
        .iter()
        .find(|p| test_projects.contains(p.as_str()))
    {
        return Err(Error::Leakage(format!(
            "training pool for {} contains rows from project {p:?}",
            datasets[held_out].0
        )));
    }
    Ok(pool)
}

/// Train on every other project, test on each held-out project in turn.
pub fn round_robin(datasets: &[(String, Dataset)], spec: ThresholdSpec) -> Result<Vec<ReportRow>> {
    if datasets.len() < 2 {
        return Err(Error::NotEnoughDatasets(datasets.len()));
    }
    let names = datasets[0].1.feature_names();
    if let Some((n, d)) = datasets.iter().find(|(_, d)| d.feature_names() != names) {
        return Err(Error::SchemaMismatch(format!(
            "{n}: columns {:?} differ from {:?}",
            d.feature_names(),
            names
        )));
    }
    (0..datasets.len())
        .into_par_iter()
        .map(|held_out| {
            let (name, test) = &datasets[held_out];
            let pool = training_pool(datasets, held_out)?;
            let model = fit(&pool)?;
            let counts = ConfusionCounts::from_predictions(test.labels(), &model.predict(test)?)?;
            Ok(ReportRow::new(
                name,
                spec,
                Protocol::RoundRobin,
                counts,
                Some(&model),
            ))
        })
        .collect()
}

fn lower_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

/// Component-wise median over the rows at `spec`; even counts take the
/// lower middle value.
pub fn medians(rows: &[ReportRow], spec: ThresholdSpec) -> Result<MetricTriple> {
    let at: Vec<&ReportRow> = rows
        .iter()
        .filter(|r| r.threshold_days == spec.days())
        .collect();
    if at.is_empty() {
        return Err(Error::Empty("report rows at threshold"));
    }
    Ok(MetricTriple {
        prec: lower_median(at.iter().map(|r| r.metrics.prec).collect()),
        recall: lower_median(at.iter().map(|r| r.metrics.recall).collect()),
        pf: lower_median(at.iter().map(|r| r.metrics.pf).collect()),
        ..MetricTriple::default()
    })
}

pub const DISTRIBUTION_BUCKETS: [u32; 8] = [1, 7, 14, 30, 90, 180, 365, 1000];

/// Per-project lifetime histogram over `(previous, t]` buckets, scaled so
/// each project's largest bucket is 1. Sticky issues and lifetimes beyond
/// the last bucket are not counted.
pub fn class_distribution(
    records: &[IssueRecord],
    thresholds: &[u32],
) -> Result<BTreeMap<String, Vec<f64>>> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bucket thresholds must be increasing".into()));
    }
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut seen = false;
    for r in records {
        let Some(days) = r.time_open_days() else {
            continue;
        };
        seen = true;
        let slot = counts
            .entry(r.project.clone())
            .or_insert_with(|| vec![0; thresholds.len()]);
        if let Some(b) = thresholds.iter().position(|&t| days <= f64::from(t)) {
            slot[b] += 1;
        }
    }
    if !seen {
        return Err(Error::Empty("closed issues"));
    }
    Ok(counts
        .into_iter()
        .map(|(p, c)| {
            let max = c.iter().copied().max().unwrap_or(0);
            let rel = c
                .iter()
                .map(|&x| if max == 0 { 0.0 } else { x as f64 / max as f64 })
                .collect();
            (p, rel)
        })
        .collect())
}

pub fn distribution_csv(dist: &BTreeMap<String, Vec<f64>>, thresholds: &[u32]) -> String {
    let mut out = String::from("project");
    for t in thresholds {
        let _ = write!(out, ",{t}");
    }
    out.push('\n');
    for (p, rel) in dist {
        out.push_str(p);
        for v in rel {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Rows keyed by (dataset, threshold, protocol).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        let mut r = EvalReport { rows: Vec::new() };
        r.extend(rows);
        r
    }

    /// Inserts rows, replacing any with the same key, and keeps key order.
    pub fn extend(&mut self, rows: impl IntoIterator<Item = ReportRow>) {
        let mut map: BTreeMap<(String, u32, Protocol), ReportRow> = self
            .rows
            .drain(..)
            .map(|r| ((r.dataset.clone(), r.threshold_days, r.protocol), r))
            .collect();
        for r in rows {
            map.insert((r.dataset.clone(), r.threshold_days, r.protocol), r);
        }
        self.rows = map.into_values().collect();
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn protocol_rows(&self, protocol: Protocol) -> Vec<ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.protocol == protocol)
            .cloned()
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every stored triple must be recomputable from its counts, and the
    /// bad flag must follow the triple.
    pub fn check_invariants(&self) -> Result<()> {
        for r in &self.rows {
            if metrics(&r.counts) != r.metrics || r.bad != r.metrics.is_bad() {
                return Err(Error::SchemaMismatch(format!(
                    "row {} is inconsistent with its confusion counts",
                    r.artifact_name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub csv: String,
    pub medians_csv: String,
    pub text: String,
}

fn pct(x: f64) -> String {
    format!("{:.0}", x * 100.0)
}

fn cell(x: f64, bad: bool) -> String {
    if bad {
        format!("{}*", pct(x))
    } else {
        pct(x)
    }
}

/// Median triple per (protocol, threshold) present in the report.
pub fn median_table(report: &EvalReport) -> Vec<(Protocol, u32, MetricTriple)> {
    let mut out = Vec::new();
    for protocol in [Protocol::CrossVal, Protocol::RoundRobin] {
        let rows = report.protocol_rows(protocol);
        let days: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.threshold_days).collect();
        for d in days {
            let spec = ThresholdSpec::new(d).expect("rows carry valid thresholds");
            if let Ok(m) = medians(&rows, spec) {
                out.push((protocol, d, m));
            }
        }
    }
    out
}

/// CSV tables plus a side-by-side text table; bad cells carry a `*`.
/// `header` lines are emitted as `#` comments at the top of every output.
pub fn render_report(report: &EvalReport, header: &[String]) -> RenderedReport {
    let comment: String = header.iter().map(|h| format!("# {h}\n")).collect();

    let mut csv = comment.clone();
    csv.push_str(
        "dataset,days,protocol,prec,recall,pf,tp,fp,tn,fn,bad,degenerate,undefined,features,tree\n",
    );
    for r in report.rows() {
        let m = &r.metrics;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.threshold_days,
            r.protocol,
            m.prec,
            m.recall,
            m.pf,
            r.counts.tp,
            r.counts.fp,
            r.counts.tn,
            r.counts.fn_,
            r.bad,
            r.degenerate,
            m.any_undefined(),
            r.selected.join(";"),
            if r.degenerate {
                String::new()
            } else {
                format!("trees/{}.txt", r.artifact_name())
            },
        );
    }

    let medians_rows = median_table(report);
    let mut medians_csv = comment.clone();
    medians_csv.push_str("protocol,days,prec,recall,pf,bad\n");
    for (p, d, m) in &medians_rows {
        let _ = writeln!(
            medians_csv,
            "{p},{d},{},{},{},{}",
            m.prec,
            m.recall,
            m.pf,
            m.is_bad()
        );
    }

    let mut text = comment;
    let present: Vec<Protocol> = [Protocol::CrossVal, Protocol::RoundRobin]
        .into_iter()
        .filter(|p| report.rows().iter().any(|r| r.protocol == *p))
        .collect();
    for p in [Protocol::CrossVal, Protocol::RoundRobin] {
        if !present.contains(&p) {
            let _ = writeln!(text, "(no {p} rows; section omitted)");
        }
    }
    if !present.is_empty() {
        let _ = write!(text, "{:<16}{:>5}", "dataset", "days");
        for p in &present {
            let _ = write!(
                text,
                " | {:<11}{:>6}{:>6}{:>6}",
                p.as_str(),
                "prec",
                "rec",
                "pf"
            );
        }
        text.push('\n');
        let mut keys: Vec<(String, u32)> = report
            .rows()
            .iter()
            .map(|r| (r.dataset.clone(), r.threshold_days))
            .collect();
        keys.dedup();
        for (ds, d) in keys {
            let _ = write!(text, "{ds:<16}{d:>5}");
            for p in &present {
                match report
                    .rows()
                    .iter()
                    .find(|r| r.dataset == ds && r.threshold_days == d && r.protocol == *p)
                {
                    Some(r) => {
                        let m = &r.metrics;
                        let _ = write!(
                            text,
                            " | {:<11}{:>6}{:>6}{:>6}",
                            "",
                            cell(m.prec, m.prec < BAD_LIMIT),
                            cell(m.recall, m.recall < BAD_LIMIT),
                            cell(m.pf, m.pf > BAD_LIMIT)
                        );
                    }
                    None => {
                        let _ = write!(text, " | {:<11}{:>6}{:>6}{:>6}", "", "-", "-", "-");
                    }
                }
            }
            text.push('\n');
        }
        text.push_str("\nmedians (pooled per-project metrics, % ; * = bad)\n");
        let _ = writeln!(
            text,
            "{:<12}{:>5}{:>6}{:>6}{:>6}",
            "protocol", "days", "prec", "rec", "pf"
        );
        for (p, d, m) in &medians_rows {
            let _ = writeln!(
                text,
                "{:<12}{:>5}{:>6}{:>6}{:>6}",
                p.as_str(),
                d,
                cell(m.prec, m.prec < BAD_LIMIT),
                cell(m.recall, m.recall < BAD_LIMIT),
                cell(m.pf, m.pf > BAD_LIMIT)
            );
        }
    }

    RenderedReport {
        csv,
        medians_csv,
        text,
    }
}

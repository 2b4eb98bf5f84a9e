//! Correlation-based feature subset selection.
//!
//! Each feature is MDL-discretized against the class, correlations are
//! measured with symmetrical uncertainty, and subsets are scored with
//!
//! ```text
//! merit = k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff))
//! ```
//!
//! A best-first forward search explores subsets, halting once five
//! consecutive expansions fail to raise the best merit seen.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretize::{apply_cuts, entropy_of_counts, mdl_discretize, CutPoints};
use crate::error::{Error, Result};
use crate::tabular::Dataset;

/// Consecutive non-improving expansions tolerated before the search halts.
pub const STALE_LIMIT: usize = 5;
/// A merit must exceed the best so far by more than this to count as an
/// improvement; smaller differences are rounding noise.
pub const MERIT_EPS: f64 = 1e-12;

/// `2 * (H(x) + H(y) - H(x,y)) / (H(x) + H(y))`, or 0 when both entropies are 0.
pub fn symmetrical_uncertainty(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Empty("discrete sequence"));
    }
    let hx = entropy_of_counts(&histogram(x.iter().copied()));
    let hy = entropy_of_counts(&histogram(y.iter().copied()));
    let denom = hx + hy;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let hxy = entropy_of_counts(&histogram(x.iter().copied().zip(y.iter().copied())));
    Ok((2.0 * (denom - hxy) / denom).clamp(0.0, 1.0))
}

fn histogram<T: std::hash::Hash + Eq>(items: impl Iterator<Item = T>) -> Vec<usize> {
    let mut counts: HashMap<T, usize> = HashMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    let mut v: Vec<usize> = counts.into_values().collect();
    // fixed summation order keeps entropies bit-identical across runs
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    feature_feature: Vec<Vec<f64>>,
    feature_class: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_parts(
        names: Vec<String>,
        feature_feature: Vec<Vec<f64>>,
        feature_class: Vec<f64>,
    ) -> Result<Self> {
        let k = names.len();
        if feature_class.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: feature_class.len(),
            });
        }
        if feature_feature.len() != k || feature_feature.iter().any(|r| r.len() != k) {
            return Err(Error::SchemaMismatch(
                "feature-feature matrix must be square".into(),
            ));
        }
        Ok(CorrelationMatrix {
            names,
            feature_feature,
            feature_class,
        })
    }

    /// Discretizes every feature against the class and measures all
    /// pairwise correlations once.
    pub fn build(dataset: &Dataset) -> Result<(Self, Vec<CutPoints>)> {
        let labels = dataset.labels();
        let class: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        let mut cuts = Vec::with_capacity(dataset.columns().len());
        let mut binned = Vec::with_capacity(dataset.columns().len());
        for col in dataset.columns() {
            let c = mdl_discretize(col.name(), col.values(), labels)?;
            binned.push(apply_cuts(col.values(), &c));
            cuts.push(c);
        }
        let k = binned.len();
        let mut feature_class = Vec::with_capacity(k);
        for b in &binned {
            feature_class.push(symmetrical_uncertainty(b, &class)?);
        }
        let mut ff = vec![vec![1.0; k]; k];
        for i in 0..k {
            for j in (i + 1)..k {
                let r = symmetrical_uncertainty(&binned[i], &binned[j])?;
                ff[i][j] = r;
                ff[j][i] = r;
            }
        }
        let names = dataset
            .feature_names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        Ok((
            CorrelationMatrix::from_parts(names, ff, feature_class)?,
            cuts,
        ))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn feature_class(&self) -> &[f64] {
        &self.feature_class
    }

    pub fn feature_feature(&self, i: usize, j: usize) -> f64 {
        self.feature_feature[i][j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Merit of the subset of column indices. Indices are used in the order
    /// given; callers that need bit-identical results pass them sorted.
    pub fn merit_of(&self, subset: &[usize]) -> f64 {
        let k = subset.len();
        if k == 0 {
            return 0.0;
        }
        let kf = k as f64;
        let mean_cf = subset.iter().map(|&i| self.feature_class[i]).sum::<f64>() / kf;
        let mut ff_sum = 0.0;
        let mut pairs = 0usize;
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                ff_sum += self.feature_feature[i][j];
                pairs += 1;
            }
        }
        let mean_ff = if pairs == 0 {
            0.0
        } else {
            ff_sum / pairs as f64
        };
        kf * mean_cf / (kf + kf * (kf - 1.0) * mean_ff).sqrt()
    }

    /// CSV with a header of feature names plus `class`; one row per feature.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["feature".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("class".into());
        w.write_record(&header)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend(self.feature_feature[i].iter().map(|r| r.to_string()));
            rec.push(self.feature_class[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Merit of a named subset.
pub fn merit(subset: &[&str], corr: &CorrelationMatrix) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Empty("feature subset"));
    }
    let mut idx = subset
        .iter()
        .map(|n| {
            corr.index_of(n)
                .ok_or_else(|| Error::UnknownColumn(n.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(corr.merit_of(&idx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset: Vec<String>,
    pub merit: f64,
}

/// Open-list entry. Ordered by merit, then by the lexicographically smaller
/// sorted name list.
struct Candidate {
    merit: f64,
    key: Vec<String>,
    members: Vec<usize>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.merit
            .total_cmp(&other.merit)
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl Candidate {
    fn new(members: Vec<usize>, corr: &CorrelationMatrix) -> Self {
        let mut key: Vec<String> = members.iter().map(|&i| corr.names[i].clone()).collect();
        key.sort();
        Candidate {
            merit: corr.merit_of(&members),
            key,
            members,
        }
    }

    fn beats(&self, other: &Candidate) -> bool {
        self > other
    }
}

/// Best-first forward search over the correlation matrix.
pub fn best_first(corr: &CorrelationMatrix) -> Result<SubsetScore> {
    let k = corr.names.len();
    if k == 0 {
        return Err(Error::Empty("feature set"));
    }
    let mut open = BinaryHeap::new();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut best: Option<Candidate> = None;
    for i in 0..k {
        let c = Candidate::new(vec![i], corr);
        visited.insert(c.members.clone());
        if best.as_ref().is_none_or(|b| c.beats(b)) {
            best = Some(Candidate::new(vec![i], corr));
        }
        open.push(c);
    }
    let mut best = best.expect("k > 0");
    let mut stale = 0;
    while let Some(node) = open.pop() {
        let mut improved = false;
        let members: BTreeSet<usize> = node.members.iter().copied().collect();
        for f in (0..k).filter(|f| !members.contains(f)) {
            let mut child: Vec<usize> = members.iter().copied().collect();
            child.push(f);
            child.sort_unstable();
            if !visited.insert(child.clone()) {
                continue;
            }
            let c = Candidate::new(child, corr);
            if c.merit > best.merit + MERIT_EPS {
                best = Candidate::new(c.members.clone(), corr);
                improved = true;
            }
            open.push(c);
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= STALE_LIMIT {
                break;
            }
        }
    }

    if best.merit <= 0.0 {
        // nothing informative: keep the single strongest (then first-named) feature
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            corr.feature_class[b]
                .total_cmp(&corr.feature_class[a])
                .then_with(|| corr.names[a].cmp(&corr.names[b]))
        });
        best = Candidate::new(vec![order[0]], corr);
    }
    Ok(SubsetScore {
        subset: best
            .members
            .iter()
            .map(|&i| corr.names[i].clone())
            .collect(),
        merit: best.merit,
    })
}

/// Full selection: discretize, correlate, search. Names come back in the
/// dataset's column order.
pub fn select(dataset: &Dataset) -> Result<SubsetScore> {
    Ok(select_with_details(dataset)?.0)
}

pub fn select_with_details(
    dataset: &Dataset,
) -> Result<(SubsetScore, CorrelationMatrix, Vec<CutPoints>)> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if dataset.columns().is_empty() {
        return Err(Error::Empty("feature set"));
    }
    let (corr, cuts) = CorrelationMatrix::build(dataset)?;
    let score = best_first(&corr)?;
    Ok((score, corr, cuts))
}

//! Seeded data generators and brute-force oracles shared by the integration
//! and acceptance suites. Oracles here deliberately avoid the library's
//! scoring code paths: entropies, gains and window counts are recomputed from
//! scratch.

#![allow(dead_code)]

use issue_lifetime::cfs::CorrelationMatrix;
use issue_lifetime::ingest::{CommitEvent, IssueFeatures, ProjectDump, RawIssue, SECONDS_PER_DAY};
use issue_lifetime::tabular::{Dataset, FeatureColumn, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dataset(cols: Vec<(String, Vec<f64>)>, labels: Vec<Label>, project: &str) -> Dataset {
    let n = labels.len();
    Dataset::new(
        cols.into_iter()
            .map(|(n, v)| FeatureColumn::new(n, v).unwrap())
            .collect(),
        labels,
        vec![project.to_string(); n],
    )
    .unwrap()
}

fn label(positive: bool) -> Label {
    if positive {
        Label::Le
    } else {
        Label::Gt
    }
}

/// A mix of informative, redundant and noise columns driven by one latent
/// score. Column roles and strengths vary with the seed.
pub fn mixed_signal(seed: u64, rows: usize, features: usize) -> Dataset {
    let mut r = rng(seed);
    let latent: Vec<f64> = (0..rows).map(|_| r.gen_range(0.0..1.0)).collect();
    let second: Vec<f64> = (0..rows).map(|_| r.gen_range(0.0..1.0)).collect();
    let labels: Vec<Label> = latent
        .iter()
        .zip(&second)
        .map(|(&a, &b)| label(0.7 * a + 0.3 * b + r.gen_range(-0.15..0.15) > 0.5))
        .collect();
    let mut cols = Vec::new();
    for f in 0..features {
        let kind = r.gen_range(0..4);
        let noise = r.gen_range(0.0..0.6);
        let scale = r.gen_range(5.0..200.0);
        let values = (0..rows)
            .map(|i| {
                let base = match kind {
                    0 => latent[i],
                    1 => second[i],
                    2 => 0.5 * latent[i] + 0.5 * second[i],
                    _ => r.gen_range(0.0..1.0),
                };
                ((base + r.gen_range(-noise..=noise)) * scale)
                    .round()
                    .max(0.0)
            })
            .collect();
        cols.push((format!("f{f}"), values));
    }
    dataset(cols, labels, "synthetic")
}

/// Small integer-valued dataset with random labels, for exhaustive checks.
pub fn small_random(seed: u64, rows: usize, features: usize, value_range: u32) -> Dataset {
    let mut r = rng(seed);
    let bias = r.gen_range(0.2..0.8);
    let labels: Vec<Label> = (0..rows).map(|_| label(r.gen_bool(bias))).collect();
    let cols = (0..features)
        .map(|f| {
            let signal = r.gen_range(0.0..1.0);
            let values = labels
                .iter()
                .map(|l| {
                    let v = r.gen_range(0..value_range) as f64;
                    if r.gen_bool(signal) && l.is_positive() {
                        v + value_range as f64 / 2.0
                    } else {
                        v
                    }
                })
                .collect();
            (format!("x{f}"), values)
        })
        .collect();
    dataset(cols, labels, "small")
}

/// Lifetimes driven by project load, in the shape of issue-tracker data:
/// busy projects with many recently closed issues close issues faster.
pub fn issue_like(seed: u64, rows: usize, project: &str) -> Dataset {
    let mut r = rng(seed);
    let mut cols: Vec<Vec<f64>> = (0..7).map(|_| Vec::with_capacity(rows)).collect();
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let activity: f64 = r.gen_range(0.0..1.0);
        let body = (r.gen_range(0.0f64..1.0).powi(2) * 400.0).round();
        let created = (activity * 300.0 + r.gen_range(0.0..60.0)).round();
        let closed = (created * r.gen_range(0.3..0.9)).round();
        let commits = (activity * 900.0 + r.gen_range(0.0..200.0)).round();
        let by_creator = r.gen_range(0..20) as f64;
        let by_creator_closed = (by_creator * r.gen_range(0.0..1.0)).round();
        let creator_commits = (by_creator * r.gen_range(0.0..5.0)).round();
        let score = 0.6 * (closed / 250.0) + 0.2 * (1.0 - body / 400.0) + r.gen_range(-0.25..0.25);
        labels.push(label(score > 0.45));
        for (c, v) in [
            body,
            creator_commits,
            commits,
            by_creator,
            by_creator_closed,
            created,
            closed,
        ]
        .into_iter()
        .enumerate()
        {
            cols[c].push(v);
        }
    }
    let names = issue_lifetime::ingest::FEATURE_NAMES;
    dataset(
        names.iter().map(|n| n.to_string()).zip(cols).collect(),
        labels,
        project,
    )
}

/// Positives have `signal` in 0..=40, negatives in 60..=100, with noise
/// columns alongside.
pub fn separable(seed: u64, rows: usize, project: &str) -> Dataset {
    let mut r = rng(seed);
    let labels: Vec<Label> = (0..rows).map(|i| label(i % 2 == 0)).collect();
    let signal = labels
        .iter()
        .map(|l| {
            if l.is_positive() {
                r.gen_range(0..=40) as f64
            } else {
                r.gen_range(60..=100) as f64
            }
        })
        .collect();
    let noise_a = (0..rows).map(|_| r.gen_range(0..50) as f64).collect();
    let noise_b = (0..rows).map(|_| r.gen_range(0..1000) as f64).collect();
    dataset(
        vec![
            ("noiseA".into(), noise_a),
            ("noiseB".into(), noise_b),
            ("signal".into(), signal),
        ],
        labels,
        project,
    )
}

// ---------------------------------------------------------------------------
// entropy arithmetic, written out independently of the library

pub fn h2(pos: usize, neg: usize) -> f64 {
    let n = (pos + neg) as f64;
    let mut h = 0.0;
    for c in [pos, neg] {
        if c > 0 {
            let p = c as f64 / n;
            h += -p * p.ln() / std::f64::consts::LN_2;
        }
    }
    h
}

fn counts_where(values: &[f64], labels: &[Label], pred: impl Fn(f64) -> bool) -> (usize, usize) {
    let mut pos = 0;
    let mut neg = 0;
    for (v, l) in values.iter().zip(labels) {
        if pred(*v) {
            if l.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    (pos, neg)
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut d = values.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d
}

/// Brute-force minimum weighted child entropy over every midpoint between
/// distinct values. Returns `(cut, weighted_entropy, gain, mdlp_accepts)`;
/// ties go to the smaller cut.
pub fn oracle_mdl_first_cut(values: &[f64], labels: &[Label]) -> Option<(f64, f64, f64, bool)> {
    let d = distinct_sorted(values);
    let n = values.len() as f64;
    let (tp, tn) = counts_where(values, labels, |_| true);
    let parent = h2(tp, tn);
    type Counts = (usize, usize);
    let mut best: Option<(f64, f64, Counts, Counts)> = None;
    for w in d.windows(2) {
        let cut = (w[0] + w[1]) / 2.0;
        let l = counts_where(values, labels, |v| v < cut);
        let r = counts_where(values, labels, |v| v >= cut);
        let e = ((l.0 + l.1) as f64 * h2(l.0, l.1) + (r.0 + r.1) as f64 * h2(r.0, r.1)) / n;
        if best.is_none_or(|(_, be, _, _)| e < be - 1e-12) {
            best = Some((cut, e, l, r));
        }
    }
    let (cut, e, l, r) = best?;
    let gain = parent - e;
    let k = |p: usize, q: usize| ((p > 0) as u32 + (q > 0) as u32) as f64;
    let delta = (3f64.powf(k(tp, tn)) - 2.0).log2()
        - (k(tp, tn) * parent - k(l.0, l.1) * h2(l.0, l.1) - k(r.0, r.1) * h2(r.0, r.1));
    let accepts = gain > ((n - 1.0).log2() + delta) / n;
    Some((cut, e, gain, accepts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub feature: String,
    pub threshold: f64,
    pub gain: f64,
    pub gain_ratio: f64,
}

/// Scans every (feature, midpoint) split whose children both hold at least
/// `m` rows and picks the best by gain ratio, then gain, then feature name,
/// then threshold. `None` when the root would be a leaf.
pub fn oracle_root_split(data: &Dataset, m: usize) -> Option<OracleSplit> {
    let labels = data.labels();
    let (tp, tn) = counts_where(data.columns()[0].values(), labels, |_| true);
    if tp == 0 || tn == 0 || labels.len() < 2 * m {
        return None;
    }
    let n = labels.len() as f64;
    let parent = h2(tp, tn);
    let mut best: Option<OracleSplit> = None;
    for col in data.columns() {
        let values = col.values();
        for w in distinct_sorted(values).windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l = counts_where(values, labels, |v| v <= t);
            let r = counts_where(values, labels, |v| v > t);
            let (nl, nr) = (l.0 + l.1, r.0 + r.1);
            if nl < m || nr < m {
                continue;
            }
            let gain = parent - (nl as f64 * h2(l.0, l.1) + nr as f64 * h2(r.0, r.1)) / n;
            let gain_ratio = gain / h2(nl, nr);
            let cand = OracleSplit {
                feature: col.name().to_string(),
                threshold: t,
                gain,
                gain_ratio,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    if (cand.gain_ratio - b.gain_ratio).abs() > 1e-12 {
                        cand.gain_ratio > b.gain_ratio
                    } else if (cand.gain - b.gain).abs() > 1e-12 {
                        cand.gain > b.gain
                    } else {
                        (cand.feature.as_str(), cand.threshold) < (b.feature.as_str(), b.threshold)
                    }
                }
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.filter(|b| b.gain > 1e-12)
}

/// Exhaustive maximum merit over all non-empty subsets.
pub fn oracle_best_merit(corr: &CorrelationMatrix) -> (Vec<usize>, f64) {
    let k = corr.names().len();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for mask in 1u32..(1 << k) {
        let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let m = corr.merit_of(&subset);
        if m > best.1 {
            best = (subset, m);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// synthetic issue trackers

pub const DAY: i64 = SECONDS_PER_DAY;

/// Random tracker history over roughly two years: issues by a small pool of
/// creators, some never closed, and commits by an overlapping author pool.
pub fn synthetic_dump(seed: u64, issues: usize, commits: usize) -> ProjectDump {
    let mut r = rng(seed);
    let people: Vec<String> = (0..12).map(|i| format!("dev{i}")).collect();
    let start = 1_500_000_000i64;
    let span = 730 * DAY;
    let mut raw = Vec::with_capacity(issues);
    for i in 0..issues {
        // some issues share an opening instant with another issue
        let opened = if i > 0 && r.gen_bool(0.05) {
            raw.iter()
                .map(|x: &RawIssue| x.opened_at.unwrap())
                .nth(r.gen_range(0..i))
                .unwrap()
        } else {
            start + r.gen_range(0..span)
        };
        let closed = if r.gen_bool(0.85) {
            Some(opened + (r.gen_range(0.0f64..1.0).powi(3) * 400.0 * DAY as f64) as i64)
        } else {
            None
        };
        let words = r.gen_range(0..60);
        let body: Vec<String> = (0..words).map(|w| format!("w{w}")).collect();
        raw.push(RawIssue {
            id: format!("P-{i}"),
            creator: Some(people[r.gen_range(0..people.len())].clone()),
            opened_at: Some(opened),
            closed_at: closed,
            title: "title here".into(),
            body: body.join(" "),
        });
    }
    let commits = (0..commits)
        .map(|_| CommitEvent {
            project: "synthetic".into(),
            author: people[r.gen_range(0..people.len())].clone(),
            committed_at: start - 100 * DAY + r.gen_range(0..span + 100 * DAY),
        })
        .collect();
    ProjectDump {
        project: "synthetic".into(),
        issues: raw,
        commits,
        diagnostics: vec![],
    }
}

/// O(issues x events) recomputation of the window features using only
/// events strictly before the issue's creation.
pub fn oracle_features(dump: &ProjectDump, issue: &RawIssue, body_len: u64) -> IssueFeatures {
    let t = issue.opened_at.unwrap();
    let lo = t - 90 * DAY;
    let creator = issue.creator.as_deref().unwrap();
    let in_window = |x: i64| x >= lo && x < t;
    let mut f = IssueFeatures {
        issue_cleaned_body_len: body_len,
        ..IssueFeatures::default()
    };
    for c in &dump.commits {
        if in_window(c.committed_at) {
            f.n_commits_in_project += 1;
            if c.author == creator {
                f.n_commits_by_creator += 1;
            }
        }
    }
    for other in &dump.issues {
        let o = other.opened_at.unwrap();
        if !in_window(o) {
            continue;
        }
        let closed_before = other.closed_at.is_some_and(|c| c < t);
        f.n_issues_created_in_project += 1;
        if closed_before {
            f.n_issues_created_in_project_closed += 1;
        }
        if other.creator.as_deref() == Some(creator) {
            f.n_issues_by_creator += 1;
            if closed_before {
                f.n_issues_by_creator_closed += 1;
            }
        }
    }
    f
}

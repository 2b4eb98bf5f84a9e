//! Supervised MDL discretization (Fayyad & Irani) for binary classes.
//!
//! Cuts are placed at midpoints between adjacent distinct values. A value
//! `v` falls in bin `i` where `i` is the number of cuts `<= v`, so a value
//! equal to a cut goes to the right-hand bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::Label;

/// Two entropies within this distance are treated as tied.
pub(crate) const TIE_EPS: f64 = 1e-12;

/// Base-2 Shannon entropy in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Entropy of an arbitrary count histogram; zero counts contribute nothing.
pub fn entropy_of_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 && c < total {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    h
}

/// Binary entropy from `[positives, negatives]` counts.
pub(crate) fn binary_entropy(counts: [usize; 2]) -> f64 {
    entropy_of_counts(&counts)
}

pub fn entropy(labels: &[Label]) -> Result<EntropyValue> {
    if labels.is_empty() {
        return Err(Error::Empty("label sequence"));
    }
    Ok(EntropyValue(binary_entropy(tally(labels))))
}

fn tally(labels: &[Label]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for l in labels {
        c[l.index()] += 1;
    }
    c
}

fn classes_present(c: [usize; 2]) -> usize {
    c.iter().filter(|&&x| x > 0).count()
}

/// Outcome of evaluating one binary cut against the MDLP stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdlpTest {
    pub gain: f64,
    pub threshold: f64,
}

impl MdlpTest {
    pub fn accepted(&self) -> bool {
        self.gain > self.threshold
    }
}

/// Information gain of splitting `parent` into `left`/`right` and the
/// minimum gain the MDL principle requires to accept that split.
pub fn mdlp_test(left: [usize; 2], right: [usize; 2]) -> MdlpTest {
    let parent = [left[0] + right[0], left[1] + right[1]];
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    let (h, hl, hr) = (
        binary_entropy(parent),
        binary_entropy(left),
        binary_entropy(right),
    );
    let gain = h - (nl * hl + nr * hr) / n;
    let (k, k1, k2) = (
        classes_present(parent) as f64,
        classes_present(left) as f64,
        classes_present(right) as f64,
    );
    let delta = (3f64.powf(k) - 2.0).log2() - (k * h - k1 * hl - k2 * hr);
    let threshold = ((n - 1.0).log2() + delta) / n;
    MdlpTest { gain, threshold }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPoints {
    pub feature: String,
    cuts: Vec<f64>,
}

impl CutPoints {
    pub fn new(feature: impl Into<String>, cuts: Vec<f64>) -> Result<Self> {
        if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::SchemaMismatch(
                "cut points must be finite and strictly increasing".into(),
            ));
        }
        Ok(CutPoints {
            feature: feature.into(),
            cuts,
        })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn bins(&self) -> usize {
        self.cuts.len() + 1
    }
}

/// One run of equal values with its class histogram.
#[derive(Debug, Clone, Copy)]
struct Group {
    value: f64,
    counts: [usize; 2],
}

fn groups(values: &[f64], labels: &[Label]) -> Vec<Group> {
    let mut pairs: Vec<(f64, Label)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Group> = Vec::new();
    for (v, l) in pairs {
        match out.last_mut() {
            Some(g) if g.value == v => g.counts[l.index()] += 1,
            _ => {
                let mut counts = [0; 2];
                counts[l.index()] = 1;
                out.push(Group { value: v, counts });
            }
        }
    }
    out
}

fn is_pure_single(c: [usize; 2]) -> Option<usize> {
    match c {
        [_, 0] => Some(0),
        [0, _] => Some(1),
        _ => None,
    }
}

/// A boundary between adjacent groups is a candidate unless both groups are
/// pure in the same class.
fn is_boundary(a: &Group, b: &Group) -> bool {
    match (is_pure_single(a.counts), is_pure_single(b.counts)) {
        (Some(x), Some(y)) => x != y,
        _ => true,
    }
}

fn add(a: [usize; 2], b: [usize; 2]) -> [usize; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: [usize; 2], b: [usize; 2]) -> [usize; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Best boundary within `groups`: index `i` means the cut lies between
/// `groups[i]` and `groups[i + 1]`.
fn best_boundary(groups: &[Group]) -> Option<(usize, [usize; 2], [usize; 2])> {
    let total = groups.iter().fold([0, 0], |acc, g| add(acc, g.counts));
    let n = (total[0] + total[1]) as f64;
    let mut left = [0, 0];
    let mut best: Option<(usize, f64, [usize; 2], [usize; 2])> = None;
    for i in 0..groups.len().saturating_sub(1) {
        left = add(left, groups[i].counts);
        if !is_boundary(&groups[i], &groups[i + 1]) {
            continue;
        }
        let right = sub(total, left);
        let nl = (left[0] + left[1]) as f64;
        let nr = (right[0] + right[1]) as f64;
        let e = (nl * binary_entropy(left) + nr * binary_entropy(right)) / n;
        // strictly better only; earlier (smaller) thresholds win ties
        if best.is_none_or(|(_, be, _, _)| e < be - TIE_EPS) {
            best = Some((i, e, left, right));
        }
    }
    best.map(|(i, _, l, r)| (i, l, r))
}

fn split_recursive(groups: &[Group], cuts: &mut Vec<f64>) {
    if groups.len() < 2 {
        return;
    }
    let Some((i, left, right)) = best_boundary(groups) else {
        return;
    };
    if !mdlp_test(left, right).accepted() {
        return;
    }
    cuts.push(midpoint(groups[i].value, groups[i + 1].value));
    split_recursive(&groups[..=i], cuts);
    split_recursive(&groups[i + 1..], cuts);
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

/// Recursive minimum-entropy binary partitioning with the MDLP acceptance
/// test. Returns possibly empty cut points.
pub fn mdl_discretize(feature: &str, values: &[f64], labels: &[Label]) -> Result<CutPoints> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            found: labels.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::Empty("feature column"));
    }
    let groups = groups(values, labels);
    let mut cuts = Vec::new();
    split_recursive(&groups, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    CutPoints::new(feature, cuts)
}

/// The first (top-level) cut the discretizer would consider, with its MDLP
/// test, whether or not it is accepted.
pub fn first_candidate(values: &[f64], labels: &[Label]) -> Option<(f64, MdlpTest)> {
    let groups = groups(values, labels);
    let (i, left, right) = best_boundary(&groups)?;
    Some((
        midpoint(groups[i].value, groups[i + 1].value),
        mdlp_test(left, right),
    ))
}

pub fn apply_cuts(values: &[f64], cuts: &CutPoints) -> Vec<usize> {
    values
        .iter()
        .map(|&v| cuts.cuts.partition_point(|&c| c <= v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Gt as N, Le as P};

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[P, P, P, P]).unwrap().bits(), 0.0);
        assert_eq!(entropy(&[P, N]).unwrap().bits(), 1.0);
        let expected =
            -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((entropy(&[P, P, N]).unwrap().bits() - expected).abs() < 1e-15);
        assert!((expected - 0.9183).abs() < 1e-4);
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn constant_feature_has_no_cuts() {
        let cuts = mdl_discretize("f", &[3.0; 6], &[P, N, P, N, P, N]).unwrap();
        assert!(cuts.cuts().is_empty());
    }

    #[test]
    fn clean_two_class_split() {
        // gain 1.0 vs threshold (log2 3 + log2 7 - 2) / 4 ~= 0.598
        let cuts = mdl_discretize("f", &[1.0, 2.0, 3.0, 4.0], &[N, N, P, P]).unwrap();
        assert_eq!(cuts.cuts(), &[2.5]);
        let t = mdlp_test([0, 2], [2, 0]);
        let expected = (3f64.log2() + (7f64.log2() - 2.0)) / 4.0;
        assert!((t.threshold - expected).abs() < 1e-12);
        assert!(t.accepted());
    }

    #[test]
    fn interleaved_labels_have_no_cuts() {
        let values: Vec<f64> = (1..=8).map(f64::from).collect();
        let labels = [P, N, P, N, P, N, P, N];
        assert!(mdl_discretize("f", &values, &labels)
            .unwrap()
            .cuts()
            .is_empty());
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            mdl_discretize("f", &[1.0], &[P, N]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn apply_cuts_boundary_rule() {
        let none = CutPoints::new("f", vec![]).unwrap();
        assert_eq!(apply_cuts(&[1.0, -4.0, 99.0], &none), vec![0, 0, 0]);
        let one = CutPoints::new("f", vec![2.5]).unwrap();
        assert_eq!(apply_cuts(&[1.0, 3.0], &one), vec![0, 1]);
        let two = CutPoints::new("f", vec![2.5, 7.5]).unwrap();
        assert_eq!(apply_cuts(&[2.5], &two), vec![1]);
        assert_eq!(apply_cuts(&[7.5, 100.0], &two), vec![2, 2]);
    }

    #[test]
    fn cut_points_must_increase() {
        assert!(CutPoints::new("f", vec![2.0, 2.0]).is_err());
        assert!(CutPoints::new("f", vec![3.0, 1.0]).is_err());
    }

    #[test]
    fn mixed_groups_are_boundaries() {
        // 1:{P} 2:{P,N} 3:{N}
        let g = groups(&[1.0, 2.0, 2.0, 3.0], &[P, P, N, N]);
        assert_eq!(g.len(), 3);
        assert!(is_boundary(&g[0], &g[1]));
        let same = groups(&[1.0, 2.0], &[P, P]);
        assert!(!is_boundary(&same[0], &same[1]));
    }
}

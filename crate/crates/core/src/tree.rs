//! Binary-threshold decision trees grown by gain ratio, stopped early by a
//! minimum partition size `M = max(2, floor(n / 25))`.
//!
//! There is no post-pruning: the stopping rule is the only pruning.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discretize::{binary_entropy, midpoint, TIE_EPS};
use crate::error::{Error, Result};
use crate::tabular::{Dataset, Label};

/// Divisor in the minimum-partition rule.
pub const PARTITION_DIVISOR: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRule {
    m: usize,
}

impl StoppingRule {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config(
                "minimum partition size must be positive".into(),
            ));
        }
        Ok(StoppingRule { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

pub fn min_partition(n: usize) -> Result<StoppingRule> {
    if n == 0 {
        return Err(Error::Empty("training set"));
    }
    Ok(StoppingRule {
        m: (n / PARTITION_DIVISOR).max(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: Label,
        support: usize,
        purity: f64,
    },
    Split {
        feature: String,
        threshold: f64,
        /// `value <= threshold`
        left: Box<Node>,
        /// `value > threshold`
        right: Box<Node>,
    },
}

impl Node {
    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Same shape, tests and leaf labels; ignores leaf statistics.
    pub fn same_structure(&self, other: &Node) -> bool {
        match (self, other) {
            (Node::Leaf { label: a, .. }, Node::Leaf { label: b, .. }) => a == b,
            (
                Node::Split {
                    feature: fa,
                    threshold: ta,
                    left: la,
                    right: ra,
                },
                Node::Split {
                    feature: fb,
                    threshold: tb,
                    left: lb,
                    right: rb,
                },
            ) => fa == fb && ta == tb && la.same_structure(lb) && ra.same_structure(rb),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub rule: StoppingRule,
}

impl DecisionTree {
    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    /// Descends by threshold tests; `value <= threshold` goes left.
    pub fn predict<F>(&self, lookup: F) -> Result<Label>
    where
        F: Fn(&str) -> Option<f64>,
    {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return Ok(*label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v =
                        lookup(feature).ok_or_else(|| Error::MissingFeature(feature.clone()))?;
                    node = if v <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_map(&self, row: &HashMap<String, f64>) -> Result<Label> {
        self.predict(|f| row.get(f).copied())
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<Label>> {
        let index: HashMap<&str, usize> = dataset
            .feature_names()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, i))
            .collect();
        (0..dataset.len())
            .map(|row| self.predict(|f| index.get(f).map(|&c| dataset.value(row, c))))
            .collect()
    }

    pub fn render(&self) -> String {
        render(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A scored binary split candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChoice {
    pub feature: String,
    pub threshold: f64,
    pub gain: f64,
    pub gain_ratio: f64,
    pub left_size: usize,
}

impl SplitChoice {
    /// Higher gain ratio, then higher raw gain, then feature name, then the
    /// smaller threshold.
    pub fn better_than(&self, other: &SplitChoice) -> bool {
        if (self.gain_ratio - other.gain_ratio).abs() > TIE_EPS {
            return self.gain_ratio > other.gain_ratio;
        }
        if (self.gain - other.gain).abs() > TIE_EPS {
            return self.gain > other.gain;
        }
        match self.feature.cmp(&other.feature) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.threshold < other.threshold,
        }
    }
}

/// Gain and gain ratio of splitting `[pos, neg]` counts into left/right.
pub fn split_scores(left: [usize; 2], right: [usize; 2]) -> (f64, f64) {
    let parent = [left[0] + right[0], left[1] + right[1]];
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    let gain =
        binary_entropy(parent) - (nl * binary_entropy(left) + nr * binary_entropy(right)) / n;
    let split_info = binary_entropy([left[0] + left[1], right[0] + right[1]]);
    let ratio = if split_info > 0.0 {
        gain / split_info
    } else {
        0.0
    };
    (gain, ratio)
}

struct Learner<'a> {
    dataset: &'a Dataset,
    /// Feature columns visited in name order so ties resolve by name.
    order: Vec<usize>,
    m: usize,
}

impl Learner<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &r in rows {
            c[self.dataset.labels()[r].index()] += 1;
        }
        c
    }

    fn leaf(counts: [usize; 2]) -> Node {
        let support = counts[0] + counts[1];
        // ties go to the negative class
        let label = if counts[0] > counts[1] {
            Label::Le
        } else {
            Label::Gt
        };
        let majority = counts[0].max(counts[1]);
        Node::Leaf {
            label,
            support,
            purity: majority as f64 / support as f64,
        }
    }

    fn best_split(&self, rows: &[usize], total: [usize; 2]) -> Option<(usize, SplitChoice)> {
        let n = rows.len();
        let mut best: Option<(usize, SplitChoice)> = None;
        let mut sorted = rows.to_vec();
        for &col in &self.order {
            let values = self.dataset.columns()[col].values();
            sorted.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let mut left = [0usize; 2];
            for i in 0..n - 1 {
                left[self.dataset.labels()[sorted[i]].index()] += 1;
                let (v, next) = (values[sorted[i]], values[sorted[i + 1]]);
                if v == next {
                    continue;
                }
                let nl = i + 1;
                if nl < self.m || n - nl < self.m {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let (gain, gain_ratio) = split_scores(left, right);
                let cand = SplitChoice {
                    feature: self.dataset.columns()[col].name().to_string(),
                    threshold: midpoint(v, next),
                    gain,
                    gain_ratio,
                    left_size: nl,
                };
                if best.as_ref().is_none_or(|(_, b)| cand.better_than(b)) {
                    best = Some((col, cand));
                }
            }
        }
        best
    }

    fn grow(&self, rows: Vec<usize>) -> Node {
        let counts = self.counts(&rows);
        if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * self.m {
            return Self::leaf(counts);
        }
        let Some((col, split)) = self.best_split(&rows, counts) else {
            return Self::leaf(counts);
        };
        if split.gain <= TIE_EPS {
            return Self::leaf(counts);
        }
        let values = self.dataset.columns()[col].values();
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| values[r] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(left)),
            right: Box::new(self.grow(right)),
        }
    }
}

pub fn learn(dataset: &Dataset, rule: StoppingRule) -> Result<DecisionTree> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if dataset.columns().is_empty() {
        return Err(Error::Empty("feature set"));
    }
    let mut order: Vec<usize> = (0..dataset.columns().len()).collect();
    order.sort_by(|&a, &b| dataset.columns()[a].name().cmp(dataset.columns()[b].name()));
    let learner = Learner {
        dataset,
        order,
        m: rule.m,
    };
    Ok(DecisionTree {
        root: learner.grow((0..dataset.len()).collect()),
        rule,
    })
}

/// The split `learn` would place at the root, if any.
pub fn root_split(dataset: &Dataset, rule: StoppingRule) -> Option<SplitChoice> {
    match learn(dataset, rule).ok()?.root {
        Node::Split {
            feature, threshold, ..
        } => {
            let col = dataset.feature_names().iter().position(|n| *n == feature)?;
            let values = dataset.columns()[col].values();
            let mut left = [0; 2];
            let mut right = [0; 2];
            for (r, &v) in values.iter().enumerate() {
                let l = dataset.labels()[r].index();
                if v <= threshold {
                    left[l] += 1;
                } else {
                    right[l] += 1;
                }
            }
            let (gain, gain_ratio) = split_scores(left, right);
            Some(SplitChoice {
                feature,
                threshold,
                gain,
                gain_ratio,
                left_size: left[0] + left[1],
            })
        }
        Node::Leaf { .. } => None,
    }
}

/// Shortest decimal form; integral values carry no decimal point.
pub fn format_threshold(t: f64) -> String {
    format!("{t}")
}

const INDENT: &str = "|   ";

/// Nested if-then-else text. A split contributes two sibling lines,
/// `feature <= t` and `feature > t`; a child leaf is appended to its line as
/// ` :label`. A lone root leaf renders as `:label`.
pub fn render(tree: &DecisionTree) -> String {
    let mut out = String::new();
    match &tree.root {
        Node::Leaf { label, .. } => {
            let _ = writeln!(out, ":{label}");
        }
        split => render_split(split, 0, &mut out),
    }
    out
}

fn render_split(node: &Node, depth: usize, out: &mut String) {
    let Node::Split {
        feature,
        threshold,
        left,
        right,
    } = node
    else {
        return;
    };
    let t = format_threshold(*threshold);
    for (op, child) in [("<=", left), (">", right)] {
        out.push_str(&INDENT.repeat(depth));
        let _ = write!(out, "{feature} {op} {t}");
        match child.as_ref() {
            Node::Leaf { label, .. } => {
                let _ = writeln!(out, " :{label}");
            }
            sub => {
                out.push('\n');
                render_split(sub, depth + 1, out);
            }
        }
    }
}

/// Number of lines `render` produces.
pub fn rendered_lines(tree: &DecisionTree) -> usize {
    match tree.root {
        Node::Leaf { .. } => 1,
        _ => tree.node_count() - 1,
    }
}

struct ParsedLine {
    depth: usize,
    feature: String,
    le: bool,
    threshold: f64,
    leaf: Option<Label>,
}

fn parse_line(no: usize, raw: &str) -> Result<ParsedLine> {
    let err = |reason: &str| Error::TreeParse {
        line: no,
        reason: reason.to_string(),
    };
    let mut rest = raw;
    let mut depth = 0;
    while let Some(r) = rest.strip_prefix(INDENT) {
        rest = r;
        depth += 1;
    }
    let (cond, leaf) = match rest.rsplit_once(" :") {
        Some((c, l)) => (
            c,
            Some(
                l.trim()
                    .parse::<Label>()
                    .map_err(|_| err("bad leaf label"))?,
            ),
        ),
        None => (rest, None),
    };
    let (feature, le, t) = if let Some((f, t)) = cond.split_once(" <= ") {
        (f, true, t)
    } else if let Some((f, t)) = cond.split_once(" > ") {
        (f, false, t)
    } else {
        return Err(err("expected `feature <= t` or `feature > t`"));
    };
    let threshold = t.trim().parse::<f64>().map_err(|_| err("bad threshold"))?;
    Ok(ParsedLine {
        depth,
        feature: feature.trim().to_string(),
        le,
        threshold,
        leaf,
    })
}

/// Inverse of [`render`]. Leaf statistics are not part of the text, so
/// parsed leaves carry `support = 0` and `purity = 0`.
pub fn parse_rendered(text: &str, rule: StoppingRule) -> Result<DecisionTree> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::TreeParse {
            line: 0,
            reason: "empty tree".into(),
        });
    }
    if let Some(label) = lines[0].trim().strip_prefix(':') {
        let label = label
            .trim()
            .parse::<Label>()
            .map_err(|_| Error::TreeParse {
                line: 1,
                reason: "bad leaf label".into(),
            })?;
        if lines.len() != 1 {
            return Err(Error::TreeParse {
                line: 2,
                reason: "trailing lines after root leaf".into(),
            });
        }
        return Ok(DecisionTree {
            root: parsed_leaf(label),
            rule,
        });
    }
    let parsed = lines
        .iter()
        .enumerate()
        .map(|(i, l)| parse_line(i + 1, l))
        .collect::<Result<Vec<_>>>()?;
    let mut pos = 0;
    let root = parse_split(&parsed, &mut pos, 0)?;
    if pos != parsed.len() {
        return Err(Error::TreeParse {
            line: pos + 1,
            reason: "unexpected trailing line".into(),
        });
    }
    Ok(DecisionTree { root, rule })
}

fn parsed_leaf(label: Label) -> Node {
    Node::Leaf {
        label,
        support: 0,
        purity: 0.0,
    }
}

fn parse_split(lines: &[ParsedLine], pos: &mut usize, depth: usize) -> Result<Node> {
    let child = |want_le: bool, pos: &mut usize| -> Result<(String, f64, Node)> {
        let line = lines.get(*pos).ok_or(Error::TreeParse {
            line: *pos + 1,
            reason: "unexpected end of tree".into(),
        })?;
        if line.depth != depth || line.le != want_le {
            return Err(Error::TreeParse {
                line: *pos + 1,
                reason: format!(
                    "expected {} branch at depth {depth}",
                    if want_le { "<=" } else { ">" }
                ),
            });
        }
        *pos += 1;
        let node = match line.leaf {
            Some(l) => parsed_leaf(l),
            None => parse_split(lines, pos, depth + 1)?,
        };
        Ok((line.feature.clone(), line.threshold, node))
    };
    let (feature, threshold, left) = child(true, pos)?;
    let (f2, t2, right) = child(false, pos)?;
    if f2 != feature || t2 != threshold {
        return Err(Error::TreeParse {
            line: *pos,
            reason: "branch pair tests differ".into(),
        });
    }
    Ok(Node::Split {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    })
}

//! N-binary close-time targets: one dataset per lifetime threshold.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{IssueRecord, FEATURE_NAMES};
use crate::tabular::{Dataset, FeatureColumn, Label};

/// Lifetime threshold in days: day, week, two weeks, month, three months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ThresholdSpec(u32);

impl ThresholdSpec {
    pub const ALLOWED: [u32; 5] = [1, 7, 14, 30, 90];

    pub fn new(days: u32) -> Result<Self> {
        if Self::ALLOWED.contains(&days) {
            Ok(ThresholdSpec(days))
        } else {
            Err(Error::InvalidThreshold(days))
        }
    }

    pub fn all() -> [ThresholdSpec; 5] {
        Self::ALLOWED.map(ThresholdSpec)
    }

    pub fn days(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for ThresholdSpec {
    type Error = Error;

    fn try_from(days: u32) -> Result<Self> {
        ThresholdSpec::new(days)
    }
}

impl From<ThresholdSpec> for u32 {
    fn from(t: ThresholdSpec) -> u32 {
        t.0
    }
}

impl fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Keeps only closed issues, in order.
pub fn drop_sticky(records: Vec<IssueRecord>) -> Vec<IssueRecord> {
    records.into_iter().filter(|r| !r.is_sticky()).collect()
}

/// `le` iff the issue closed within `spec` days (inclusive).
pub fn label_for(time_open_days: f64, spec: ThresholdSpec) -> Label {
    if time_open_days <= f64::from(spec.days()) {
        Label::Le
    } else {
        Label::Gt
    }
}

pub fn binarize(records: &[IssueRecord], spec: ThresholdSpec) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::Empty("record set"));
    }
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        let days = r
            .time_open_days()
            .ok_or_else(|| Error::StickyIssue(r.issue_id.clone()))?;
        if days < 0.0 {
            return Err(Error::NegativeLifetime {
                issue: r.issue_id.clone(),
            });
        }
        labels.push(label_for(days, spec));
    }
    let columns = FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            FeatureColumn::new(
                *name,
                records
                    .iter()
                    .map(|r| r.features.to_array()[i] as f64)
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        columns,
        labels,
        records.iter().map(|r| r.project.clone()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{IssueFeatures, SECONDS_PER_DAY};
    use crate::tabular::class_counts;

    fn rec(id: &str, open_days: Option<f64>) -> IssueRecord {
        IssueRecord {
            project: "p".into(),
            issue_id: id.into(),
            creator: "c".into(),
            opened_at: 1_000_000,
            closed_at: open_days.map(|d| 1_000_000 + (d * SECONDS_PER_DAY as f64).round() as i64),
            features: IssueFeatures::from_array([3, 1, 4, 1, 5, 9, 2]),
        }
    }

    #[test]
    fn threshold_values() {
        assert_eq!(ThresholdSpec::new(14).unwrap().days(), 14);
        assert!(matches!(
            ThresholdSpec::new(2),
            Err(Error::InvalidThreshold(2))
        ));
        let parsed: ThresholdSpec = serde_json::from_str("30").unwrap();
        assert_eq!(parsed.days(), 30);
        assert!(serde_json::from_str::<ThresholdSpec>("31").is_err());
    }

    #[test]
    fn drop_sticky_keeps_closed_in_order() {
        let recs = vec![
            rec("a", Some(1.0)),
            rec("b", None),
            rec("c", Some(0.0)),
            rec("d", None),
            rec("e", Some(3.0)),
        ];
        let ids: Vec<String> = drop_sticky(recs).into_iter().map(|r| r.issue_id).collect();
        assert_eq!(ids, ["a", "c", "e"]);
        assert!(drop_sticky(vec![rec("x", None)]).is_empty());
    }

    #[test]
    fn zero_lifetime_is_kept() {
        let kept = drop_sticky(vec![rec("z", Some(0.0))]);
        assert_eq!(kept[0].time_open_days(), Some(0.0));
    }

    #[test]
    fn inclusive_boundary() {
        let seven = ThresholdSpec::new(7).unwrap();
        assert_eq!(label_for(7.0, seven), Label::Le);
        assert_eq!(label_for(7.0001, seven), Label::Gt);
        let d = binarize(&[rec("a", Some(7.0)), rec("b", Some(7.0001))], seven).unwrap();
        assert_eq!(d.labels(), &[Label::Le, Label::Gt]);
    }

    #[test]
    fn binarize_copies_features_and_rejects_sticky() {
        let d = binarize(&[rec("a", Some(2.0))], ThresholdSpec::new(1).unwrap()).unwrap();
        assert_eq!(d.feature_names(), FEATURE_NAMES.to_vec());
        assert_eq!(d.value(0, 5), 9.0);
        assert!(matches!(
            binarize(&[rec("s", None)], ThresholdSpec::new(1).unwrap()),
            Err(Error::StickyIssue(_))
        ));
        assert!(binarize(&[], ThresholdSpec::new(1).unwrap()).is_err());
    }

    #[test]
    fn positives_grow_with_threshold() {
        let recs: Vec<IssueRecord> = [0.2, 1.0, 3.0, 8.0, 13.9, 20.0, 45.0, 89.0, 200.0]
            .iter()
            .enumerate()
            .map(|(i, &d)| rec(&i.to_string(), Some(d)))
            .collect();
        let pos: Vec<usize> = ThresholdSpec::all()
            .iter()
            .map(|&s| class_counts(&binarize(&recs, s).unwrap()).unwrap().0)
            .collect();
        assert_eq!(pos, vec![2, 3, 5, 6, 8]);
    }
}

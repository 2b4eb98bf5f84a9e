//! Feature extraction from raw issue/commit dumps.
//!
//! A dump is a directory holding `issues.json` and `commits.json`, each a
//! JSON array (see `docs/dump-format.md`). Every feature of an issue is
//! computed from events in the 90-day window `[opened_at - 90d, opened_at)`;
//! nothing at or after the issue's own creation time is ever counted.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Dataset, FeatureColumn, Label};

pub const SECONDS_PER_DAY: i64 = 86_400;
/// The "3 months" look-back window.
pub const WINDOW_SECONDS: i64 = 90 * SECONDS_PER_DAY;

pub const FEATURE_NAMES: [&str; 7] = [
    "issueCleanedBodyLen",
    "nCommitsByCreator",
    "nCommitsInProject",
    "nIssuesByCreator",
    "nIssuesByCreatorClosed",
    "nIssuesCreatedInProject",
    "nIssuesCreatedInProjectClosed",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IssueFeatures {
    pub issue_cleaned_body_len: u64,
    pub n_commits_by_creator: u64,
    pub n_commits_in_project: u64,
    pub n_issues_by_creator: u64,
    pub n_issues_by_creator_closed: u64,
    pub n_issues_created_in_project: u64,
    pub n_issues_created_in_project_closed: u64,
}

impl IssueFeatures {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [u64; 7] {
        [
            self.issue_cleaned_body_len,
            self.n_commits_by_creator,
            self.n_commits_in_project,
            self.n_issues_by_creator,
            self.n_issues_by_creator_closed,
            self.n_issues_created_in_project,
            self.n_issues_created_in_project_closed,
        ]
    }

    pub fn from_array(a: [u64; 7]) -> Self {
        IssueFeatures {
            issue_cleaned_body_len: a[0],
            n_commits_by_creator: a[1],
            n_commits_in_project: a[2],
            n_issues_by_creator: a[3],
            n_issues_by_creator_closed: a[4],
            n_issues_created_in_project: a[5],
            n_issues_created_in_project_closed: a[6],
        }
    }
}

/// One issue with its creation-time features. `closed_at` is `None` for
/// sticky issues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub project: String,
    pub issue_id: String,
    pub creator: String,
    pub opened_at: i64,
    pub closed_at: Option<i64>,
    pub features: IssueFeatures,
}

impl IssueRecord {
    pub fn is_sticky(&self) -> bool {
        self.closed_at.is_none()
    }

    pub fn body_word_count(&self) -> u64 {
        self.features.issue_cleaned_body_len
    }

    /// Fractional days between opening and closing.
    pub fn time_open_days(&self) -> Option<f64> {
        self.closed_at
            .map(|c| (c - self.opened_at) as f64 / SECONDS_PER_DAY as f64)
    }
}

/// Timestamps may be given as epoch seconds or RFC 3339 strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawTime {
    Seconds(i64),
    Text(String),
}

impl RawTime {
    fn resolve(&self) -> std::result::Result<i64, String> {
        match self {
            RawTime::Seconds(s) => Ok(*s),
            RawTime::Text(t) => chrono::DateTime::parse_from_rfc3339(t)
                .map(|d| d.timestamp())
                .map_err(|e| format!("bad timestamp {t:?}: {e}")),
        }
    }
}

#[derive(Debug, Deserialize)]
struct IssueJson {
    id: serde_json::Value,
    creator: Option<String>,
    created_at: Option<RawTime>,
    closed_at: Option<RawTime>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    body: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CommitJson {
    author: String,
    committed_at: RawTime,
}

/// An issue as read from the dump, before feature extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawIssue {
    pub id: String,
    pub creator: Option<String>,
    pub opened_at: Option<i64>,
    pub closed_at: Option<i64>,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitEvent {
    pub project: String,
    pub author: String,
    pub committed_at: i64,
}

#[derive(Debug, Clone, Default)]
pub struct ProjectDump {
    pub project: String,
    pub issues: Vec<RawIssue>,
    pub commits: Vec<CommitEvent>,
    /// Per-record problems found while loading; those records were skipped.
    pub diagnostics: Vec<String>,
}

fn read_json_array(path: &Path) -> Result<Vec<serde_json::Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::from(e).context(path.display().to_string()))?;
    match value {
        serde_json::Value::Array(items) => Ok(items),
        _ => Err(Error::SchemaMismatch(format!(
            "{}: expected a JSON array",
            path.display()
        ))),
    }
}

fn id_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn convert_issue(value: serde_json::Value) -> std::result::Result<RawIssue, String> {
    let raw: IssueJson = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let id = id_string(&raw.id).ok_or("issue id must be a non-empty string or number")?;
    let creator = raw.creator.filter(|c| !c.is_empty());
    let opened_at = raw
        .created_at
        .as_ref()
        .map(RawTime::resolve)
        .transpose()
        .map_err(|e| format!("issue {id}: {e}"))?;
    let closed_at = raw
        .closed_at
        .as_ref()
        .map(RawTime::resolve)
        .transpose()
        .map_err(|e| format!("issue {id}: {e}"))?;
    if creator.is_none() {
        return Err(format!("issue {id}: missing creator"));
    }
    if opened_at.is_none() {
        return Err(format!("issue {id}: missing created_at"));
    }
    if let (Some(o), Some(c)) = (opened_at, closed_at) {
        if c < o {
            return Err(format!("issue {id}: closed before it was opened"));
        }
    }
    Ok(RawIssue {
        id,
        creator,
        opened_at,
        closed_at,
        title: raw.title.unwrap_or_default(),
        body: raw.body.unwrap_or_default(),
    })
}

/// Loads a dump directory. The project name is the directory name.
pub fn parse_dump(dir: impl AsRef<Path>) -> Result<ProjectDump> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dump directory not found"),
        ));
    }
    let project = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into());
    let mut dump = ProjectDump {
        project: project.clone(),
        ..ProjectDump::default()
    };
    for (i, item) in read_json_array(&dir.join("issues.json"))?
        .into_iter()
        .enumerate()
    {
        match convert_issue(item) {
            Ok(issue) => dump.issues.push(issue),
            Err(e) => dump.diagnostics.push(format!("issues.json[{i}]: {e}")),
        }
    }
    let commits_path: PathBuf = dir.join("commits.json");
    let commits = if commits_path.exists() {
        read_json_array(&commits_path)?
    } else {
        dump.diagnostics
            .push("commits.json missing; no commit activity".into());
        Vec::new()
    };
    for (i, item) in commits.into_iter().enumerate() {
        let parsed = serde_json::from_value::<CommitJson>(item)
            .map_err(|e| e.to_string())
            .and_then(|c| {
                if c.author.is_empty() {
                    return Err("empty author".to_string());
                }
                Ok(CommitEvent {
                    project: project.clone(),
                    author: c.author,
                    committed_at: c.committed_at.resolve()?,
                })
            });
        match parsed {
            Ok(c) => dump.commits.push(c),
            Err(e) => dump.diagnostics.push(format!("commits.json[{i}]: {e}")),
        }
    }
    if dump.issues.is_empty() {
        return Err(Error::Empty("dump: no parseable issues"));
    }
    Ok(dump)
}

fn markup_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?s)```.*?```").unwrap(),
            Regex::new(r"(?s)\{code(?::[^}]*)?\}.*?\{code\}").unwrap(),
            Regex::new(r"<[^<>]+>").unwrap(),
        ]
    })
}

/// Word count after removing fenced code blocks (Markdown and JIRA
/// `{code}`) and HTML tags.
pub fn cleaned_word_count(text: &str) -> u64 {
    let mut cleaned = text.to_string();
    for re in markup_patterns() {
        cleaned = re.replace_all(&cleaned, " ").into_owned();
    }
    cleaned.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Copy)]
struct IssueSpan {
    opened: i64,
    closed: Option<i64>,
}

impl IssueSpan {
    fn closed_before(&self, t: i64) -> bool {
        self.closed.is_some_and(|c| c < t)
    }
}

/// Events sorted by time, globally and per person, for window queries.
pub struct EventIndex {
    commits: Vec<i64>,
    commits_by_author: HashMap<String, Vec<i64>>,
    issues: Vec<IssueSpan>,
    issues_by_creator: HashMap<String, Vec<IssueSpan>>,
}

fn count_in(sorted: &[i64], lo: i64, hi: i64) -> u64 {
    (sorted.partition_point(|&t| t < hi) - sorted.partition_point(|&t| t < lo)) as u64
}

fn spans_in(sorted: &[IssueSpan], lo: i64, hi: i64) -> &[IssueSpan] {
    let a = sorted.partition_point(|s| s.opened < lo);
    let b = sorted.partition_point(|s| s.opened < hi);
    &sorted[a..b]
}

impl EventIndex {
    pub fn new(dump: &ProjectDump) -> Self {
        let mut commits: Vec<i64> = dump.commits.iter().map(|c| c.committed_at).collect();
        commits.sort_unstable();
        let mut commits_by_author: HashMap<String, Vec<i64>> = HashMap::new();
        for c in &dump.commits {
            commits_by_author
                .entry(c.author.clone())
                .or_default()
                .push(c.committed_at);
        }
        commits_by_author
            .values_mut()
            .for_each(|v| v.sort_unstable());

        let mut issues = Vec::new();
        let mut issues_by_creator: HashMap<String, Vec<IssueSpan>> = HashMap::new();
        for i in &dump.issues {
            let (Some(opened), Some(creator)) = (i.opened_at, i.creator.as_ref()) else {
                continue;
            };
            let span = IssueSpan {
                opened,
                closed: i.closed_at,
            };
            issues.push(span);
            issues_by_creator
                .entry(creator.clone())
                .or_default()
                .push(span);
        }
        issues.sort_by_key(|s| s.opened);
        issues_by_creator
            .values_mut()
            .for_each(|v| v.sort_by_key(|s| s.opened));
        EventIndex {
            commits,
            commits_by_author,
            issues,
            issues_by_creator,
        }
    }

    pub fn features(&self, creator: &str, opened_at: i64, body_len: u64) -> IssueFeatures {
        let (lo, hi) = (opened_at - WINDOW_SECONDS, opened_at);
        let by_creator = self
            .issues_by_creator
            .get(creator)
            .map(|v| spans_in(v, lo, hi))
            .unwrap_or(&[]);
        let in_project = spans_in(&self.issues, lo, hi);
        IssueFeatures {
            issue_cleaned_body_len: body_len,
            n_commits_by_creator: self
                .commits_by_author
                .get(creator)
                .map_or(0, |v| count_in(v, lo, hi)),
            n_commits_in_project: count_in(&self.commits, lo, hi),
            n_issues_by_creator: by_creator.len() as u64,
            n_issues_by_creator_closed: by_creator.iter().filter(|s| s.closed_before(hi)).count()
                as u64,
            n_issues_created_in_project: in_project.len() as u64,
            n_issues_created_in_project_closed: in_project
                .iter()
                .filter(|s| s.closed_before(hi))
                .count() as u64,
        }
    }

    pub fn extract(&self, project: &str, issue: &RawIssue) -> Result<IssueRecord> {
        let opened_at = issue.opened_at.ok_or_else(|| Error::MissingField {
            issue: issue.id.clone(),
            field: "opened_at",
        })?;
        let creator = issue
            .creator
            .as_deref()
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::MissingField {
                issue: issue.id.clone(),
                field: "creator",
            })?;
        if issue.closed_at.is_some_and(|c| c < opened_at) {
            return Err(Error::NegativeLifetime {
                issue: issue.id.clone(),
            });
        }
        let body_len = cleaned_word_count(&format!("{}\n{}", issue.title, issue.body));
        Ok(IssueRecord {
            project: project.to_string(),
            issue_id: issue.id.clone(),
            creator: creator.to_string(),
            opened_at,
            closed_at: issue.closed_at,
            features: self.features(creator, opened_at, body_len),
        })
    }
}

/// Features for a single issue. Builds a fresh index; use
/// [`build_dataset`] for whole dumps.
pub fn extract_features(dump: &ProjectDump, issue: &RawIssue) -> Result<IssueRecord> {
    EventIndex::new(dump).extract(&dump.project, issue)
}

/// One record per issue (sticky issues included), ordered by opening time
/// then issue id.
pub fn build_dataset(dump: &ProjectDump) -> Result<Vec<IssueRecord>> {
    if dump.issues.is_empty() {
        return Err(Error::Empty("dump: no issues"));
    }
    let index = EventIndex::new(dump);
    let mut records = dump
        .issues
        .par_iter()
        .map(|i| index.extract(&dump.project, i))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.opened_at
            .cmp(&b.opened_at)
            .then_with(|| a.issue_id.cmp(&b.issue_id))
    });
    Ok(records)
}

/// Issue ids that appear more than once in a record set.
pub fn duplicate_ids(records: &[IssueRecord]) -> Vec<String> {
    let mut seen: HashMap<(&str, &str), usize> = HashMap::new();
    for r in records {
        *seen.entry((&r.project, &r.issue_id)).or_default() += 1;
    }
    let mut dups: Vec<String> = seen
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|((_, id), _)| id.to_string())
        .collect();
    dups.sort();
    dups
}

const RECORD_PREFIX: [&str; 5] = ["project", "issue_id", "creator", "opened_at", "closed_at"];
pub const TIME_OPEN_COLUMN: &str = "timeOpen";

/// Writes the per-issue feature CSV: identity columns, the seven features,
/// and `timeOpen` in days (empty for sticky issues).
pub fn write_records<W: Write>(records: &[IssueRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = RECORD_PREFIX.to_vec();
    header.extend(FEATURE_NAMES);
    header.push(TIME_OPEN_COLUMN);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.project.clone(),
            r.issue_id.clone(),
            r.creator.clone(),
            r.opened_at.to_string(),
            r.closed_at.map(|c| c.to_string()).unwrap_or_default(),
        ];
        row.extend(r.features.to_array().iter().map(u64::to_string));
        row.push(
            r.time_open_days()
                .map(|d| d.to_string())
                .unwrap_or_default(),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_records(records: &[IssueRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<IssueRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedHeader(format!("missing column {name:?}")))
    };
    let prefix = RECORD_PREFIX.map(find);
    let prefix: Vec<usize> = prefix.into_iter().collect::<Result<_>>()?;
    let feats: Vec<usize> = FEATURE_NAMES
        .iter()
        .map(|n| find(n))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row + 1;
        let cell = |i: usize| rec.get(i).unwrap_or("").trim();
        let bad = |col: usize, reason: String| Error::BadCell {
            row,
            column: header[col].clone(),
            reason,
        };
        let int = |col: usize| -> Result<i64> {
            cell(col)
                .parse::<i64>()
                .map_err(|_| bad(col, format!("not an integer: {:?}", cell(col))))
        };
        let opened_at = int(prefix[3])?;
        let closed_at = if cell(prefix[4]).is_empty() {
            None
        } else {
            Some(int(prefix[4])?)
        };
        let mut values = [0u64; 7];
        for (slot, &col) in feats.iter().enumerate() {
            values[slot] = cell(col)
                .parse::<u64>()
                .map_err(|_| bad(col, format!("not a non-negative count: {:?}", cell(col))))?;
        }
        let record = IssueRecord {
            project: cell(prefix[0]).to_string(),
            issue_id: cell(prefix[1]).to_string(),
            creator: cell(prefix[2]).to_string(),
            opened_at,
            closed_at,
            features: IssueFeatures::from_array(values),
        };
        if closed_at.is_some_and(|c| c < opened_at) {
            return Err(Error::NegativeLifetime {
                issue: record.issue_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<IssueRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
}

/// Row-wise concatenation of datasets with identical column names.
pub fn combine(datasets: &[Dataset]) -> Result<Dataset> {
    let first = datasets.first().ok_or(Error::Empty("dataset list"))?;
    let names = first.feature_names();
    for d in &datasets[1..] {
        if d.feature_names() != names {
            return Err(Error::SchemaMismatch(format!(
                "columns {:?} vs {:?}",
                names,
                d.feature_names()
            )));
        }
    }
    let columns = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let values = datasets
                .iter()
                .flat_map(|d| d.columns()[c].values().iter().copied())
                .collect();
            FeatureColumn::new(*name, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = datasets
        .iter()
        .flat_map(|d| d.labels().iter().copied())
        .collect();
    let provenance = datasets
        .iter()
        .flat_map(|d| d.provenance().iter().cloned())
        .collect();
    Dataset::new(columns, labels, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: i64 = SECONDS_PER_DAY;

    fn issue(id: &str, creator: &str, opened: i64, closed: Option<i64>) -> RawIssue {
        RawIssue {
            id: id.into(),
            creator: Some(creator.into()),
            opened_at: Some(opened),
            closed_at: closed,
            title: String::new(),
            body: String::new(),
        }
    }

    fn commit(author: &str, at: i64) -> CommitEvent {
        CommitEvent {
            project: "p".into(),
            author: author.into(),
            committed_at: at,
        }
    }

    #[test]
    fn no_prior_activity_is_all_zero() {
        let target = issue("1", "alice", 1000 * DAY, None);
        let dump = ProjectDump {
            project: "p".into(),
            issues: vec![target.clone()],
            commits: vec![commit("alice", 1000 * DAY + 5)],
            diagnostics: vec![],
        };
        let r = extract_features(&dump, &target).unwrap();
        assert_eq!(r.features, IssueFeatures::default());
    }

    #[test]
    fn commit_window_edges() {
        let t = 1000 * DAY;
        let target = issue("1", "alice", t, None);
        let dump = ProjectDump {
            project: "p".into(),
            issues: vec![target.clone()],
            commits: vec![
                commit("alice", t - 10 * DAY),
                commit("alice", t - 10 * DAY + 60),
                commit("alice", t - 100 * DAY),
                // window start is inclusive, issue time exclusive
                commit("bob", t - WINDOW_SECONDS),
                commit("bob", t),
            ],
            diagnostics: vec![],
        };
        let f = extract_features(&dump, &target).unwrap().features;
        assert_eq!(f.n_commits_by_creator, 2);
        assert_eq!(f.n_commits_in_project, 3);
    }

    #[test]
    fn issue_counts_respect_closure_time() {
        let t = 1000 * DAY;
        let target = issue("T", "alice", t, Some(t + DAY));
        let dump = ProjectDump {
            project: "p".into(),
            issues: vec![
                target.clone(),
                // alice: opened in window, closed before t
                issue("a1", "alice", t - 20 * DAY, Some(t - 10 * DAY)),
                // alice: opened in window, closed after t (leak if counted)
                issue("a2", "alice", t - 5 * DAY, Some(t + 5 * DAY)),
                // alice: opened before window, closed inside it
                issue("a3", "alice", t - 200 * DAY, Some(t - DAY)),
                // bob: opened and closed in window
                issue("b1", "bob", t - 30 * DAY, Some(t - 29 * DAY)),
                // bob: sticky, opened in window
                issue("b2", "bob", t - 2 * DAY, None),
                // same instant as target: excluded
                issue("b3", "bob", t, Some(t)),
            ],
            commits: vec![],
            diagnostics: vec![],
        };
        let f = extract_features(&dump, &target).unwrap().features;
        assert_eq!(f.n_issues_by_creator, 2);
        assert_eq!(f.n_issues_by_creator_closed, 1);
        assert_eq!(f.n_issues_created_in_project, 4);
        assert_eq!(f.n_issues_created_in_project_closed, 2);
    }

    #[test]
    fn missing_fields_error() {
        let dump = ProjectDump {
            project: "p".into(),
            ..Default::default()
        };
        let mut i = issue("x", "a", 0, None);
        i.creator = None;
        assert!(matches!(
            extract_features(&dump, &i),
            Err(Error::MissingField {
                field: "creator",
                ..
            })
        ));
        let mut i = issue("x", "a", 0, None);
        i.opened_at = None;
        assert!(matches!(
            extract_features(&dump, &i),
            Err(Error::MissingField {
                field: "opened_at",
                ..
            })
        ));
    }

    #[test]
    fn word_count_strips_markup() {
        assert_eq!(cleaned_word_count(""), 0);
        assert_eq!(cleaned_word_count("  fix   the\tbuild\n"), 3);
        assert_eq!(
            cleaned_word_count("see <b>this</b> ```let x = 1;``` now"),
            3
        );
        assert_eq!(cleaned_word_count("a {code:java}int x;{code} b"), 2);
        assert_eq!(cleaned_word_count("héllo wörld\u{3000}again"), 3);
    }

    #[test]
    fn build_dataset_orders_by_open_time() {
        let dump = ProjectDump {
            project: "p".into(),
            issues: vec![
                issue("b", "x", 50, Some(60)),
                issue("a", "y", 10, None),
                issue("c", "y", 50, None),
            ],
            commits: vec![],
            diagnostics: vec![],
        };
        let recs = build_dataset(&dump).unwrap();
        let ids: Vec<&str> = recs.iter().map(|r| r.issue_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(build_dataset(&ProjectDump::default()).is_err());
    }

    #[test]
    fn records_csv_round_trip() {
        let recs = vec![
            IssueRecord {
                project: "p".into(),
                issue_id: "1".into(),
                creator: "alice".into(),
                opened_at: 100,
                closed_at: Some(100 + DAY / 2),
                features: IssueFeatures::from_array([1, 2, 3, 4, 5, 6, 7]),
            },
            IssueRecord {
                project: "p".into(),
                issue_id: "2".into(),
                creator: "bob".into(),
                opened_at: 200,
                closed_at: None,
                features: IssueFeatures::default(),
            },
        ];
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",0.5"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn combine_concatenates_and_checks_schema() {
        let mk = |name: &str, p: &str| {
            Dataset::new(
                vec![FeatureColumn::new(name, vec![1.0, 2.0, 3.0]).unwrap()],
                vec![Label::Le, Label::Gt, Label::Le],
                vec![p.into(); 3],
            )
            .unwrap()
        };
        let c = combine(&[mk("f", "a"), mk("f", "b")]).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c.provenance()[3], "b");
        assert_eq!(combine(&[mk("f", "a")]).unwrap(), mk("f", "a"));
        assert!(matches!(
            combine(&[mk("f", "a"), mk("g", "b")]),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(combine(&[]).is_err());
    }

    #[test]
    fn duplicates_flagged() {
        let r = IssueRecord {
            project: "p".into(),
            issue_id: "7".into(),
            creator: "c".into(),
            opened_at: 0,
            closed_at: None,
            features: IssueFeatures::default(),
        };
        assert_eq!(duplicate_ids(&[r.clone(), r]), vec!["7".to_string()]);
    }
}

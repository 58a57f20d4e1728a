//! Per-task removal priorities for token types.
//!
//! A type's removal priority is the compression it buys divided by the
//! relative metric degradation its removal causes. Types with high
//! priority are deleted first by the compressor. Tables are built from
//! ablation measurements against a base LM, persisted as plain-text
//! key-value files, and shipped with qualitative defaults.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer;
use crate::lm::BaseLmClient;
use crate::prompt::{self, KbEntry, KnowledgeBase};
use crate::typer::{self, TokenTypeLabel};

/// Guard against division by zero when a type's removal causes no
/// measurable degradation; such types rank first.
pub const DEGRADATION_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Assertion,
    Bugs2Fix,
    Suggestion,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Assertion, Task::Bugs2Fix, Task::Suggestion];

    pub fn tag(self) -> &'static str {
        match self {
            Task::Assertion => "ASSERTION",
            Task::Bugs2Fix => "BUGS2FIX",
            Task::Suggestion => "SUGGESTION",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ASSERTION" => Ok(Task::Assertion),
            "BUGS2FIX" => Ok(Task::Bugs2Fix),
            "SUGGESTION" => Ok(Task::Suggestion),
            other => Err(Error::UnknownTask(other.to_string())),
        }
    }
}

/// One ablation measurement: what happened when every token of one type
/// was stripped from the retrieved examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub task: Task,
    pub type_removed: TokenTypeLabel,
    /// Fraction of countable tokens removed by deleting the whole type.
    pub tau_code_t: f64,
    /// Metric (percent scale) with intact examples.
    pub metric_full: f64,
    /// Metric (percent scale) with the type ablated.
    pub metric_ablated: f64,
}

/// Priority(T) = tau_code/T divided by the relative degradation d_T,
/// where d_T = max(eps, (metric_full - metric_ablated) / metric_full).
pub fn compute_priority(record: &AblationRecord) -> Result<f64> {
    if record.metric_full <= 0.0 {
        return Err(Error::Table(format!(
            "metric_full must be positive, got {}",
            record.metric_full
        )));
    }
    let degradation = (record.metric_full - record.metric_ablated) / record.metric_full;
    let d_t = degradation.max(DEGRADATION_EPSILON);
    Ok(record.tau_code_t / d_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub priority: f64,
    /// 1 = removed first.
    pub rank: u8,
}

/// Per-task type priorities. Rank 1 is removed first; out-of-type tokens
/// are always removed last (virtual rank 6).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityTable {
    pub task: Task,
    entries: HashMap<TokenTypeLabel, TableEntry>,
}

impl PriorityTable {
    pub const OUT_OF_TYPE_RANK: u8 = 6;
    const FORMAT_VERSION: u32 = 1;

    /// Build a table from explicit (type, priority) pairs. All five table
    /// types must appear exactly once.
    pub fn from_priorities(task: Task, priorities: &[(TokenTypeLabel, f64)]) -> Result<Self> {
        let mut map: HashMap<TokenTypeLabel, f64> = HashMap::new();
        for &(label, p) in priorities {
            if label == TokenTypeLabel::OutOfType {
                return Err(Error::Table(
                    "OutOfType has no configurable priority; it is always removed last".into(),
                ));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Table(format!(
                    "priority for {label} must be a nonnegative real, got {p}"
                )));
            }
            if map.insert(label, p).is_some() {
                return Err(Error::Table(format!("duplicate type {label}")));
            }
        }
        for label in TokenTypeLabel::TABLE_TYPES {
            if !map.contains_key(&label) {
                return Err(Error::Table(format!("missing type {label}")));
            }
        }

        // Rank by descending priority; equal priorities follow the fixed
        // type order.
        let mut order: Vec<TokenTypeLabel> = TokenTypeLabel::TABLE_TYPES.to_vec();
        order.sort_by(|a, b| {
            map[b]
                .partial_cmp(&map[a])
                .unwrap()
                .then_with(|| fixed_order(*a).cmp(&fixed_order(*b)))
        });
        let mut entries = HashMap::new();
        for (i, label) in order.into_iter().enumerate() {
            entries.insert(
                label,
                TableEntry {
                    priority: map[&label],
                    rank: (i + 1) as u8,
                },
            );
        }
        Ok(PriorityTable { task, entries })
    }

    /// Priority value for a label; OutOfType is -inf so any real
    /// candidate protects less than no candidate at all.
    pub fn priority_of(&self, label: TokenTypeLabel) -> f64 {
        match self.entries.get(&label) {
            Some(e) => e.priority,
            None => f64::NEG_INFINITY,
        }
    }

    /// Removal rank: 1 first, 5 last among typed tokens, 6 for OutOfType.
    pub fn rank_of(&self, label: TokenTypeLabel) -> u8 {
        match self.entries.get(&label) {
            Some(e) => e.rank,
            None => Self::OUT_OF_TYPE_RANK,
        }
    }

    pub fn entry(&self, label: TokenTypeLabel) -> Option<TableEntry> {
        self.entries.get(&label).copied()
    }

    /// Shipped defaults. The orderings are qualitative (which types go
    /// first for which task); the spacing between values is synthetic,
    /// not a measured result.
    pub fn default_for(task: Task) -> Self {
        use TokenTypeLabel::*;
        let priorities: &[(TokenTypeLabel, f64)] = match task {
            Task::Assertion => &[
                (Invocation, 8.0),
                (Symbol, 4.0),
                (Identifier, 2.0),
                (Structure, 1.0),
                (Signature, 0.5),
            ],
            Task::Bugs2Fix => &[
                (Identifier, 8.0),
                (Invocation, 4.0),
                (Symbol, 2.0),
                (Structure, 1.0),
                (Signature, 0.5),
            ],
            Task::Suggestion => &[
                (Symbol, 8.0),
                (Invocation, 4.0),
                (Identifier, 2.0),
                (Structure, 1.0),
                (Signature, 0.5),
            ],
        };
        Self::from_priorities(task, priorities).expect("default table is well-formed")
    }

    /// All five types at equal priority; ranks follow the fixed type
    /// order. Used to classify before any ablation has produced a real
    /// table.
    pub fn uniform(task: Task) -> Self {
        let priorities: Vec<(TokenTypeLabel, f64)> = TokenTypeLabel::TABLE_TYPES
            .iter()
            .map(|&l| (l, 1.0))
            .collect();
        Self::from_priorities(task, &priorities).expect("uniform table is well-formed")
    }

    /// Plain-text key-value rendering; key order is fixed so equal tables
    /// produce identical bytes.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version={}\n", Self::FORMAT_VERSION));
        out.push_str(&format!("task={}\n", self.task.tag()));
        for label in TokenTypeLabel::TABLE_TYPES {
            out.push_str(&format!(
                "type.{}.priority={}\n",
                label.name(),
                self.entries[&label].priority
            ));
        }
        out
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut task: Option<Task> = None;
        let mut version: Option<u32> = None;
        let mut priorities: Vec<(TokenTypeLabel, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Table(format!("line {}: expected key=value", lineno + 1))
            })?;
            match key {
                "version" => {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| Error::Table(format!("bad version `{value}`")))?;
                    if v != Self::FORMAT_VERSION {
                        return Err(Error::Table(format!("unsupported version {v}")));
                    }
                    version = Some(v);
                }
                "task" => task = Some(value.parse()?),
                _ => {
                    let label = key
                        .strip_prefix("type.")
                        .and_then(|k| k.strip_suffix(".priority"))
                        .ok_or_else(|| Error::Table(format!("unknown key `{key}`")))?;
                    let label = TokenTypeLabel::parse(label)?;
                    let p: f64 = value
                        .parse()
                        .map_err(|_| Error::Table(format!("bad priority `{value}`")))?;
                    priorities.push((label, p));
                }
            }
        }
        if version.is_none() {
            return Err(Error::Table("missing version line".into()));
        }
        let task = task.ok_or_else(|| Error::Table("missing task line".into()))?;
        Self::from_priorities(task, &priorities)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }
}

fn fixed_order(label: TokenTypeLabel) -> usize {
    TokenTypeLabel::TABLE_TYPES
        .iter()
        .position(|&l| l == label)
        .unwrap_or(usize::MAX)
}

/// Build a table from one record per type.
pub fn build_table(records: &[AblationRecord]) -> Result<PriorityTable> {
    if records.is_empty() {
        return Err(Error::Table("no ablation records".into()));
    }
    let task = records[0].task;
    if records.iter().any(|r| r.task != task) {
        return Err(Error::Table("records span multiple tasks".into()));
    }
    let mut priorities = Vec::new();
    for r in records {
        priorities.push((r.type_removed, compute_priority(r)?));
    }
    PriorityTable::from_priorities(task, &priorities)
}

#[derive(Debug, Clone)]
pub struct AblationConfig {
    /// Retrieved examples per prompt.
    pub shots: usize,
    /// Transport retries per LM call.
    pub max_retries: usize,
    /// Bounded in-flight LM calls.
    pub concurrency: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            shots: 1,
            max_retries: 2,
            concurrency: 4,
        }
    }
}

#[derive(Debug)]
pub struct AblationReport {
    pub records: Vec<AblationRecord>,
    /// (example id, error message) for items that failed after retries.
    pub failures: Vec<(String, String)>,
}

/// Measure each type's removal impact: strip all tokens of the type from
/// every retrieved example, run the RAG loop against `lm`, and score with
/// the task metric. `classify_table` resolves multi-type tokens during
/// stripping (use [`PriorityTable::uniform`] when no table exists yet).
pub fn run_ablation(
    kb: &KnowledgeBase,
    eval_items: &[KbEntry],
    task: Task,
    lm: &dyn BaseLmClient,
    classify_table: &PriorityTable,
    config: &AblationConfig,
) -> Result<AblationReport> {
    if eval_items.is_empty() {
        return Err(Error::Lm("empty evaluation corpus".into()));
    }

    let mut failures = Vec::new();

    let full = prompt::run_rag_eval(
        kb,
        eval_items,
        task,
        &|entry| Ok((entry.code.clone(), 0.0)),
        lm,
        config.shots,
        config.max_retries,
        config.concurrency,
    )?;
    failures.extend(full.failures.clone());
    let metric_full = prompt::task_metric(task, &full.preds, &full.golds);

    let mut records = Vec::new();
    for label in TokenTypeLabel::TABLE_TYPES {
        let transform = |entry: &KbEntry| -> Result<(String, f64)> {
            Ok(strip_type(&entry.code, label, classify_table))
        };
        let outcome = prompt::run_rag_eval(
            kb,
            eval_items,
            task,
            &transform,
            lm,
            config.shots,
            config.max_retries,
            config.concurrency,
        )?;
        let metric_ablated = prompt::task_metric(task, &outcome.preds, &outcome.golds);
        let tau_code_t = if outcome.removal_fractions.is_empty() {
            0.0
        } else {
            outcome.removal_fractions.iter().sum::<f64>() / outcome.removal_fractions.len() as f64
        };
        failures.extend(outcome.failures);
        records.push(AblationRecord {
            task,
            type_removed: label,
            tau_code_t,
            metric_full,
            metric_ablated,
        });
    }

    Ok(AblationReport { records, failures })
}

/// Remove every countable token labeled `label`; returns the rendered
/// remainder and the removed fraction.
pub fn strip_type(
    code: &str,
    label: TokenTypeLabel,
    table: &PriorityTable,
) -> (String, f64) {
    let stream = lexer::lex(code);
    let typed = typer::classify(&stream, table);
    let n = stream.countable_len();
    if n == 0 {
        return (String::new(), 0.0);
    }
    let kept: Vec<usize> = (0..n).filter(|&i| typed.labels[i] != label).collect();
    let removed = n - kept.len();
    let text = lexer::detokenize(&stream, &kept);
    (text, removed as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(tau: f64, full: f64, ablated: f64) -> AblationRecord {
        AblationRecord {
            task: Task::Assertion,
            type_removed: TokenTypeLabel::Symbol,
            tau_code_t: tau,
            metric_full: full,
            metric_ablated: ablated,
        }
    }

    #[test]
    fn priority_formula_direct() {
        let p = compute_priority(&record(0.20, 50.0, 45.0)).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn priority_formula_no_degradation() {
        let p = compute_priority(&record(0.20, 50.0, 50.0)).unwrap();
        assert!((p - 0.20 / DEGRADATION_EPSILON).abs() < 1e-6);
    }

    #[test]
    fn priority_formula_maximal_degradation() {
        let p = compute_priority(&record(0.3, 50.0, 0.0)).unwrap();
        assert!((p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn priority_rejects_nonpositive_metric() {
        assert!(compute_priority(&record(0.3, 0.0, 0.0)).is_err());
        assert!(compute_priority(&record(0.3, -1.0, 0.0)).is_err());
    }

    fn records_for(priors: [(TokenTypeLabel, f64, f64); 5]) -> Vec<AblationRecord> {
        priors
            .iter()
            .map(|&(label, tau, ablated)| AblationRecord {
                task: Task::Assertion,
                type_removed: label,
                tau_code_t: tau,
                metric_full: 50.0,
                metric_ablated: ablated,
            })
            .collect()
    }

    #[test]
    fn build_table_ranks_by_descending_priority() {
        use TokenTypeLabel::*;
        let records = records_for([
            (Symbol, 0.2, 45.0),     // d=0.1 -> 2.0
            (Signature, 0.1, 25.0),  // d=0.5 -> 0.2
            (Invocation, 0.3, 47.0), // d=0.06 -> 5.0
            (Identifier, 0.2, 40.0), // d=0.2 -> 1.0
            (Structure, 0.1, 30.0),  // d=0.4 -> 0.25
        ]);
        let table = build_table(&records).unwrap();
        assert_eq!(table.rank_of(Invocation), 1);
        assert_eq!(table.rank_of(Symbol), 2);
        assert_eq!(table.rank_of(Identifier), 3);
        assert_eq!(table.rank_of(Structure), 4);
        assert_eq!(table.rank_of(Signature), 5);
        assert_eq!(table.rank_of(OutOfType), 6);
    }

    #[test]
    fn build_table_rejects_missing_and_duplicate_types() {
        use TokenTypeLabel::*;
        let mut records = records_for([
            (Symbol, 0.2, 45.0),
            (Signature, 0.1, 25.0),
            (Invocation, 0.3, 47.0),
            (Identifier, 0.2, 40.0),
            (Structure, 0.1, 30.0),
        ]);
        records.pop();
        let err = build_table(&records).unwrap_err().to_string();
        assert!(err.contains("Structure"), "{err}");

        records.push(records[0].clone());
        let err = build_table(&records).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("Symbol"), "{err}");
    }

    #[test]
    fn equal_priorities_use_fixed_type_order() {
        use TokenTypeLabel::*;
        let priorities: Vec<(TokenTypeLabel, f64)> = TokenTypeLabel::TABLE_TYPES
            .iter()
            .map(|&l| (l, 3.0))
            .collect();
        let table = PriorityTable::from_priorities(Task::Assertion, &priorities).unwrap();
        assert_eq!(table.rank_of(Symbol), 1);
        assert_eq!(table.rank_of(Signature), 2);
        assert_eq!(table.rank_of(Invocation), 3);
        assert_eq!(table.rank_of(Identifier), 4);
        assert_eq!(table.rank_of(Structure), 5);
    }

    #[test]
    fn default_tables_encode_known_orderings() {
        use TokenTypeLabel::*;
        let assertion = PriorityTable::default_for(Task::Assertion);
        assert!(assertion.priority_of(Invocation) > assertion.priority_of(Symbol));
        let suggestion = PriorityTable::default_for(Task::Suggestion);
        assert!(suggestion.priority_of(Symbol) > suggestion.priority_of(Invocation));
        for task in Task::ALL {
            let t = PriorityTable::default_for(task);
            assert!(t.priority_of(Identifier) > t.priority_of(Structure));
        }
    }

    #[test]
    fn scale_invariance_of_ranking() {
        use TokenTypeLabel::*;
        let records = records_for([
            (Symbol, 0.2, 45.0),
            (Signature, 0.1, 25.0),
            (Invocation, 0.3, 47.0),
            (Identifier, 0.2, 40.0),
            (Structure, 0.1, 30.0),
        ]);
        let base = build_table(&records).unwrap();
        let scaled: Vec<AblationRecord> = records
            .iter()
            .map(|r| AblationRecord {
                metric_full: r.metric_full * 1.7,
                metric_ablated: r.metric_ablated * 1.7,
                ..r.clone()
            })
            .collect();
        let scaled_table = build_table(&scaled).unwrap();
        for label in TokenTypeLabel::TABLE_TYPES {
            assert_eq!(base.rank_of(label), scaled_table.rank_of(label));
        }
    }

    #[test]
    fn config_round_trip_is_byte_identical() {
        let table = PriorityTable::default_for(Task::Bugs2Fix);
        let text = table.to_config_string();
        let reloaded = PriorityTable::from_config_str(&text).unwrap();
        assert_eq!(reloaded.to_config_string(), text);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = "version=1\ntask=ASSERTION\nbogus=1\n";
        let err = PriorityTable::from_config_str(text).unwrap_err().to_string();
        assert!(err.contains("unknown key"), "{err}");
    }

    #[test]
    fn config_rejects_unknown_version() {
        let text = "version=9\ntask=ASSERTION\n";
        assert!(PriorityTable::from_config_str(text).is_err());
    }
}

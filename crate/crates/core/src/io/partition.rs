use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{agent_id, content_lines, parse_error};
use crate::error::Result;
use crate::partition::{Partition, PartitionResult};

/// A parsed partition file: the partition plus its `key=value` header in
/// file order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionFile {
    pub partition: Partition,
    pub meta: Vec<(String, String)>,
}

impl PartitionFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses `key=value` header lines and `set <k>: <id> ...` lines. Sets may
/// appear in any order but their numbers must run 1..=K and the ids must
/// cover 1..=n exactly once.
pub fn parse_partition(text: &str) -> Result<PartitionFile> {
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut sets: BTreeMap<usize, (usize, Vec<usize>)> = BTreeMap::new();
    for (line, content) in content_lines(text)? {
        if let Some(rest) = content.strip_prefix("set ") {
            let (k, ids) = rest.split_once(':').ok_or_else(|| parse_error(line, "expected 'set <k>: <ids>'"))?;
            let k: usize = k.trim().parse().map_err(|_| parse_error(line, format!("set number '{}' is not an integer", k.trim())))?;
            let members = ids.split_whitespace().map(|t| agent_id(line, Some(t), None, "agent id")).collect::<Result<Vec<_>>>()?;
            if members.is_empty() {
                return Err(parse_error(line, format!("set {k} is empty")));
            }
            if sets.insert(k, (line, members)).is_some() {
                return Err(parse_error(line, format!("set {k} given twice")));
            }
        } else if let Some((key, value)) = content.split_once('=') {
            let key = key.trim();
            if meta.iter().any(|(k, _)| k == key) {
                return Err(parse_error(line, format!("header key '{key}' given twice")));
            }
            meta.push((key.to_string(), value.trim().to_string()));
        } else {
            return Err(parse_error(line, format!("unrecognized line '{content}'")));
        }
    }
    let last_line = sets.values().map(|s| s.0).max().unwrap_or(1);
    if sets.is_empty() {
        return Err(parse_error(last_line, "no 'set' lines"));
    }
    for (expected, (&k, &(line, _))) in (1..).zip(&sets) {
        if k != expected {
            return Err(parse_error(line, format!("set numbers must run 1..=K; found {k} where {expected} was expected")));
        }
    }
    let n = sets.values().map(|s| s.1.len()).sum();
    let mut assignment = vec![usize::MAX; n];
    for (set, (line, members)) in sets.values().enumerate() {
        for &m in members {
            if m >= n {
                return Err(parse_error(*line, format!("agent id {} exceeds the {n} listed agents", m + 1)));
            }
            if assignment[m] != usize::MAX {
                return Err(parse_error(*line, format!("agent {} listed twice", m + 1)));
            }
            assignment[m] = set;
        }
    }
    let partition = Partition::from_assignment(assignment).map_err(|e| parse_error(last_line, e.to_string()))?;
    Ok(PartitionFile { partition, meta })
}

/// Writes `meta` as header lines, then one `set` line per set.
pub fn write_partition(partition: &Partition, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "{k}={v}");
    }
    for (k, set) in partition.sets().iter().enumerate() {
        let ids: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(out, "set {}: {}", k + 1, ids.join(" "));
    }
    out
}

/// Header keys `method`, `alpha`, `objective`, `p_idx`, `Q` from a result.
pub fn write_partition_result(r: &PartitionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method={}", r.method);
    if let Some(a) = r.alpha {
        let _ = writeln!(out, "alpha={a}");
    }
    let _ = writeln!(out, "objective={}", r.objective);
    if let Some(p) = r.p_idx {
        let _ = writeln!(out, "p_idx={p}");
    }
    if let Some(q) = r.modularity_q {
        let _ = writeln!(out, "Q={q}");
    }
    out + &write_partition(&r.partition, &[])
}

//! Partitions of a node set and the engines that compute them.

mod bqp;
mod enumerate;
mod fsu;
mod greedy;
mod modularity;
mod objective;

pub use bqp::{solve_bqp_exact, solve_bqp_local, solve_bqp_oracle, DEFAULT_MAX_EXACT_NODES, MAX_ORACLE_PARTITION_NODES};
pub use enumerate::{bell_number, enumerate_partitions_oracle, PartitionIter, MAX_ORACLE_NODES};
pub use fsu::{select_fsu, Fsu};
pub use greedy::{greedy_neighbors, greedy_partition, greedy_partition_traced, GreedyTrace, GREEDY_MIN_GAIN};
pub use modularity::{modularity, modularity_bisect, ModularityMatrix, ModularityOptions};
pub use objective::{bqp_objective, partition_index};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};
use crate::graph::WeightedDigraph;

/// Complete, non-overlapping assignment of nodes to sets `0..n_sets`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    n_sets: usize,
}

impl Partition {
    /// Partition from set labels in `0..k`; every label in that range must be used.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let n_sets = assignment.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; n_sets];
        for &s in &assignment {
            used[s] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(invalid(format!("set {empty} is empty")));
        }
        Ok(Self { assignment, n_sets })
    }

    /// Partition from arbitrary labels, renumbered by first appearance.
    pub fn from_labels<L: Ord + Copy>(labels: &[L]) -> Self {
        let mut map = BTreeMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { assignment, n_sets: map.len() }
    }

    /// Partition of `0..n` from explicit member lists.
    pub fn from_sets(n: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (k, set) in sets.iter().enumerate() {
            if set.is_empty() {
                return Err(invalid(format!("set {k} is empty")));
            }
            for &i in set {
                if i >= n {
                    return Err(invalid(format!("node {i} is out of range for {n} nodes")));
                }
                if assignment[i] != usize::MAX {
                    return Err(invalid(format!("node {i} is assigned twice")));
                }
                assignment[i] = k;
            }
        }
        if let Some(i) = assignment.iter().position(|&s| s == usize::MAX) {
            return Err(invalid(format!("node {i} is not assigned")));
        }
        Ok(Self { assignment, n_sets: sets.len() })
    }

    pub fn singletons(n: usize) -> Self {
        Self { assignment: (0..n).collect(), n_sets: n }
    }

    pub fn grand(n: usize) -> Self {
        Self { assignment: vec![0; n], n_sets: usize::from(n > 0) }
    }

    /// Number of nodes covered.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_sets(&self) -> usize {
        self.n_sets
    }

    pub fn set_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each set, ascending.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.n_sets];
        for (i, &s) in self.assignment.iter().enumerate() {
            sets[s].push(i);
        }
        sets
    }

    pub fn set_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_sets];
        for &s in &self.assignment {
            sizes[s] += 1;
        }
        sizes
    }

    /// Same partition with sets numbered by their smallest member.
    pub fn canonical(&self) -> Self {
        Self::from_labels(&self.assignment)
    }

    /// True when both describe the same grouping, whatever the set numbering.
    pub fn same_grouping(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// Partition of `perm`-relabeled nodes: node `i` becomes `perm[i]`.
    pub fn relabel_nodes(&self, perm: &[usize]) -> Self {
        let mut assignment = vec![0; self.len()];
        for (i, &p) in perm.iter().enumerate() {
            assignment[p] = self.assignment[i];
        }
        Self { assignment, n_sets: self.n_sets }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets = self.sets();
        write!(f, "{{")?;
        for (k, s) in sets.iter().enumerate() {
            if k > 0 {
                write!(f, " | ")?;
            }
            let ids: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{}", ids.join(" "))?;
        }
        write!(f, "}}")
    }
}

/// Partitioning engine that produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    BqpExact,
    BqpLocal,
    Greedy,
    Modularity,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::BqpExact, Method::BqpLocal, Method::Greedy, Method::Modularity, Method::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::BqpExact => "bqp-exact",
            Method::BqpLocal => "bqp-local",
            Method::Greedy => "greedy",
            Method::Modularity => "modularity",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('_', "-").to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

/// Granularity parameter shared by the BQP and partition-index objectives.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(invalid(format!("alpha must be a finite nonnegative number, got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A partition plus the objective values that describe it.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResult {
    pub partition: Partition,
    /// Value of the method's own objective on `partition`.
    pub objective: f64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub p_idx: Option<f64>,
    pub modularity_q: Option<f64>,
    /// Non-fatal conditions raised while solving, such as a fallback path.
    pub flags: Vec<String>,
}

impl PartitionResult {
    pub(crate) fn new(partition: Partition, objective: f64, method: Method) -> Self {
        Self { partition, objective, method, alpha: None, p_idx: None, modularity_q: None, flags: Vec::new() }
    }
}

/// Inputs of [`run_partitioner`]; each method reads the fields it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionerParams {
    pub alpha: Alpha,
    /// Scan order of the local search.
    pub seed: u64,
    pub modularity: ModularityOptions,
}

impl Default for PartitionerParams {
    fn default() -> Self {
        Self { alpha: Alpha(1.0), seed: 0, modularity: ModularityOptions::default() }
    }
}

/// Runs one partitioning engine by method id.
pub fn run_partitioner(g: &WeightedDigraph, method: Method, params: &PartitionerParams) -> Result<PartitionResult> {
    match method {
        Method::BqpExact => solve_bqp_exact(g, params.alpha, DEFAULT_MAX_EXACT_NODES),
        Method::BqpLocal => Ok(solve_bqp_local(g, params.alpha, params.seed)),
        Method::Greedy => Ok(greedy_partition(g, params.alpha)),
        Method::Modularity => modularity_bisect(g, params.modularity),
        Method::Oracle => solve_bqp_oracle(g, params.alpha),
    }
}

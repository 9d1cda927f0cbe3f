use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::objective::PairCosts;
use super::{bqp_objective, enumerate_partitions_oracle, partition_index, Alpha, Method, Partition, PartitionResult};
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;

/// Default node limit for [`solve_bqp_exact`].
pub const DEFAULT_MAX_EXACT_NODES: usize = 12;

struct ExactSearch<'a> {
    pc: &'a PairCosts,
    g: &'a WeightedDigraph,
    alpha: f64,
    /// `suffix_neg[i]` = Σ over unassigned pairs `i ≤ u < v` of `min(0, pair(u, v))`.
    suffix_neg: Vec<f64>,
    /// `to_set[v * n + s]` = Σ pair(v, t) over assigned `t` in set `s`.
    to_set: Vec<f64>,
    assignment: Vec<usize>,
    best: Option<(f64, f64, Vec<usize>)>,
}

impl ExactSearch<'_> {
    fn bound(&self, depth: usize, n_sets: usize, partial: f64) -> f64 {
        let n = self.pc.n;
        let mut lb = self.pc.constant + partial + self.suffix_neg[depth];
        for v in depth..n {
            let row = &self.to_set[v * n..v * n + n_sets];
            lb += row.iter().copied().fold(0.0, f64::min);
        }
        lb
    }

    fn visit(&mut self, depth: usize, n_sets: usize, partial: f64) {
        let n = self.pc.n;
        if depth == n {
            let p = Partition::from_assignment(self.assignment.clone()).expect("search builds restricted-growth strings");
            let literal = bqp_objective(&p, self.g, self.alpha);
            if self.best.as_ref().is_none_or(|b| literal < b.0) {
                self.best = Some((literal, self.pc.constant + partial, self.assignment.clone()));
            }
            return;
        }
        if let Some((_, best_pair, _)) = &self.best {
            let tol = 1e-9 * (1.0 + best_pair.abs());
            if self.bound(depth, n_sets, partial) > best_pair + tol {
                return;
            }
        }
        for s in 0..=n_sets {
            let gain = if s < n_sets { self.to_set[depth * n + s] } else { 0.0 };
            self.assignment[depth] = s;
            for v in (depth + 1)..n {
                self.to_set[v * n + s] += self.pc.get(v, depth);
            }
            self.visit(depth + 1, n_sets.max(s + 1), partial + gain);
            for v in (depth + 1)..n {
                self.to_set[v * n + s] -= self.pc.get(v, depth);
            }
        }
    }
}

/// Global minimizer of [`bqp_objective`] by branch and bound over
/// restricted-growth strings. Ties resolve to the lexicographically first
/// assignment.
pub fn solve_bqp_exact(g: &WeightedDigraph, alpha: Alpha, max_nodes: usize) -> Result<PartitionResult> {
    let n = g.node_count();
    if n > max_nodes {
        return Err(Error::TooLarge { n, limit: max_nodes, hint: "use solve_bqp_local for larger graphs" });
    }
    let a = alpha.get();
    let pc = PairCosts::new(g, a);
    let mut suffix_neg = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_neg[i] = suffix_neg[i + 1] + ((i + 1)..n).map(|v| pc.get(i, v).min(0.0)).sum::<f64>();
    }
    let mut search = ExactSearch {
        pc: &pc,
        g,
        alpha: a,
        suffix_neg,
        to_set: vec![0.0; n * n],
        assignment: vec![0; n],
        best: None,
    };
    search.visit(0, 0, 0.0);
    let (objective, _, assignment) = search.best.expect("at least one partition exists");
    let partition = Partition::from_assignment(assignment).expect("search builds restricted-growth strings");
    Ok(finish(g, partition, objective, a, Method::BqpExact))
}

/// Largest graph accepted by [`solve_bqp_oracle`].
pub const MAX_ORACLE_PARTITION_NODES: usize = 10;

/// Minimizer of [`bqp_objective`] by plain enumeration of every partition,
/// first in restricted-growth order on ties. Independent of the pruned
/// search in [`solve_bqp_exact`].
pub fn solve_bqp_oracle(g: &WeightedDigraph, alpha: Alpha) -> Result<PartitionResult> {
    let n = g.node_count();
    if n > MAX_ORACLE_PARTITION_NODES {
        return Err(Error::TooLarge { n, limit: MAX_ORACLE_PARTITION_NODES, hint: "use solve_bqp_exact or solve_bqp_local" });
    }
    let a = alpha.get();
    let mut best: Option<(f64, Partition)> = None;
    for p in enumerate_partitions_oracle(n)? {
        let v = bqp_objective(&p, g, a);
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, p));
        }
    }
    let (objective, partition) = best.expect("at least one partition exists");
    Ok(finish(g, partition, objective, a, Method::Oracle))
}

fn finish(g: &WeightedDigraph, partition: Partition, objective: f64, alpha: f64, method: Method) -> PartitionResult {
    let mut r = PartitionResult::new(partition, objective, method);
    r.alpha = Some(alpha);
    r.p_idx = Some(partition_index(&r.partition, g, alpha));
    r
}

#[derive(Clone, Copy, Debug)]
enum LocalMove {
    Move { node: usize, to: usize },
    Swap { a: usize, b: usize },
    Merge { a: usize, b: usize },
}

/// Local minimum of [`bqp_objective`] reached by steepest descent from all
/// singletons.
///
/// The neighbourhood holds single-node moves (into another set or a new one),
/// pairwise swaps and whole-set merges. `seed` fixes the candidate scan
/// order, which decides ties.
pub fn solve_bqp_local(g: &WeightedDigraph, alpha: Alpha, seed: u64) -> PartitionResult {
    let n = g.node_count();
    let a = alpha.get();
    let pc = PairCosts::new(g, a);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut assign: Vec<usize> = (0..n).collect();
    let mut value = pc.evaluate(&assign);
    loop {
        let k = assign.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; k];
        let mut to_set = vec![0.0; n * k];
        for (v, &s) in assign.iter().enumerate() {
            sizes[s] += 1;
            for t in 0..n {
                if t != v {
                    to_set[t * k + s] += pc.get(t, v);
                }
            }
        }
        let mut best: Option<(f64, LocalMove)> = None;
        let mut offer = |delta: f64, mv: LocalMove| {
            if best.as_ref().is_none_or(|b| delta < b.0) {
                best = Some((delta, mv));
            }
        };
        for &v in &order {
            let from = assign[v];
            let leave = to_set[v * k + from];
            for s in 0..k {
                if s != from {
                    offer(to_set[v * k + s] - leave, LocalMove::Move { node: v, to: s });
                }
            }
            if sizes[from] > 1 {
                offer(-leave, LocalMove::Move { node: v, to: k });
            }
        }
        for (i, &u) in order.iter().enumerate() {
            for &v in &order[i + 1..] {
                let (su, sv) = (assign[u], assign[v]);
                if su != sv {
                    let c = pc.get(u, v);
                    let delta = (to_set[u * k + sv] - c) - to_set[u * k + su] + (to_set[v * k + su] - c) - to_set[v * k + sv];
                    offer(delta, LocalMove::Swap { a: u, b: v });
                }
            }
        }
        for sa in 0..k {
            for sb in (sa + 1)..k {
                let delta: f64 = (0..n).filter(|&v| assign[v] == sa).map(|v| to_set[v * k + sb]).sum();
                offer(delta, LocalMove::Merge { a: sa, b: sb });
            }
        }
        let Some((delta, mv)) = best else { break };
        if delta >= -1e-12 * (1.0 + value.abs()) {
            break;
        }
        match mv {
            LocalMove::Move { node, to } => assign[node] = to,
            LocalMove::Swap { a, b } => assign.swap(a, b),
            LocalMove::Merge { a, b } => assign.iter_mut().filter(|s| **s == b).for_each(|s| *s = a),
        }
        assign = Partition::from_labels(&assign).assignment().to_vec();
        value += delta;
    }
    let partition = Partition::from_labels(&assign);
    let objective = bqp_objective(&partition, g, a);
    finish(g, partition, objective, a, Method::BqpLocal)
}

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Method, Partition, PartitionResult};
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;

/// Settings for [`modularity_bisect`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularityOptions {
    /// Use `|w|` instead of 0/1 adjacency.
    pub weighted: bool,
    /// A split is kept only when it raises Q by more than this.
    pub min_gain: f64,
    /// Recursion depth limit; 1 gives a single bisection.
    pub max_levels: usize,
    pub max_power_iter: usize,
    pub power_tol: f64,
    /// Extra seeded random starting splits refined alongside the spectral one.
    pub restarts: usize,
    /// Seed for the power-iteration start vector and the random splits.
    pub seed: u64,
}

impl Default for ModularityOptions {
    fn default() -> Self {
        Self { weighted: false, min_gain: 1e-12, max_levels: usize::MAX, max_power_iter: 20_000, power_tol: 1e-12, restarts: 8, seed: 0 }
    }
}

/// Modularity matrix `B = A − k kᵀ / total` of the symmetrized adjacency.
///
/// `A = a + aᵀ` where `a` is the 0/1 (or `|w|`) adjacency without self-loops;
/// `k` are the row sums of `A` and `total = Σ A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModularityMatrix {
    pub adjacency: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub degrees: DVector<f64>,
    pub total: f64,
}

impl ModularityMatrix {
    pub fn new(g: &WeightedDigraph, weighted: bool) -> Result<Self> {
        let n = g.node_count();
        let mut adj = DMatrix::zeros(n, n);
        for e in g.edges() {
            if e.src == e.dst {
                continue;
            }
            let v = if weighted { e.weight.abs() } else { 1.0 };
            adj[(e.src, e.dst)] += v;
            adj[(e.dst, e.src)] += v;
        }
        let degrees = DVector::from_iterator(n, (0..n).map(|i| (0..n).map(|j| adj[(i, j)]).sum::<f64>()));
        let total: f64 = degrees.iter().sum();
        if total <= 0.0 {
            return Err(Error::NoEdges);
        }
        let b = &adj - &degrees * degrees.transpose() / total;
        Ok(Self { adjacency: adj, b, degrees, total })
    }

    /// `Q = (1/total) Σ_{i,j in the same set} B(i,j)`, evaluated per set as
    /// `e_s / total − (K_s / total)²` so the grand coalition gives exactly 0.
    pub fn q(&self, p: &Partition) -> f64 {
        p.sets()
            .iter()
            .map(|set| {
                let inner: f64 = set.iter().map(|&i| set.iter().map(|&j| self.adjacency[(i, j)]).sum::<f64>()).sum();
                let k: f64 = set.iter().map(|&i| self.degrees[i]).sum();
                inner / self.total - (k / self.total) * (k / self.total)
            })
            .sum()
    }

    /// Generalized matrix of a node group: `B[g,g]` minus its row sums on the diagonal.
    fn restricted(&self, group: &[usize]) -> DMatrix<f64> {
        let m = group.len();
        let mut bg = DMatrix::from_fn(m, m, |r, c| self.b[(group[r], group[c])]);
        for r in 0..m {
            let s: f64 = bg.row(r).sum();
            bg[(r, r)] -= s;
        }
        bg
    }
}

/// Modularity of `p` on the symmetrized 0/1 (or `|w|`-weighted) adjacency.
pub fn modularity(g: &WeightedDigraph, p: &Partition, weighted: bool) -> Result<f64> {
    if p.len() != g.node_count() {
        return Err(crate::error::invalid("partition does not cover the graph"));
    }
    Ok(ModularityMatrix::new(g, weighted)?.q(p))
}

/// Leading eigenvector of a symmetric matrix by shifted power iteration.
fn leading_eigenvector(m: &DMatrix<f64>, opts: &ModularityOptions, rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
    let n = m.nrows();
    let shift = m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let shifted = m + DMatrix::identity(n, n) * shift;
    let mut v = DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
    v /= v.norm();
    for _ in 0..opts.max_power_iter {
        let mut next = &shifted * &v;
        let norm = next.norm();
        if norm == 0.0 {
            return Some(v);
        }
        next /= norm;
        let diff = (&next - &v).norm();
        v = next;
        if diff < opts.power_tol {
            return Some(v);
        }
    }
    None
}

/// Node-shift refinement: repeated passes that move every node once, in
/// order of best gain, and keep the best intermediate split.
fn fine_tune(bg: &DMatrix<f64>, s: &mut [f64]) {
    let m = s.len();
    let gain_of = |s: &[f64], v: usize| -> f64 {
        let mut acc = 0.0;
        for j in 0..m {
            if j != v {
                acc += bg[(v, j)] * s[j];
            }
        }
        -4.0 * s[v] * acc
    };
    // a cumulative gain this small is rounding noise
    let tol = 1e-12 * (1.0 + bg.iter().map(|v| v.abs()).sum::<f64>());
    loop {
        let mut moved = vec![false; m];
        let mut work = s.to_vec();
        let (mut cum, mut best_cum, mut best_len) = (0.0, 0.0, 0usize);
        let mut order = Vec::with_capacity(m);
        for step in 0..m {
            let mut pick: Option<(usize, f64)> = None;
            for v in (0..m).filter(|&v| !moved[v]) {
                let g = gain_of(&work, v);
                if pick.is_none_or(|p| g > p.1) {
                    pick = Some((v, g));
                }
            }
            let (v, g) = pick.expect("unmoved nodes remain");
            moved[v] = true;
            work[v] = -work[v];
            order.push(v);
            cum += g;
            // flipping every node gives back the same split
            if step + 1 < m && cum > best_cum + tol {
                best_cum = cum;
                best_len = step + 1;
            }
        }
        if best_len == 0 {
            return;
        }
        for &v in &order[..best_len] {
            s[v] = -s[v];
        }
    }
}

/// Community detection by recursive spectral bisection of the modularity matrix.
pub fn modularity_bisect(g: &WeightedDigraph, opts: ModularityOptions) -> Result<PartitionResult> {
    let mm = ModularityMatrix::new(g, opts.weighted)?;
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut flags = Vec::new();
    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut pending: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), 0)];
    while let Some((group, level)) = pending.pop() {
        if group.len() < 2 || level >= opts.max_levels {
            done.push(group);
            continue;
        }
        let bg = mm.restricted(&group);
        let m = group.len();
        let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.restarts + 1);
        match leading_eigenvector(&bg, &opts, &mut rng) {
            Some(v) => starts.push(v.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect()),
            None => flags.push("power-iteration-fallback".to_string()),
        }
        let random_starts = if starts.is_empty() { opts.restarts.max(1) } else { opts.restarts };
        for _ in 0..random_starts {
            starts.push((0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect());
        }
        let split_value = |s: &[f64]| {
            let sv = DVector::from_column_slice(s);
            (sv.transpose() * &bg * &sv)[(0, 0)]
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mut s in starts {
            fine_tune(&bg, &mut s);
            let v = split_value(&s);
            if best.as_ref().is_none_or(|b| v > b.0 + 1e-13) {
                best = Some((v, s));
            }
        }
        let (value, s) = best.expect("at least one start");
        let gain = value / (2.0 * mm.total);
        let left: Vec<usize> = group.iter().zip(&s).filter(|(_, &x)| x > 0.0).map(|(&i, _)| i).collect();
        let right: Vec<usize> = group.iter().zip(&s).filter(|(_, &x)| x < 0.0).map(|(&i, _)| i).collect();
        if gain <= opts.min_gain || left.is_empty() || right.is_empty() {
            done.push(group);
            continue;
        }
        // right is pushed first so the left half is processed next
        pending.push((right, level + 1));
        pending.push((left, level + 1));
    }
    done.sort();
    let partition = Partition::from_sets(n, &done).expect("bisection keeps every node exactly once").canonical();
    let q = mm.q(&partition);
    let mut r = PartitionResult::new(partition, q, Method::Modularity);
    r.modularity_q = Some(q);
    r.flags = flags;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions_oracle;
    use proptest::prelude::*;

    fn undirected(n: usize, pairs: &[(usize, usize)]) -> WeightedDigraph {
        WeightedDigraph::from_edges(n, pairs.iter().flat_map(|&(a, b)| [(a, b, 1.0), (b, a, 1.0)])).unwrap()
    }

    fn two_triangles() -> WeightedDigraph {
        undirected(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    #[test]
    fn triangles() {
        let g = two_triangles();
        let p = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!((modularity(&g, &p, false).unwrap() - 0.5).abs() < 1e-12);
        let r = modularity_bisect(&g, ModularityOptions::default()).unwrap();
        assert!(r.partition.same_grouping(&p));
        assert!((r.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_network_terminates() {
        // exact ties used to make the refinement flip the whole group forever
        let r = modularity_bisect(&crate::generators::modular64_graph(), ModularityOptions::default()).unwrap();
        assert_eq!(r.partition.set_sizes(), vec![16; 4]);
    }

    #[test]
    fn complete_graph_is_not_split() {
        let pairs: Vec<_> = (0..6).flat_map(|i| ((i + 1)..6).map(move |j| (i, j))).collect();
        let g = undirected(6, &pairs);
        let r = modularity_bisect(&g, ModularityOptions::default()).unwrap();
        assert_eq!(r.partition.n_sets(), 1);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn edgeless_rejected() {
        let g = WeightedDigraph::with_agents(3);
        assert!(matches!(modularity(&g, &Partition::grand(3), false), Err(Error::NoEdges)));
    }

    #[test]
    fn singletons_on_cycle_match_formula() {
        // 2-regular ring: Q(singletons) = -Σ k_i² / total² = -n·4 / (2n)² = -1/n
        let n = 8;
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let g = undirected(n, &pairs);
        let q = modularity(&g, &Partition::singletons(n), false).unwrap();
        assert!((q + 1.0 / n as f64).abs() < 1e-14);
    }

    fn arb_undirected() -> impl Strategy<Value = WeightedDigraph> {
        (3usize..9).prop_flat_map(|n| {
            proptest::collection::btree_set((0..n, 0..n), 1..(n * n)).prop_filter_map("needs an off-diagonal edge", move |set| {
                let pairs: Vec<(usize, usize)> = set.into_iter().filter(|(a, b)| a < b).collect();
                (!pairs.is_empty()).then(|| undirected(n, &pairs))
            })
        })
    }

    proptest! {
        #[test]
        fn grand_coalition_is_zero(g in arb_undirected()) {
            let q = modularity(&g, &Partition::grand(g.node_count()), false).unwrap();
            prop_assert!(q.abs() < 1e-12);
        }

        #[test]
        fn relabeling_invariance(g in arb_undirected(), labels in proptest::collection::vec(0usize..3, 9), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let n = g.node_count();
            let p = Partition::from_labels(&labels[..n]);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let q1 = modularity(&g, &p, false).unwrap();
            let q2 = modularity(&g.relabel(&perm).unwrap(), &p.relabel_nodes(&perm), false).unwrap();
            prop_assert!((q1 - q2).abs() < 1e-12);
        }

        #[test]
        fn bisection_never_negative_and_matches_best_split(g in arb_undirected()) {
            let opts = ModularityOptions { max_levels: 1, ..Default::default() };
            let r = modularity_bisect(&g, opts).unwrap();
            prop_assert!(r.objective >= 0.0);
            let best = enumerate_partitions_oracle(g.node_count()).unwrap()
                .filter(|p| p.n_sets() <= 2)
                .map(|p| modularity(&g, &p, false).unwrap())
                .fold(0.0, f64::max);
            prop_assert!((r.objective - best).abs() < 1e-9, "bisect {} best {}", r.objective, best);
        }
    }
}

use super::Partition;
use crate::graph::WeightedDigraph;

fn check_cover(p: &Partition, g: &WeightedDigraph) {
    assert_eq!(p.len(), g.node_count(), "partition covers {} nodes, graph has {}", p.len(), g.node_count());
}

/// BQP partition cost `W_inter − W_intra + α·W_size`.
///
/// `W_inter` sums `|w(i,j)| + |w(j,i)|` over ordered pairs in different sets,
/// `W_intra` sums `|w(i,i)| + |w(i,j)| + |w(j,i)| + |w(j,j)|` over ordered pairs
/// (including `i = j`) in the same set, and `W_size` is the sum of squared set sizes.
///
/// # Panics
/// If `p` does not cover exactly the nodes of `g`.
pub fn bqp_objective(p: &Partition, g: &WeightedDigraph, alpha: f64) -> f64 {
    check_cover(p, g);
    let n = g.node_count();
    let w = g.abs_weight_matrix();
    let a = |i: usize, j: usize| w[i * n + j];
    let (mut inter, mut intra) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if p.set_of(i) == p.set_of(j) {
                intra += a(i, i) + a(i, j) + a(j, i) + a(j, j);
            } else {
                inter += a(i, j) + a(j, i);
            }
        }
    }
    let size: f64 = p.set_sizes().iter().map(|&s| (s * s) as f64).sum();
    inter - intra + alpha * size
}

/// Partition index `ΣW_intra / (1 + ΣW_inter) + α / (1 + ΣW_size)`.
///
/// `W_intra` of a set sums `|w(s,t)|` over its ordered node pairs; `W_inter`
/// sums `|w(s,t)| + |w(t,s)|` from each frontier node `s` to each neighbor `t`
/// in another set.
///
/// # Panics
/// If `p` does not cover exactly the nodes of `g`.
pub fn partition_index(p: &Partition, g: &WeightedDigraph, alpha: f64) -> f64 {
    check_cover(p, g);
    let n = g.node_count();
    let w = g.abs_weight_matrix();
    let (mut intra, mut inter) = (0.0, 0.0);
    for set in p.sets() {
        for &s in &set {
            for &t in &set {
                intra += w[s * n + t];
            }
        }
        let frontier = g.frontier(&set).expect("set members are graph nodes");
        for s in frontier {
            for t in g.neighborhood(s).expect("frontier nodes exist") {
                if p.set_of(t) != p.set_of(s) {
                    inter += w[s * n + t] + w[t * n + s];
                }
            }
        }
    }
    let size: f64 = p.set_sizes().iter().map(|&s| (s * s) as f64).sum();
    intra / (1.0 + inter) + alpha / (1.0 + size)
}

/// The BQP cost rewritten as `constant + Σ_{i<j in the same set} pair(i, j)`.
#[derive(Clone, Debug)]
pub(crate) struct PairCosts {
    pub n: usize,
    pub constant: f64,
    pair: Vec<f64>,
}

impl PairCosts {
    pub fn new(g: &WeightedDigraph, alpha: f64) -> Self {
        let n = g.node_count();
        let w = g.abs_weight_matrix();
        let selfw = |i: usize| w[i * n + i];
        let mut pair = vec![0.0; n * n];
        let mut constant = 0.0;
        for i in 0..n {
            constant += alpha - 4.0 * selfw(i);
            for j in 0..n {
                if i != j {
                    let sym = w[i * n + j] + w[j * n + i];
                    pair[i * n + j] = -2.0 * (selfw(i) + selfw(j)) - 4.0 * sym + 2.0 * alpha;
                    if i < j {
                        constant += 2.0 * sym;
                    }
                }
            }
        }
        Self { n, constant, pair }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.n + j]
    }

    pub fn evaluate(&self, assignment: &[usize]) -> f64 {
        let mut v = self.constant;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if assignment[i] == assignment[j] {
                    v += self.get(i, j);
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions_oracle;
    use proptest::prelude::*;

    fn two_node() -> WeightedDigraph {
        WeightedDigraph::from_edges(2, [(0, 1, 0.5)]).unwrap()
    }

    #[test]
    fn two_node_bqp_values() {
        let g = two_node();
        let alpha = 0.3;
        assert!((bqp_objective(&Partition::grand(2), &g, alpha) - (-1.0 + 4.0 * alpha)).abs() < 1e-15);
        assert!((bqp_objective(&Partition::singletons(2), &g, alpha) - (1.0 + 2.0 * alpha)).abs() < 1e-15);
    }

    #[test]
    fn edgeless_bqp_is_size_term() {
        let g = WeightedDigraph::with_agents(5);
        assert_eq!(bqp_objective(&Partition::singletons(5), &g, 0.7), 0.7 * 5.0);
        let p = Partition::from_assignment(vec![0, 0, 1, 1, 1]).unwrap();
        assert_eq!(bqp_objective(&p, &g, 0.7), 0.7 * 13.0);
    }

    #[test]
    fn two_node_partition_index() {
        let g = two_node();
        for alpha in [0.0, 1.0, 3.75, 10.0] {
            assert!((partition_index(&Partition::grand(2), &g, alpha) - (0.5 + alpha / 5.0)).abs() < 1e-15);
            assert!((partition_index(&Partition::singletons(2), &g, alpha) - alpha / 3.0).abs() < 1e-15);
        }
        let e = WeightedDigraph::with_agents(6);
        assert!((partition_index(&Partition::singletons(6), &e, 2.0) - 2.0 / 7.0).abs() < 1e-15);
    }

    fn arb_graph() -> impl Strategy<Value = WeightedDigraph> {
        (1usize..7).prop_flat_map(|n| {
            proptest::collection::btree_map((0..n, 0..n), -1.0f64..1.0, 0..(n * n))
                .prop_map(move |m| WeightedDigraph::from_edges(n, m.into_iter().map(|((s, d), w)| (s, d, w))).unwrap())
        })
    }

    fn arb_labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..4, n)
    }

    proptest! {
        #[test]
        fn pair_form_matches_literal(g in arb_graph(), alpha in 0.0f64..2.0, labels in arb_labels(7)) {
            let n = g.node_count();
            let p = Partition::from_labels(&labels[..n]);
            let pc = PairCosts::new(&g, alpha);
            let lit = bqp_objective(&p, &g, alpha);
            prop_assert!((pc.evaluate(p.assignment()) - lit).abs() <= 1e-12 * (1.0 + lit.abs()));
        }

        #[test]
        fn objectives_ignore_set_numbering(g in arb_graph(), alpha in 0.0f64..2.0, labels in arb_labels(7), shift in 1usize..4) {
            let n = g.node_count();
            let p = Partition::from_labels(&labels[..n]);
            let k = p.n_sets();
            let relabeled = Partition::from_assignment(p.assignment().iter().map(|s| (s + shift) % k).collect()).unwrap();
            prop_assert!((bqp_objective(&p, &g, alpha) - bqp_objective(&relabeled, &g, alpha)).abs() < 1e-12);
            prop_assert!((partition_index(&p, &g, alpha) - partition_index(&relabeled, &g, alpha)).abs() < 1e-12);
        }

        #[test]
        fn weight_scaling_keeps_argmin(g in arb_graph(), alpha in 0.0f64..2.0, c in 0.1f64..10.0) {
            let n = g.node_count();
            let scaled = WeightedDigraph::from_edges(n, g.edges().iter().map(|e| (e.src, e.dst, c * e.weight))).unwrap();
            let argmin = |g: &WeightedDigraph, a: f64| {
                enumerate_partitions_oracle(n).unwrap()
                    .map(|p| (bqp_objective(&p, g, a), p))
                    .min_by(|x, y| x.0.total_cmp(&y.0))
                    .unwrap()
            };
            let (v1, _) = argmin(&g, alpha);
            let (v2, p2) = argmin(&scaled, c * alpha);
            // the minimizer of the scaled problem is optimal for the original one
            prop_assert!((c * v1 - v2).abs() <= 1e-9 * (1.0 + v2.abs()));
            prop_assert!((bqp_objective(&p2, &g, alpha) - v1).abs() <= 1e-9 * (1.0 + v1.abs()));
        }
    }
}

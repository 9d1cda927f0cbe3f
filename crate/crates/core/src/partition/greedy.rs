use super::{partition_index, Alpha, Method, Partition, PartitionResult};
use crate::graph::WeightedDigraph;

/// Smallest partition-index gain that counts as an improvement.
pub const GREEDY_MIN_GAIN: f64 = 1e-12;

/// Partitions visited by the greedy ascent, with their partition index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GreedyTrace {
    /// Starting partition followed by the result of each accepted move.
    pub partitions: Vec<Partition>,
    pub p_idx: Vec<f64>,
}

/// Running sums that determine the partition index.
struct IndexState {
    self_loops: f64,
    total_sym: f64,
    alpha: f64,
}

impl IndexState {
    fn value(&self, intra_sym: f64, size_sq: f64) -> f64 {
        (self.self_loops + intra_sym) / (1.0 + 2.0 * (self.total_sym - intra_sym)) + self.alpha / (1.0 + size_sq)
    }
}

#[derive(Clone, Copy)]
enum GreedyMove {
    Move { node: usize, to: usize },
    Merge { a: usize, b: usize },
}

/// Greedy ascent of [`partition_index`] from all singletons.
///
/// Each round applies the single-node transfer or whole-set merge with the
/// largest gain, stopping when no gain exceeds [`GREEDY_MIN_GAIN`]. Ties go to
/// the lowest node id, then the lowest target set; merges come after moves.
pub fn greedy_partition(g: &WeightedDigraph, alpha: Alpha) -> PartitionResult {
    greedy_partition_traced(g, alpha).0
}

/// [`greedy_partition`] together with the sequence of accepted partitions.
pub fn greedy_partition_traced(g: &WeightedDigraph, alpha: Alpha) -> (PartitionResult, GreedyTrace) {
    let n = g.node_count();
    let a = alpha.get();
    let w = g.abs_weight_matrix();
    let sym = |i: usize, j: usize| w[i * n + j] + w[j * n + i];
    let state = IndexState {
        self_loops: (0..n).map(|i| w[i * n + i]).sum(),
        total_sym: (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| sym(i, j)).sum(),
        alpha: a,
    };

    let mut assign: Vec<usize> = (0..n).collect();
    let mut intra = 0.0;
    let mut size_sq = n as f64;
    let mut trace = GreedyTrace::default();
    let record = |assign: &[usize], trace: &mut GreedyTrace| {
        let p = Partition::from_labels(assign);
        trace.p_idx.push(partition_index(&p, g, a));
        trace.partitions.push(p);
    };
    record(&assign, &mut trace);

    loop {
        let current = state.value(intra, size_sq);
        let k = assign.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; k];
        let mut to_set = vec![0.0; n * k];
        for (v, &s) in assign.iter().enumerate() {
            sizes[s] += 1;
            for t in 0..n {
                if t != v {
                    to_set[t * k + s] += sym(t, v);
                }
            }
        }
        let mut best: Option<(f64, GreedyMove, f64, f64)> = None;
        let mut offer = |d_intra: f64, d_size: f64, mv: GreedyMove| {
            let gain = state.value(intra + d_intra, size_sq + d_size) - current;
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, mv, d_intra, d_size));
            }
        };
        for v in 0..n {
            let from = assign[v];
            let leave = to_set[v * k + from];
            let sf = sizes[from] as f64;
            for s in 0..k {
                if s != from {
                    let d_size = 2.0 * (sizes[s] as f64 - sf + 1.0);
                    offer(to_set[v * k + s] - leave, d_size, GreedyMove::Move { node: v, to: s });
                }
            }
            if sizes[from] > 1 {
                offer(-leave, 2.0 * (1.0 - sf), GreedyMove::Move { node: v, to: k });
            }
        }
        for sa in 0..k {
            for sb in (sa + 1)..k {
                let d_intra: f64 = (0..n).filter(|&v| assign[v] == sa).map(|v| to_set[v * k + sb]).sum();
                let d_size = 2.0 * (sizes[sa] * sizes[sb]) as f64;
                offer(d_intra, d_size, GreedyMove::Merge { a: sa, b: sb });
            }
        }
        let Some((gain, mv, d_intra, d_size)) = best else { break };
        if gain <= GREEDY_MIN_GAIN {
            break;
        }
        match mv {
            GreedyMove::Move { node, to } => assign[node] = to,
            GreedyMove::Merge { a, b } => assign.iter_mut().filter(|s| **s == b).for_each(|s| *s = a),
        }
        assign = Partition::from_labels(&assign).assignment().to_vec();
        intra += d_intra;
        size_sq += d_size;
        record(&assign, &mut trace);
    }

    let partition = Partition::from_labels(&assign);
    let p_idx = partition_index(&partition, g, a);
    let mut r = PartitionResult::new(partition, p_idx, Method::Greedy);
    r.alpha = Some(a);
    r.p_idx = Some(p_idx);
    (r, trace)
}

/// Every partition one greedy move away from `p`: single-node transfers
/// (to another set or a new one) and merges of two sets.
pub fn greedy_neighbors(p: &Partition) -> Vec<Partition> {
    let k = p.n_sets();
    let sizes = p.set_sizes();
    let mut out = Vec::new();
    for v in 0..p.len() {
        let from = p.set_of(v);
        for s in 0..=k {
            if s == from || (s == k && sizes[from] == 1) {
                continue;
            }
            let mut a = p.assignment().to_vec();
            a[v] = s;
            out.push(Partition::from_labels(&a));
        }
    }
    for sa in 0..k {
        for sb in (sa + 1)..k {
            let a: Vec<usize> = p.assignment().iter().map(|&s| if s == sb { sa } else { s }).collect();
            out.push(Partition::from_labels(&a));
        }
    }
    out
}

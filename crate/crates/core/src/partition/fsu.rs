use std::collections::VecDeque;

use super::Partition;
use crate::error::{invalid, Error, Result};
use crate::graph::{NodeKind, WeightedDigraph};

/// Fundamental system unit: one input node and the nodes allocated to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsu {
    pub input: usize,
    /// All members, including `input`, ascending.
    pub members: Vec<usize>,
}

/// Selects one FSU per input node.
///
/// Starting from the inputs, the unallocated node with the strongest coupling
/// (largest `|w|` in either direction) to a current FSU member joins that FSU.
/// Ties go to the lowest FSU index, then the lowest node id. A state node with
/// no undirected path to any input is rejected as unactuated.
pub fn select_fsu(g: &WeightedDigraph) -> Result<Vec<Fsu>> {
    let n = g.node_count();
    let inputs: Vec<usize> = g.nodes_of(NodeKind::Input).collect();
    if inputs.is_empty() {
        return Err(invalid("FSU selection needs at least one input node"));
    }

    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = inputs.iter().copied().collect();
    for &i in &inputs {
        reached[i] = true;
    }
    while let Some(v) = queue.pop_front() {
        for t in g.neighborhood(v)? {
            if !reached[t] {
                reached[t] = true;
                queue.push_back(t);
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| !reached[v]) {
        return Err(Error::Unactuated(v));
    }

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (k, &i) in inputs.iter().enumerate() {
        owner[i] = Some(k);
    }
    // best[v] = (weight, fsu) of the strongest link from v to an allocated node
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let offer = |best: &mut Vec<Option<(f64, usize)>>, owner: &[Option<usize>], v: usize| {
        let k = owner[v].expect("offer is called for allocated nodes");
        let links = g.out_edges(v).map(|e| (e.dst, e.weight)).chain(g.in_edges(v).map(|e| (e.src, e.weight)));
        for (t, w) in links {
            if owner[t].is_some() {
                continue;
            }
            let cand = (w.abs(), k);
            let better = match best[t] {
                None => true,
                Some((bw, bk)) => cand.0 > bw || (cand.0 == bw && k < bk),
            };
            if better {
                best[t] = Some(cand);
            }
        }
    };
    for &i in &inputs {
        offer(&mut best, &owner, i);
    }
    loop {
        let pick = (0..n)
            .filter(|&v| owner[v].is_none())
            .filter_map(|v| best[v].map(|(w, k)| (v, w, k)))
            .fold(None::<(usize, f64, usize)>, |acc, c| match acc {
                None => Some(c),
                Some(a) if c.1 > a.1 || (c.1 == a.1 && c.2 < a.2) => Some(c),
                keep => keep,
            });
        let Some((v, _, k)) = pick else { break };
        owner[v] = Some(k);
        offer(&mut best, &owner, v);
    }

    let mut fsus: Vec<Fsu> = inputs.iter().map(|&i| Fsu { input: i, members: Vec::new() }).collect();
    for (v, o) in owner.iter().enumerate() {
        // every node is connected to an input, so all nodes are allocated
        fsus[o.expect("reachability checked above")].members.push(v);
    }
    Ok(fsus)
}

impl Fsu {
    /// Partition of the graph nodes induced by a list of FSUs.
    pub fn to_partition(fsus: &[Fsu], n: usize) -> Result<Partition> {
        let sets: Vec<Vec<usize>> = fsus.iter().map(|f| f.members.clone()).collect();
        Partition::from_sets(n, &sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_associated_graph;
    use crate::model::SubsystemModel;
    use nalgebra::DMatrix;

    fn example_system() -> SubsystemModel {
        let mut a = DMatrix::zeros(10, 10);
        for &(r, c, v) in &[
            (2, 1, 0.5), (6, 1, 0.1), (8, 2, 0.84), (9, 2, 0.57), (8, 4, 0.54), (9, 5, 0.91),
            (2, 6, 0.98), (3, 6, 0.96), (5, 6, 0.8), (6, 7, 0.6), (2, 8, 0.31),
        ] {
            a[(r - 1, c - 1)] = v;
        }
        let mut b = DMatrix::zeros(10, 3);
        for &(r, c, v) in &[(4, 1, 0.04), (9, 1, 0.6), (10, 1, 0.63), (2, 2, 0.02), (4, 2, 0.6), (10, 2, 0.11), (1, 3, 0.19), (2, 3, 0.03)] {
            b[(r - 1, c - 1)] = v;
        }
        SubsystemModel::linear(a, b, None).unwrap()
    }

    #[test]
    fn example_graph_and_fsus() {
        let g = build_associated_graph(&example_system()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (13, 19));
        let fsus = select_fsu(&g).unwrap();
        assert_eq!(fsus.len(), 3);
        let covered: usize = fsus.iter().map(|f| f.members.iter().filter(|&&v| g.kind(v) == NodeKind::State).count()).sum();
        assert_eq!(covered, 10);
        for f in &fsus {
            assert_eq!(f.members.iter().filter(|&&v| g.kind(v) == NodeKind::Input).count(), 1);
        }
        Fsu::to_partition(&fsus, 13).unwrap();
    }

    #[test]
    fn disjoint_chains() {
        // u1 -> x1 -> x2, u2 -> x3 -> x4
        let kinds = vec![NodeKind::Input, NodeKind::Input, NodeKind::State, NodeKind::State, NodeKind::State, NodeKind::State];
        let mut g = WeightedDigraph::new(kinds);
        for (s, d) in [(0, 2), (2, 3), (1, 4), (4, 5)] {
            g.add_edge(s, d, 1.0).unwrap();
        }
        let fsus = select_fsu(&g).unwrap();
        assert_eq!(fsus[0].members, vec![0, 2, 3]);
        assert_eq!(fsus[1].members, vec![1, 4, 5]);
    }

    #[test]
    fn single_input_takes_everything_and_isolated_state_fails() {
        let mut g = WeightedDigraph::new(vec![NodeKind::Input, NodeKind::State, NodeKind::State]);
        g.add_edge(0, 1, 0.3).unwrap();
        g.add_edge(2, 1, 0.3).unwrap();
        assert_eq!(select_fsu(&g).unwrap()[0].members, vec![0, 1, 2]);
        let g = WeightedDigraph::new(vec![NodeKind::Input, NodeKind::State]);
        assert!(matches!(select_fsu(&g), Err(Error::Unactuated(1))));
    }
}

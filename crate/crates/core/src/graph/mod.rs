//! Weighted directed graphs and the graph views of a dynamical network.

mod agent;
mod associated;
mod bipartite;

pub use agent::build_agent_graph;
pub use associated::{build_associated_graph, build_associated_graph_nonlinear, FiniteDiff};
pub use bipartite::{bipartite_constraint_graph, BipartiteGraph};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{invalid, Error, Result};

/// Role of a node in a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Input,
    State,
    Output,
    Agent,
}

impl NodeKind {
    fn prefix(self) -> &'static str {
        match self {
            NodeKind::Input => "u",
            NodeKind::State => "x",
            NodeKind::Output => "y",
            NodeKind::Agent => "a",
        }
    }
}

/// A directed, weighted edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Directed graph with kind-tagged nodes and finite real edge weights.
///
/// Node ids are dense and 0-based. At most one edge exists per ordered pair.
#[derive(Clone, Debug, Default)]
pub struct WeightedDigraph {
    kinds: Vec<NodeKind>,
    ordinals: Vec<usize>,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize), usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl WeightedDigraph {
    /// Graph with the given node kinds and no edges.
    pub fn new(kinds: Vec<NodeKind>) -> Self {
        let mut counters: BTreeMap<NodeKind, usize> = BTreeMap::new();
        let ordinals = kinds
            .iter()
            .map(|k| {
                let c = counters.entry(*k).or_default();
                *c += 1;
                *c
            })
            .collect();
        let n = kinds.len();
        Self {
            kinds,
            ordinals,
            edges: Vec::new(),
            index: HashMap::new(),
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
        }
    }

    /// Graph of `n` agent nodes.
    pub fn with_agents(n: usize) -> Self {
        Self::new(vec![NodeKind::Agent; n])
    }

    /// Builds an agent graph from `(src, dst, weight)` triples.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::with_agents(n);
        for (s, d, w) in edges {
            g.add_edge(s, d, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, weight: f64) -> Result<()> {
        self.check_node(src)?;
        self.check_node(dst)?;
        if !weight.is_finite() {
            return Err(invalid(format!("edge {src}->{dst} has non-finite weight")));
        }
        if self.index.contains_key(&(src, dst)) {
            return Err(invalid(format!("duplicate edge {src}->{dst}")));
        }
        let id = self.edges.len();
        self.edges.push(Edge { src, dst, weight });
        self.index.insert((src, dst), id);
        self.out_adj[src].push(id);
        self.in_adj[dst].push(id);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Human-readable label such as `u1`, `x3` or `a12`, numbered within each kind.
    pub fn label(&self, node: usize) -> String {
        format!("{}{}", self.kinds[node].prefix(), self.ordinals[node])
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| self.kinds[i] == kind)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.index.get(&(src, dst)).map(|&e| self.edges[e].weight)
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.out_adj[node].iter().map(|&e| &self.edges[e])
    }

    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.in_adj[node].iter().map(|&e| &self.edges[e])
    }

    /// In-degree plus out-degree, self-loops counted once.
    pub fn degree(&self, node: usize) -> usize {
        let loops = usize::from(self.index.contains_key(&(node, node)));
        self.out_adj[node].len() + self.in_adj[node].len() - loops
    }

    /// Map from degree to number of nodes with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for i in 0..self.node_count() {
            *h.entry(self.degree(i)).or_insert(0) += 1;
        }
        h
    }

    /// Nodes adjacent to `node` in either direction, excluding `node` itself.
    pub fn neighborhood(&self, node: usize) -> Result<BTreeSet<usize>> {
        self.check_node(node)?;
        Ok(self
            .out_edges(node)
            .map(|e| e.dst)
            .chain(self.in_edges(node).map(|e| e.src))
            .filter(|&j| j != node)
            .collect())
    }

    /// Members of `subset` adjacent to at least one node outside it.
    pub fn frontier(&self, subset: &[usize]) -> Result<BTreeSet<usize>> {
        let mut inside = vec![false; self.node_count()];
        for &i in subset {
            self.check_node(i)?;
            inside[i] = true;
        }
        let mut out = BTreeSet::new();
        for e in &self.edges {
            if inside[e.src] != inside[e.dst] {
                out.insert(if inside[e.src] { e.src } else { e.dst });
            }
        }
        Ok(out)
    }

    /// Dense row-major matrix `m[i*n + j] = |w(i->j)|`.
    pub fn abs_weight_matrix(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut m = vec![0.0; n * n];
        for e in &self.edges {
            m[e.src * n + e.dst] = e.weight.abs();
        }
        m
    }

    /// Graph with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n || perm.iter().collect::<BTreeSet<_>>().len() != n || perm.iter().any(|&p| p >= n) {
            return Err(invalid("relabeling is not a permutation of the node set"));
        }
        let mut kinds = vec![NodeKind::Agent; n];
        for (i, &p) in perm.iter().enumerate() {
            kinds[p] = self.kinds[i];
        }
        let mut g = Self::new(kinds);
        for e in &self.edges {
            g.add_edge(perm[e.src], perm[e.dst], e.weight)?;
        }
        Ok(g)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(node))
        }
    }
}

impl fmt::Display for WeightedDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nodes, {} edges", self.node_count(), self.edge_count())
    }
}

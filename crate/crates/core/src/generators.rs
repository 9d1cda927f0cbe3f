//! Built-in networks: the 50-agent benchmark, the 64-agent modular network
//! and seeded random families.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::WeightedDigraph;
use crate::model::{Coupling, Interval, NetworkModel, SubsystemModel};
use crate::topology::{EdgeLayers, Layer, Schedule, TopologyLayers};

/// `(i, j, w)`: agent `j` drives agent `i` with weight `w`, 1-based.
pub const BENCHMARK50_WEIGHTS: [(usize, usize, f64); 52] = [
    (1, 25, 0.53), (2, 3, 0.36), (2, 12, 0.01), (3, 33, 0.60), (4, 26, 0.41),
    (5, 31, 0.47), (6, 38, 0.32), (7, 33, 0.24), (8, 19, 0.24), (9, 49, 0.20),
    (10, 40, 0.36), (11, 35, 0.72), (12, 2, 0.01), (12, 10, 0.42), (13, 7, 0.17),
    (14, 44, 0.44), (15, 31, 0.67), (16, 7, 0.46), (17, 28, 0.42), (18, 40, 0.76),
    (19, 14, 0.67), (20, 31, 0.55), (21, 34, 0.37), (22, 4, 0.66), (23, 1, 0.20),
    (24, 47, 0.51), (25, 46, 0.78), (26, 41, 0.10), (27, 40, 0.60), (28, 22, 0.35),
    (29, 47, 0.43), (30, 46, 0.16), (31, 13, 0.68), (32, 15, 0.34), (33, 10, 0.66),
    (34, 29, 0.19), (35, 6, 0.43), (36, 33, 0.60), (37, 7, 0.41), (38, 36, 0.40),
    (39, 46, 0.23), (40, 36, 0.44), (41, 35, 0.31), (42, 39, 0.66), (43, 38, 0.39),
    (44, 29, 0.19), (45, 39, 0.49), (46, 21, 0.69), (47, 16, 0.40), (48, 12, 0.29),
    (49, 12, 0.13), (50, 40, 0.77),
];

pub const BENCHMARK_STATE_BOUND: f64 = 0.9;
pub const BENCHMARK_INPUT_BOUND: f64 = 0.5;

fn benchmark_couplings() -> Vec<Coupling> {
    BENCHMARK50_WEIGHTS.iter().map(|&(i, j, w)| Coupling::scalar(j - 1, i - 1, w)).collect()
}

/// The 50-agent benchmark with hybrid agents
/// `x⁺ = ±0.5x + u + Σ w x_j`, the sign following the sign of `x`.
pub fn benchmark50() -> NetworkModel {
    NetworkModel::uniform_scalar(
        50,
        SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0),
        benchmark_couplings(),
        Interval::symmetric(BENCHMARK_STATE_BOUND),
        Interval::symmetric(BENCHMARK_INPUT_BOUND),
    )
    .expect("benchmark data is consistent")
}

/// Agent graph of the benchmark, edges `j -> i` with weight `w_{i,j}`.
pub fn benchmark50_graph() -> WeightedDigraph {
    WeightedDigraph::from_edges(50, BENCHMARK50_WEIGHTS.iter().map(|&(i, j, w)| (j - 1, i - 1, w))).expect("benchmark data is consistent")
}

pub const MODULE_WEIGHT: f64 = 0.1;
pub const CLUSTER_WEIGHT: f64 = 0.01;
pub const BRIDGE_WEIGHT: f64 = 0.001;

/// Bidirectional edges of the 64-agent modular network: 16 complete
/// modules of 4 agents (0.1), one link between every two modules of the
/// same 16-agent cluster (0.01) and one link between every two clusters (0.001).
pub fn modular64_edges() -> Vec<(usize, usize, f64)> {
    let mut undirected = Vec::new();
    for module in 0..16 {
        let base = 4 * module;
        for a in 0..4 {
            for b in a + 1..4 {
                undirected.push((base + a, base + b, MODULE_WEIGHT));
            }
        }
    }
    for cluster in 0..4 {
        for a in 0..4 {
            for b in a + 1..4 {
                // slot b of module a meets slot a of module b
                undirected.push((16 * cluster + 4 * a + b, 16 * cluster + 4 * b + a, CLUSTER_WEIGHT));
            }
        }
    }
    for a in 0..4 {
        for b in a + 1..4 {
            undirected.push((16 * a + (5 * b) % 16, 16 * b + (5 * a) % 16, BRIDGE_WEIGHT));
        }
    }
    undirected.into_iter().flat_map(|(i, j, w)| [(i, j, w), (j, i, w)]).collect()
}

pub fn modular64_graph() -> WeightedDigraph {
    WeightedDigraph::from_edges(64, modular64_edges()).expect("generator edges are unique")
}

/// Modular network with linear agents `x⁺ = 0.5x + u`.
pub fn modular64() -> NetworkModel {
    let couplings = modular64_edges().into_iter().map(|(i, j, w)| Coupling::scalar(i, j, w)).collect();
    NetworkModel::uniform_scalar(64, SubsystemModel::scalar_linear(0.5, 1.0), couplings, Interval::symmetric(BENCHMARK_STATE_BOUND), Interval::symmetric(BENCHMARK_INPUT_BOUND))
        .expect("generator data is consistent")
}

/// Random directed network of hybrid agents. Each ordered pair is linked
/// with probability `density`; incoming weights are scaled so that their
/// sum stays below 0.7, which keeps the benchmark boxes invariant.
pub fn random_network(n: usize, density: f64, seed: u64) -> Result<NetworkModel> {
    if n == 0 || !(0.0..=1.0).contains(&density) {
        return Err(invalid("random network needs n >= 1 and density in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = Vec::new();
    for to in 0..n {
        let incoming: Vec<(usize, f64)> = (0..n)
            .filter(|&from| from != to && rng.random_bool(density))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|from| (from, (rng.random_range(0.01..0.8_f64) * 100.0).round() / 100.0))
            .collect();
        let total: f64 = incoming.iter().map(|e| e.1).sum();
        let scale = if total > 0.7 { 0.7 / total } else { 1.0 };
        couplings.extend(incoming.into_iter().map(|(from, w)| Coupling::scalar(from, to, w * scale)));
    }
    NetworkModel::uniform_scalar(n, SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0), couplings, Interval::symmetric(BENCHMARK_STATE_BOUND), Interval::symmetric(BENCHMARK_INPUT_BOUND))
}

/// Random weighted digraph with weights in `[-1, 1]` and optional self-loops.
pub fn random_digraph(n: usize, density: f64, seed: u64) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                edges.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    WeightedDigraph::from_edges(n, edges).expect("one edge per ordered pair")
}

/// Random undirected graph stored with both directions, unit weights.
pub fn random_undirected(n: usize, density: f64, seed: u64) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                edges.push((i, j, 1.0));
                edges.push((j, i, 1.0));
            }
        }
    }
    WeightedDigraph::from_edges(n, edges).expect("one edge per ordered pair")
}

/// Random layered piecewise-affine network with its input sequence.
#[derive(Clone, Debug)]
pub struct LayeredInstance {
    pub net: NetworkModel,
    pub layers: TopologyLayers,
    pub x0: Vec<DVector<f64>>,
    pub inputs: Vec<Vec<DVector<f64>>>,
}

/// `n` scalar hybrid agents on `[-1, 1]` with random mode gains, inputs in
/// `[-0.2, 0.2]` and incoming coupling below 0.3 in total, so every
/// trajectory stays in the box. Each coupling carries a state-dependent,
/// a decision and a signal layer.
pub fn random_layered(n: usize, steps: usize, seed: u64) -> LayeredInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subs: Vec<SubsystemModel> = (0..n).map(|_| SubsystemModel::scalar_hybrid(rng.random_range(-0.5..0.5), 1.0, rng.random_range(-0.5..0.5), 1.0)).collect();
    let mut couplings = Vec::new();
    for to in 0..n {
        let from: Vec<usize> = (0..n).filter(|&f| f != to && rng.random_bool(0.4)).collect();
        let budget = 0.3 / from.len().max(1) as f64;
        couplings.extend(from.into_iter().map(|f| Coupling::scalar(f, to, rng.random_range(-budget..budget))));
    }
    let schedule = |rng: &mut ChaCha8Rng| Schedule::Sequence((0..steps).map(|_| rng.random_bool(0.7)).collect());
    let edges = couplings
        .iter()
        .map(|c| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let state = Layer::StateDependent {
                s: DMatrix::from_element(1, 1, sign),
                r: DMatrix::zeros(1, 1),
                t: DVector::from_element(1, rng.random_range(-0.3..0.3)),
            };
            EdgeLayers { from: c.from, to: c.to, layers: vec![state, Layer::Decision(schedule(&mut rng)), Layer::Signal(schedule(&mut rng))] }
        })
        .collect();
    let state_box = vec![vec![Interval::symmetric(1.0)]; n];
    let input_box = vec![vec![Interval::symmetric(0.2)]; n];
    let net = NetworkModel::new(subs, couplings, state_box, input_box).expect("generator data is consistent");
    let x0 = (0..n).map(|_| DVector::from_element(1, rng.random_range(-0.9..0.9))).collect();
    let inputs = (0..steps).map(|_| (0..n).map(|_| DVector::from_element(1, rng.random_range(-0.2..0.2))).collect()).collect();
    LayeredInstance { net, layers: TopologyLayers::new(edges), x0, inputs }
}

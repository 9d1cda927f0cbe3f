use super::WeightedDigraph;
use crate::model::NetworkModel;

/// One agent node per subsystem and an edge `j -> i` weighted by the
/// Frobenius norm of each nonzero coupling gain from `j` into `i`.
pub fn build_agent_graph(net: &NetworkModel) -> WeightedDigraph {
    let mut g = WeightedDigraph::with_agents(net.len());
    for c in net.couplings() {
        let w = c.strength();
        if w > 0.0 {
            g.add_edge(c.from, c.to, w).expect("network couplings are validated and unique");
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, Interval, SubsystemModel};
    use nalgebra::DMatrix;

    #[test]
    fn matrix_gain_uses_frobenius_norm() {
        let s = SubsystemModel::linear(DMatrix::identity(2, 2), DMatrix::identity(2, 2), None).unwrap();
        let gain = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let net = crate::model::NetworkModel::new(
            vec![s.clone(), s],
            vec![Coupling { from: 1, to: 0, gain }],
            vec![vec![Interval::symmetric(1.0); 2]; 2],
            vec![vec![Interval::symmetric(1.0); 2]; 2],
        )
        .unwrap();
        let g = build_agent_graph(&net);
        assert_eq!(g.weight(1, 0), Some(5.0));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn zero_gain_produces_no_edge() {
        let net = crate::model::NetworkModel::uniform_scalar(
            3,
            SubsystemModel::scalar_linear(0.5, 1.0),
            vec![Coupling::scalar(0, 1, 0.0)],
            Interval::symmetric(1.0),
            Interval::symmetric(1.0),
        )
        .unwrap();
        assert_eq!(build_agent_graph(&net).edge_count(), 0);
    }
}

use std::collections::BTreeSet;

use crate::error::{invalid, Result};

/// Variables on the left, constraints on the right, one incidence per participation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    variables: Vec<String>,
    n_constraints: usize,
    incidences: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn constraint_count(&self) -> usize {
        self.n_constraints
    }

    /// `(variable, constraint)` pairs in constraint order.
    pub fn incidences(&self) -> &[(usize, usize)] {
        &self.incidences
    }

    /// Number of constraints each variable participates in.
    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.variables.len()];
        for &(v, _) in &self.incidences {
            d[v] += 1;
        }
        d
    }
}

/// Builds the variable-constraint incidence graph.
pub fn bipartite_constraint_graph<S: Into<String>>(
    vars: impl IntoIterator<Item = S>,
    constraints: &[Vec<usize>],
) -> Result<BipartiteGraph> {
    let variables: Vec<String> = vars.into_iter().map(Into::into).collect();
    let mut incidences = Vec::new();
    for (c, members) in constraints.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &v in members {
            if v >= variables.len() {
                return Err(invalid(format!("constraint {c} references undeclared variable {v}")));
            }
            if !seen.insert(v) {
                return Err(invalid(format!("constraint {c} lists variable {v} twice")));
            }
            incidences.push((v, c));
        }
    }
    Ok(BipartiteGraph { variables, n_constraints: constraints.len(), incidences })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_constraint_example() {
        // x1 x2 x3 x4 u1 u2
        let g = bipartite_constraint_graph(
            ["x1", "x2", "x3", "x4", "u1", "u2"],
            &[vec![0, 1], vec![0, 2], vec![4, 5, 3], vec![5, 0, 2]],
        )
        .unwrap();
        assert_eq!(g.incidences().len(), 10);
        assert_eq!(g.variable_degrees(), vec![3, 1, 2, 1, 1, 2]);
    }

    #[test]
    fn empty_and_matching_shapes() {
        let g = bipartite_constraint_graph(["a", "b"], &[]).unwrap();
        assert_eq!((g.constraint_count(), g.incidences().len()), (0, 0));
        let g = bipartite_constraint_graph(["a", "b", "c"], &[vec![0], vec![1], vec![2]]).unwrap();
        assert!(g.variable_degrees().iter().all(|&d| d == 1));
        assert_eq!(g.incidences(), &[(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn dangling_index_rejected() {
        assert!(bipartite_constraint_graph(["a"], &[vec![1]]).is_err());
        assert!(bipartite_constraint_graph(["a"], &[vec![0, 0]]).is_err());
    }
}

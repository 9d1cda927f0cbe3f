//! Multi-layer link activation and its mixed-logical-dynamical compilation.

mod bigm;
mod mld;
mod pwa;

pub use bigm::{coupling_big_m, indicator_bounds, BigM};
pub use mld::{simulate_mld, to_mld, MldRow, MldSystem, MldTrajectory, MldVar, Relation, VarKind};
pub use pwa::{simulate_pwa, PwaTrajectory};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::model::NetworkModel;

/// Time-indexed binary sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    Constant(bool),
    Sequence(Vec<bool>),
}

impl Schedule {
    pub fn at(&self, k: usize) -> Option<bool> {
        match self {
            Schedule::Constant(b) => Some(*b),
            Schedule::Sequence(v) => v.get(k).copied(),
        }
    }

    /// Number of defined steps; `None` when defined for every step.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Schedule::Constant(_) => None,
            Schedule::Sequence(v) => Some(v.len()),
        }
    }
}

/// One topological level of a link.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Active iff `S x_src + R u_src ≤ T` row-wise.
    StateDependent { s: DMatrix<f64>, r: DMatrix<f64>, t: DVector<f64> },
    /// Supervisory on/off decision, supplied as a schedule.
    Decision(Schedule),
    /// Exogenous on/off signal.
    Signal(Schedule),
}

impl Layer {
    /// Active when the source state satisfies `x[idx] ≥ 0`.
    pub fn nonnegative_source(n_x: usize, n_u: usize, idx: usize) -> Self {
        let mut s = DMatrix::zeros(1, n_x);
        s[(0, idx)] = -1.0;
        Layer::StateDependent { s, r: DMatrix::zeros(1, n_u), t: DVector::zeros(1) }
    }

    /// Value at step `k` for source state `x` and input `u`.
    pub fn value(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> Option<bool> {
        match self {
            Layer::StateDependent { s, r, t } => {
                let f = s * x + r * u - t;
                Some(f.iter().all(|v| *v <= 0.0))
            }
            Layer::Decision(sch) | Layer::Signal(sch) => sch.at(k),
        }
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Layer::StateDependent { .. } => None,
            Layer::Decision(s) | Layer::Signal(s) => Some(s),
        }
    }
}

/// Layers stacked on the coupling `from -> to`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLayers {
    pub from: usize,
    pub to: usize,
    pub layers: Vec<Layer>,
}

/// Layer stacks for some of a network's couplings. Couplings without an
/// entry are always active.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopologyLayers {
    pub edges: Vec<EdgeLayers>,
}

impl TopologyLayers {
    pub fn new(edges: Vec<EdgeLayers>) -> Self {
        Self { edges }
    }

    pub fn for_edge(&self, from: usize, to: usize) -> Option<&EdgeLayers> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// Checks the layer stacks against `net` and, when given, a simulation length.
    pub fn validate(&self, net: &NetworkModel, steps: Option<usize>) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if !net.couplings().iter().any(|c| c.from == e.from && c.to == e.to) {
                return Err(invalid(format!("layers given for {}->{} which is not a coupling", e.from + 1, e.to + 1)));
            }
            if !seen.insert((e.from, e.to)) {
                return Err(invalid(format!("layers for {}->{} given twice", e.from + 1, e.to + 1)));
            }
            if e.layers.is_empty() {
                return Err(invalid(format!("edge {}->{} has no layers", e.from + 1, e.to + 1)));
            }
            let src = net.subsystem(e.from);
            for l in &e.layers {
                match l {
                    Layer::StateDependent { s, r, t } => {
                        if s.ncols() != src.n_x() || r.ncols() != src.n_u() || s.nrows() != t.len() || r.nrows() != t.len() {
                            return Err(Error::Dimension(format!("state-dependent layer on {}->{} does not match the source dimensions", e.from + 1, e.to + 1)));
                        }
                    }
                    Layer::Decision(sch) | Layer::Signal(sch) => {
                        if let (Some(h), Some(steps)) = (sch.horizon(), steps) {
                            if h < steps {
                                return Err(invalid(format!("schedule on {}->{} covers {h} of {steps} steps", e.from + 1, e.to + 1)));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Product of all layer values of a link.
pub fn compose_links(values: &[Option<bool>]) -> Result<bool> {
    if values.is_empty() {
        return Err(invalid("a link needs at least one layer"));
    }
    values.iter().enumerate().try_fold(true, |acc, (q, v)| match v {
        Some(b) => Ok(acc && *b),
        None => Err(invalid(format!("layer {} has no value at this step", q + 1))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition() {
        assert!(compose_links(&[Some(true), Some(true), Some(true)]).unwrap());
        assert!(!compose_links(&[Some(true), Some(false), Some(true)]).unwrap());
        assert!(compose_links(&[Some(true)]).unwrap());
        assert!(compose_links(&[Some(true), None]).is_err());
        assert!(compose_links(&[]).is_err());
    }

    #[test]
    fn state_dependent_boundary_is_active() {
        let l = Layer::nonnegative_source(1, 1, 0);
        let u = DVector::zeros(1);
        assert_eq!(l.value(0, &DVector::from_element(1, 0.0), &u), Some(true));
        assert_eq!(l.value(0, &DVector::from_element(1, -0.1), &u), Some(false));
    }
}

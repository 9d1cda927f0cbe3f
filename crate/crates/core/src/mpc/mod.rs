//! Receding-horizon control: centralized QP/MIQP and partition-aware
//! consensus ADMM.

mod admm;
mod closed_loop;
mod formulation;

pub use admm::{solve_dmpc_admm, AdmmParams, DmpcSolution};
pub use closed_loop::{simulate_closed_loop, SimConfig, Strategy, TrajectoryLog};

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::model::NetworkModel;
use crate::qp::{branch_and_bound_with, QpSettings, QpSolution, QpSolver, QpStatus, DEFAULT_NODE_BUDGET};
use formulation::{build_coalition_qp, CoalitionQp};

/// Quadratic horizon cost `Σ q‖x(t)‖² + r‖u(t)‖²` with terminal weight on `x(N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpcProblem {
    pub horizon: usize,
    pub state_weight: f64,
    pub input_weight: f64,
    pub terminal_weight: f64,
    /// Branch-and-bound node budget per hybrid solve.
    pub node_budget: usize,
}

impl Default for MpcProblem {
    fn default() -> Self {
        Self { horizon: 2, state_weight: 1.0, input_weight: 1.0, terminal_weight: 1.0, node_budget: DEFAULT_NODE_BUDGET }
    }
}

impl MpcProblem {
    pub fn with_horizon(horizon: usize) -> Self {
        Self { horizon, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let w = [self.state_weight, self.input_weight, self.terminal_weight];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("cost weights must be finite and nonnegative"));
        }
        if self.node_budget == 0 {
            return Err(invalid("node budget must be positive"));
        }
        Ok(())
    }

    /// `q‖x‖² + r‖u‖²` summed over agents.
    pub fn stage_cost(&self, x: &[DVector<f64>], u: &[DVector<f64>]) -> f64 {
        let xs: f64 = x.iter().map(|v| v.norm_squared()).sum();
        let us: f64 = u.iter().map(|v| v.norm_squared()).sum();
        self.state_weight * xs + self.input_weight * us
    }
}

/// Result of one horizon solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcSolution {
    /// `inputs[t][agent]` over the horizon.
    pub inputs: Vec<Vec<DVector<f64>>>,
    /// `states[t - 1][agent]` for `t = 1..=N`.
    pub states: Vec<Vec<DVector<f64>>>,
    pub cost: f64,
    /// False if a node budget ran out.
    pub optimal: bool,
    pub nodes: usize,
}

impl MpcSolution {
    pub fn first_inputs(&self) -> &[DVector<f64>] {
        &self.inputs[0]
    }
}

fn qp_settings() -> QpSettings {
    QpSettings::default()
}

/// Solves a coalition QP, with branch-and-bound when it holds binaries.
fn solve_coalition(solver: &mut QpSolver, cq: &CoalitionQp, budget: usize) -> Result<(QpSolution, usize, bool)> {
    let out = branch_and_bound_with(solver, &cq.binaries, budget, Some(cq))?;
    match out.solution.status {
        QpStatus::PrimalInfeasible => Err(Error::Infeasible("horizon problem is infeasible".into())),
        QpStatus::MaxIterations if cq.binaries.is_empty() => Err(Error::Infeasible("QP iterations exhausted".into())),
        _ => Ok((out.solution, out.nodes, out.optimal)),
    }
}

fn check_state(net: &NetworkModel, x0: &[DVector<f64>]) -> Result<()> {
    if x0.len() != net.len() || x0.iter().enumerate().any(|(i, x)| x.len() != net.subsystem(i).n_x()) {
        return Err(Error::Dimension("initial state does not match the network".into()));
    }
    Ok(())
}

/// Per step, one vector per agent.
type Sequence = Vec<Vec<DVector<f64>>>;

fn assemble(net: &NetworkModel, prob: &MpcProblem, parts: &[(&CoalitionQp, &DVector<f64>)]) -> (Sequence, Sequence) {
    let mut inputs = vec![vec![DVector::zeros(0); net.len()]; prob.horizon];
    let mut states = vec![vec![DVector::zeros(0); net.len()]; prob.horizon];
    for (cq, x) in parts {
        for (p, &agent) in cq.members.iter().enumerate() {
            for t in 0..prob.horizon {
                inputs[t][agent] = DVector::from_iterator(cq.inputs[p][t].len(), cq.inputs[p][t].iter().map(|&v| x[v]));
                states[t][agent] = DVector::from_iterator(cq.states[p][t].len(), cq.states[p][t].iter().map(|&v| x[v]));
            }
        }
    }
    (inputs, states)
}

fn solve_centralized(net: &NetworkModel, prob: &MpcProblem, x0: &[DVector<f64>]) -> Result<MpcSolution> {
    check_state(net, x0)?;
    let all: Vec<usize> = (0..net.len()).collect();
    let cq = build_coalition_qp(net, &all, prob, x0, 0.0)?;
    let mut solver = QpSolver::new(cq.problem.clone(), qp_settings())?;
    let (sol, nodes, optimal) = solve_coalition(&mut solver, &cq, prob.node_budget)?;
    let (inputs, states) = assemble(net, prob, &[(&cq, &sol.x)]);
    Ok(MpcSolution { inputs, states, cost: cq.control_cost(&sol.x), optimal, nodes })
}

/// Centralized MPC for networks of linear subsystems.
pub fn solve_cmpc_linear(net: &NetworkModel, prob: &MpcProblem, x0: &[DVector<f64>]) -> Result<MpcSolution> {
    if !net.all_linear() {
        return Err(invalid("network has piecewise-affine subsystems; use the hybrid solver"));
    }
    solve_centralized(net, prob, x0)
}

/// Centralized MPC over mode sequences by branch-and-bound. The mode at the
/// current step follows from the measured state.
pub fn solve_cmpc_hybrid(net: &NetworkModel, prob: &MpcProblem, x0: &[DVector<f64>]) -> Result<MpcSolution> {
    solve_centralized(net, prob, x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, Interval, SubsystemModel};
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn single(sub: SubsystemModel) -> NetworkModel {
        NetworkModel::uniform_scalar(1, sub, vec![], Interval::symmetric(10.0), Interval::symmetric(0.5)).unwrap()
    }

    #[test]
    fn scalar_linear_calculus() {
        let net = single(SubsystemModel::scalar_linear(0.5, 1.0));
        let sol = solve_cmpc_linear(&net, &MpcProblem::with_horizon(1), &[scalar(1.0)]).unwrap();
        assert_relative_eq!(sol.first_inputs()[0][0], -0.25, epsilon = 1e-12);
        assert_relative_eq!(sol.cost, 0.125, epsilon = 1e-12);
        let zero = solve_cmpc_linear(&net, &MpcProblem::with_horizon(1), &[scalar(0.0)]).unwrap();
        assert!(zero.cost.abs() < 1e-20);
    }

    #[test]
    fn hybrid_single_agent() {
        let net = NetworkModel::uniform_scalar(1, SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0), vec![], Interval::symmetric(0.9), Interval::symmetric(0.5)).unwrap();
        let sol = solve_cmpc_hybrid(&net, &MpcProblem::with_horizon(1), &[scalar(0.4)]).unwrap();
        // x1 = 0.2 + u, min (0.2 + u)² + u²
        assert_relative_eq!(sol.first_inputs()[0][0], -0.1, epsilon = 1e-10);
        assert_relative_eq!(sol.states[0][0][0], 0.1, epsilon = 1e-10);
        assert_relative_eq!(sol.cost, 0.02, epsilon = 1e-10);
        assert!(sol.optimal);
        let zero = solve_cmpc_hybrid(&net, &MpcProblem::with_horizon(1), &[scalar(0.0)]).unwrap();
        assert!(zero.cost.abs() < 1e-16);
    }

    #[test]
    fn hybrid_longer_horizon_matches_mode_enumeration() {
        let sub = SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0);
        let net = NetworkModel::uniform_scalar(2, sub.clone(), vec![Coupling::scalar(0, 1, 0.4), Coupling::scalar(1, 0, -0.3)], Interval::symmetric(0.9), Interval::symmetric(0.5)).unwrap();
        let prob = MpcProblem::with_horizon(3);
        let x0 = [scalar(0.7), scalar(-0.6)];
        let sol = solve_cmpc_hybrid(&net, &prob, &x0).unwrap();
        // brute force: fix every predicted mode and solve the linear QP
        let mut best = f64::INFINITY;
        for code in 0..16u32 {
            let modes: Vec<usize> = (0..4).map(|b| (code >> b & 1) as usize).collect();
            if let Some(c) = fixed_mode_cost(&net, &prob, &x0, &modes) {
                best = best.min(c);
            }
        }
        assert!((sol.cost - best).abs() < 1e-8, "{} vs {best}", sol.cost);
    }

    #[test]
    fn guided_search_matches_mode_enumeration_on_random_networks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let sub = SubsystemModel::scalar_hybrid(0.8, 1.0, -0.6, 0.3);
        for _ in 0..6 {
            let couplings: Vec<Coupling> = [(0, 1), (1, 2), (2, 0), (0, 2)].iter().map(|&(f, t)| Coupling::scalar(f, t, rng.random_range(-0.3..0.3))).collect();
            let net = NetworkModel::uniform_scalar(3, sub.clone(), couplings, Interval::symmetric(1.0), Interval::symmetric(0.2)).unwrap();
            let prob = MpcProblem::with_horizon(3);
            let x0: Vec<_> = (0..3).map(|_| scalar(rng.random_range(-0.8..0.8))).collect();
            let sol = solve_cmpc_hybrid(&net, &prob, &x0).unwrap();
            assert!(sol.optimal);
            let best = (0..64u32)
                .filter_map(|code| fixed_mode_cost(&net, &prob, &x0, &(0..6).map(|b| (code >> b & 1) as usize).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min);
            assert!((sol.cost - best).abs() < 1e-7 * (1.0 + best), "{} vs {best}", sol.cost);
        }
    }

    /// Cost with predicted modes `modes[(t - 1) * n + agent]` forced, or
    /// `None` when the guards cannot be met.
    fn fixed_mode_cost(net: &NetworkModel, prob: &MpcProblem, x0: &[DVector<f64>], modes: &[usize]) -> Option<f64> {
        let all: Vec<usize> = (0..net.len()).collect();
        let cq = build_coalition_qp(net, &all, prob, x0, 0.0).unwrap();
        let mut qp = cq.problem.clone();
        for (k, b) in cq.binaries.iter().enumerate() {
            // binaries are listed per step, agent, mode
            let (slot, mode) = (k / 2, k % 2);
            let v = if modes[slot] == mode { 1.0 } else { 0.0 };
            qp.l[b.row] = v;
            qp.u[b.row] = v;
        }
        let sol = crate::qp::solve_qp(qp, QpSettings::default()).unwrap();
        (sol.status == QpStatus::Solved).then(|| cq.control_cost(&sol.x))
    }

    #[test]
    fn decoupled_network_separates() {
        let net = NetworkModel::uniform_scalar(2, SubsystemModel::scalar_linear(0.9, 0.5), vec![], Interval::symmetric(5.0), Interval::symmetric(1.0)).unwrap();
        let prob = MpcProblem::with_horizon(4);
        let both = solve_cmpc_linear(&net, &prob, &[scalar(2.0), scalar(-1.0)]).unwrap();
        let one = NetworkModel::uniform_scalar(1, SubsystemModel::scalar_linear(0.9, 0.5), vec![], Interval::symmetric(5.0), Interval::symmetric(1.0)).unwrap();
        let a = solve_cmpc_linear(&one, &prob, &[scalar(2.0)]).unwrap();
        let b = solve_cmpc_linear(&one, &prob, &[scalar(-1.0)]).unwrap();
        assert_relative_eq!(both.cost, a.cost + b.cost, epsilon = 1e-10);
        for t in 0..4 {
            assert_relative_eq!(both.inputs[t][0][0], a.inputs[t][0][0], epsilon = 1e-10);
            assert_relative_eq!(both.inputs[t][1][0], b.inputs[t][0][0], epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_solver_rejects_pwa() {
        let net = single(SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0));
        assert!(solve_cmpc_linear(&net, &MpcProblem::default(), &[scalar(0.1)]).is_err());
    }

    #[test]
    fn kkt_residual_is_tiny() {
        let net = NetworkModel::uniform_scalar(3, SubsystemModel::scalar_linear(1.1, 1.0), vec![Coupling::scalar(0, 1, 0.3), Coupling::scalar(2, 1, -0.2)], Interval::symmetric(2.0), Interval::symmetric(0.3)).unwrap();
        let all = [0, 1, 2];
        let x0 = [scalar(1.5), scalar(-1.0), scalar(0.8)];
        let prob = MpcProblem::with_horizon(5);
        let cq = build_coalition_qp(&net, &all, &prob, &x0, 0.0).unwrap();
        let sol = crate::qp::solve_qp(cq.problem.clone(), QpSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(crate::qp::kkt_residual(&cq.problem, &sol.x, &sol.y) <= 1e-8);
    }
}

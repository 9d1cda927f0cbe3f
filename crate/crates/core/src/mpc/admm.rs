use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;

use super::formulation::{build_coalition_qp, CoalitionQp, SharedKey};
use super::{assemble, check_state, qp_settings, solve_coalition, MpcProblem, MpcSolution};
use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::model::NetworkModel;
use crate::partition::Partition;
use crate::qp::QpSolver;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmParams {
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { rho: 1.0, max_iter: 500, tol: 1e-6 }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        // written with negations so NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.rho > 0.0 && self.rho.is_finite()) || !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(invalid("ADMM needs rho > 0, tol > 0 and max_iter >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DmpcSolution {
    pub solution: MpcSolution,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Wall-clock seconds spent in each coalition's local solves.
    pub solve_seconds: Vec<f64>,
}

/// Consensus state carried between receding-horizon steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct AdmmWarm {
    zeta: BTreeMap<SharedKey, f64>,
    /// Scaled duals per coalition.
    lambda: Vec<BTreeMap<SharedKey, f64>>,
}

impl AdmmWarm {
    /// Shifts predictions one step forward, repeating the last one.
    pub fn shifted(&self, horizon: usize) -> Self {
        let shift = |m: &BTreeMap<SharedKey, f64>| -> BTreeMap<SharedKey, f64> {
            m.keys()
                .map(|&(a, t, c)| {
                    let src = (a, (t + 1).min(horizon.saturating_sub(1)).max(1), c);
                    ((a, t, c), m.get(&src).copied().unwrap_or(m[&(a, t, c)]))
                })
                .collect()
        };
        Self { zeta: shift(&self.zeta), lambda: self.lambda.iter().map(shift).collect() }
    }
}

struct Local {
    cq: CoalitionQp,
    solver: QpSolver,
    x: DVector<f64>,
    lambda: BTreeMap<SharedKey, f64>,
    seconds: f64,
    nodes: usize,
    optimal: bool,
}

pub(crate) struct AdmmOutcome {
    pub result: DmpcSolution,
    pub warm: AdmmWarm,
}

pub(crate) fn run_admm(
    net: &NetworkModel,
    partition: &Partition,
    prob: &MpcProblem,
    x0: &[DVector<f64>],
    params: &AdmmParams,
    warm: Option<&AdmmWarm>,
    exec: Execution,
) -> Result<AdmmOutcome> {
    params.validate()?;
    check_state(net, x0)?;
    if partition.len() != net.len() {
        return Err(invalid(format!("partition covers {} nodes but the network has {} subsystems", partition.len(), net.len())));
    }
    let rho = params.rho;
    let sets = partition.sets();
    let built: Vec<Result<Local>> = exec::map(exec, &sets, |members| {
        let cq = build_coalition_qp(net, members, prob, x0, rho)?;
        let solver = QpSolver::new(cq.problem.clone(), qp_settings())?;
        let n = cq.problem.q.len();
        Ok(Local { cq, solver, x: DVector::zeros(n), lambda: BTreeMap::new(), seconds: 0.0, nodes: 0, optimal: true })
    });
    let mut locals: Vec<Local> = built.into_iter().collect::<Result<_>>()?;

    let mut zeta: BTreeMap<SharedKey, f64> = BTreeMap::new();
    for (c, loc) in locals.iter_mut().enumerate() {
        for &key in loc.cq.shared.keys() {
            let start = warm.and_then(|w| w.zeta.get(&key)).copied().unwrap_or(x0[key.0][key.2]);
            zeta.insert(key, start);
            let l = warm.and_then(|w| w.lambda.get(c)).and_then(|m| m.get(&key)).copied().unwrap_or(0.0);
            loc.lambda.insert(key, l);
        }
    }

    let (mut iterations, mut converged) = (0, false);
    let (mut r_prim, mut r_dual) = (0.0_f64, 0.0_f64);
    while iterations < params.max_iter {
        iterations += 1;
        let zeta_ref = &zeta;
        let outcomes: Vec<Result<()>> = exec::map_mut(exec, &mut locals, |loc| {
            let mut q = DVector::zeros(loc.cq.problem.q.len());
            for (key, &v) in &loc.cq.shared {
                q[v] = rho * (loc.lambda[key] - zeta_ref[key]);
            }
            let started = Instant::now();
            loc.solver.update_q(q)?;
            let (sol, nodes, optimal) = solve_coalition(&mut loc.solver, &loc.cq, prob.node_budget)?;
            loc.seconds += started.elapsed().as_secs_f64();
            loc.nodes += nodes;
            loc.optimal &= optimal;
            loc.x = sol.x;
            Ok(())
        });
        outcomes.into_iter().collect::<Result<Vec<()>>>()?;

        let mut sums: BTreeMap<SharedKey, (f64, usize)> = BTreeMap::new();
        for loc in &locals {
            for (key, &v) in &loc.cq.shared {
                let e = sums.entry(*key).or_insert((0.0, 0));
                e.0 += loc.x[v] + loc.lambda[key];
                e.1 += 1;
            }
        }
        r_prim = 0.0;
        r_dual = 0.0;
        for (key, (s, cnt)) in sums {
            let z_new = s / cnt as f64;
            r_dual = r_dual.max(rho * (z_new - zeta[&key]).abs());
            zeta.insert(key, z_new);
        }
        for loc in &mut locals {
            for (key, &v) in &loc.cq.shared {
                let gap = loc.x[v] - zeta[key];
                r_prim = r_prim.max(gap.abs());
                *loc.lambda.get_mut(key).expect("initialized per shared key") += gap;
            }
        }
        if r_prim <= params.tol && r_dual <= params.tol {
            converged = true;
            break;
        }
    }

    let parts: Vec<(&CoalitionQp, &DVector<f64>)> = locals.iter().map(|l| (&l.cq, &l.x)).collect();
    let (inputs, states) = assemble(net, prob, &parts);
    let cost = locals.iter().map(|l| l.cq.control_cost(&l.x)).sum();
    let solution = MpcSolution {
        inputs,
        states,
        cost,
        optimal: locals.iter().all(|l| l.optimal),
        nodes: locals.iter().map(|l| l.nodes).sum(),
    };
    let warm = AdmmWarm { zeta, lambda: locals.iter().map(|l| l.lambda.clone()).collect() };
    Ok(AdmmOutcome {
        result: DmpcSolution {
            solution,
            iterations,
            converged,
            primal_residual: r_prim,
            dual_residual: r_dual,
            solve_seconds: locals.iter().map(|l| l.seconds).collect(),
        },
        warm,
    })
}

/// Distributed MPC by consensus ADMM: one local horizon problem per set of
/// the partition, with copies of the neighbor states each set reads.
pub fn solve_dmpc_admm(net: &NetworkModel, partition: &Partition, prob: &MpcProblem, x0: &[DVector<f64>], params: &AdmmParams) -> Result<DmpcSolution> {
    Ok(run_admm(net, partition, prob, x0, params, None, Execution::default())?.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, Interval, SubsystemModel};
    use crate::mpc::solve_cmpc_linear;

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn chain(n: usize, w: f64) -> NetworkModel {
        let couplings = (0..n - 1).flat_map(|i| [Coupling::scalar(i, i + 1, w), Coupling::scalar(i + 1, i, -w)]).collect();
        NetworkModel::uniform_scalar(n, SubsystemModel::scalar_linear(0.95, 1.0), couplings, Interval::symmetric(2.0), Interval::symmetric(0.5)).unwrap()
    }

    #[test]
    fn zero_coupling_converges_at_once() {
        let net = NetworkModel::uniform_scalar(3, SubsystemModel::scalar_linear(0.9, 1.0), vec![], Interval::symmetric(2.0), Interval::symmetric(0.5)).unwrap();
        let x0 = [scalar(1.0), scalar(-0.5), scalar(0.3)];
        let prob = MpcProblem::with_horizon(3);
        let d = solve_dmpc_admm(&net, &Partition::singletons(3), &prob, &x0, &AdmmParams::default()).unwrap();
        let c = solve_cmpc_linear(&net, &prob, &x0).unwrap();
        assert_eq!(d.iterations, 1);
        assert!(d.converged);
        assert!((d.solution.cost - c.cost).abs() < 1e-12);
    }

    #[test]
    fn grand_coalition_equals_centralized() {
        let net = chain(4, 0.2);
        let x0: Vec<_> = [0.5, -0.3, 0.8, 0.1].iter().map(|&v| scalar(v)).collect();
        let prob = MpcProblem::with_horizon(3);
        let d = solve_dmpc_admm(&net, &Partition::grand(4), &prob, &x0, &AdmmParams::default()).unwrap();
        let c = solve_cmpc_linear(&net, &prob, &x0).unwrap();
        assert_eq!(d.iterations, 1);
        assert_eq!(d.solution.cost, c.cost);
        assert_eq!(d.solution.inputs, c.inputs);
    }

    #[test]
    fn weak_chain_reaches_consensus() {
        let net = chain(10, 0.05);
        let x0: Vec<_> = (0..10).map(|i| scalar(0.9 * ((i as f64) * 0.7).sin())).collect();
        let prob = MpcProblem::with_horizon(3);
        let d = solve_dmpc_admm(&net, &Partition::singletons(10), &prob, &x0, &AdmmParams::default()).unwrap();
        let c = solve_cmpc_linear(&net, &prob, &x0).unwrap();
        assert!(d.converged, "{} iterations", d.iterations);
        assert!(d.primal_residual <= 1e-6 && d.dual_residual <= 1e-6);
        assert!((d.solution.cost - c.cost).abs() <= 1e-4 * c.cost);
    }

    #[test]
    fn shifted_warm_start_moves_predictions() {
        let mut w = AdmmWarm::default();
        w.zeta.insert((0, 1, 0), 1.0);
        w.zeta.insert((0, 2, 0), 2.0);
        w.zeta.insert((0, 3, 0), 3.0);
        let s = w.shifted(4);
        assert_eq!(s.zeta[&(0, 1, 0)], 2.0);
        assert_eq!(s.zeta[&(0, 2, 0)], 3.0);
        assert_eq!(s.zeta[&(0, 3, 0)], 3.0);
    }
}

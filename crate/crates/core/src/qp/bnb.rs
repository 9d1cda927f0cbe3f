use std::collections::HashSet;

use nalgebra::DVector;

use super::{QpSolution, QpSolver, QpStatus};
use crate::error::{Error, Result};

pub const DEFAULT_NODE_BUDGET: usize = 100_000;
const INTEGRALITY_TOL: f64 = 1e-6;

/// A relaxed binary: variable `var` bounded by constraint row `row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryVar {
    pub var: usize,
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiqpOutcome {
    pub solution: QpSolution,
    pub nodes: usize,
    /// False when the node budget ran out before the tree was closed.
    pub optimal: bool,
}

fn apply_fixings(solver: &mut QpSolver, binaries: &[BinaryVar], fix: &[Option<f64>]) {
    // binary rows keep their inequality step size so the factorization survives
    for (b, f) in binaries.iter().zip(fix) {
        let (lo, hi) = f.map_or((0.0, 1.0), |v| (v, v));
        solver.prob.l[b.row] = lo;
        solver.prob.u[b.row] = hi;
    }
}

/// Problem knowledge that steers the search. Both hooks see the relaxed
/// solution of a node and the fixings leading to it.
pub trait BranchGuide {
    /// A full 0/1 assignment to try as an incumbent.
    fn round(&self, x: &DVector<f64>, fix: &[Option<f64>]) -> Vec<f64>;

    /// Preferred binary to branch on; `None` falls back to the first
    /// fractional one.
    fn pick(&self, _x: &DVector<f64>, _fix: &[Option<f64>]) -> Option<usize> {
        None
    }
}

/// Relative slack when comparing relaxation bounds with the incumbent;
/// unpolished relaxations are only accurate to about this level.
const PRUNE_TOL: f64 = 1e-7;

type Incumbent = Option<(f64, Vec<Option<f64>>)>;

/// Depth-first branch-and-bound over relaxed binaries. Branches on the first
/// fractional binary in the given order, exploring value 1 before 0, so
/// binaries listed in guard order try modes in guard order.
pub fn branch_and_bound(solver: &mut QpSolver, binaries: &[BinaryVar], budget: usize) -> Result<MiqpOutcome> {
    branch_and_bound_with(solver, binaries, budget, None)
}

/// [`branch_and_bound`] steered by a [`BranchGuide`]. Each fractional node
/// solves the guide's rounded assignment; if that matches the node bound the
/// subtree is closed without branching.
pub fn branch_and_bound_with(solver: &mut QpSolver, binaries: &[BinaryVar], budget: usize, guide: Option<&dyn BranchGuide>) -> Result<MiqpOutcome> {
    let refine = solver.settings.refine;
    let root_bounds = (solver.prob.l.clone(), solver.prob.u.clone());
    if binaries.is_empty() {
        let solution = solver.solve()?;
        if solution.status == QpStatus::PrimalInfeasible {
            return Err(Error::Infeasible("relaxation is infeasible".into()));
        }
        return Ok(MiqpOutcome { solution, nodes: 1, optimal: true });
    }
    // relaxations only need bounds; the incumbent is polished at the end
    solver.settings.refine = false;
    let mut incumbent: Incumbent = None;
    let mut tried: HashSet<Vec<bool>> = HashSet::new();
    let mut stack: Vec<Vec<Option<f64>>> = vec![vec![None; binaries.len()]];
    let mut nodes = 0;
    let prunes = |bound: f64, inc: &Incumbent| inc.as_ref().is_some_and(|s| bound >= s.0 - PRUNE_TOL * (1.0 + s.0.abs()));
    let offer = |inc: &mut Incumbent, value: f64, fix: Vec<Option<f64>>| {
        if inc.as_ref().is_none_or(|s| value < s.0) {
            *inc = Some((value, fix));
        }
    };
    let mut failure = None;
    while let Some(fix) = stack.pop() {
        if nodes >= budget {
            stack.push(fix);
            break;
        }
        nodes += 1;
        apply_fixings(solver, binaries, &fix);
        let sol = match solver.solve() {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        if sol.status == QpStatus::PrimalInfeasible || prunes(sol.objective, &incumbent) {
            continue;
        }
        let fractional = |b: &BinaryVar| sol.x[b.var] > INTEGRALITY_TOL && sol.x[b.var] < 1.0 - INTEGRALITY_TOL;
        let Some(first) = binaries.iter().position(fractional) else {
            let rounded = binaries.iter().map(|b| Some(sol.x[b.var].round())).collect();
            offer(&mut incumbent, sol.objective, rounded);
            continue;
        };
        if let Some(guide) = guide {
            let guess: Vec<Option<f64>> = guide.round(&sol.x, &fix).into_iter().map(Some).collect();
            if nodes < budget && tried.insert(guess.iter().map(|g| g == &Some(1.0)).collect()) {
                nodes += 1;
                apply_fixings(solver, binaries, &guess);
                match solver.solve() {
                    Ok(s) if s.status != QpStatus::PrimalInfeasible => offer(&mut incumbent, s.objective, guess),
                    Ok(_) => {}
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
                if prunes(sol.objective, &incumbent) {
                    continue;
                }
            }
        }
        let j = guide.and_then(|g| g.pick(&sol.x, &fix)).filter(|&j| fix[j].is_none()).unwrap_or(first);
        let mut zero = fix.clone();
        zero[j] = Some(0.0);
        let mut one = fix;
        one[j] = Some(1.0);
        stack.push(zero);
        stack.push(one);
    }
    solver.settings.refine = refine;
    let optimal = stack.is_empty();
    let outcome = match (failure, incumbent) {
        (Some(e), _) => Err(e),
        (None, Some((_, fix))) => {
            apply_fixings(solver, binaries, &fix);
            let mut solution = solver.solve()?;
            if solution.status == QpStatus::PrimalInfeasible {
                Err(Error::Infeasible("rounded binary assignment is infeasible".into()))
            } else {
                for b in binaries {
                    solution.x[b.var] = solution.x[b.var].round();
                }
                Ok(MiqpOutcome { solution, nodes, optimal })
            }
        }
        (None, None) if optimal => Err(Error::Infeasible("no binary assignment admits a feasible relaxation".into())),
        (None, None) => Err(Error::Infeasible(format!("node budget of {budget} exhausted without a feasible assignment"))),
    };
    solver.prob.l = root_bounds.0;
    solver.prob.u = root_bounds.1;
    outcome
}

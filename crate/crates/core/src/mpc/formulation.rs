//! Horizon QP of one coalition: owned states and inputs, copies of the
//! neighbor states it reads, and a convex-hull split per mode for
//! piecewise-affine members at predicted steps.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::MpcProblem;
use crate::error::Result;
use crate::model::{Dynamics, NetworkModel, PwaMode};
use crate::qp::{BinaryVar, BranchGuide, QpProblem};

/// Key of a shared predicted state component: `(agent, step, component)`.
pub(crate) type SharedKey = (usize, usize, usize);

#[derive(Clone, Debug)]
pub(crate) struct CoalitionQp {
    pub members: Vec<usize>,
    pub problem: QpProblem,
    pub binaries: Vec<BinaryVar>,
    /// Diagonal of the control cost, without consensus terms.
    pub cost_diag: DVector<f64>,
    /// `inputs[m][t]`: variable indices of member `m`'s input at step `t`.
    pub inputs: Vec<Vec<Vec<usize>>>,
    /// `states[m][t - 1]`: variable indices of member `m`'s state at step `t`.
    pub states: Vec<Vec<Vec<usize>>>,
    /// Variables taking part in consensus, owned or copied.
    pub shared: BTreeMap<SharedKey, usize>,
    pub mode_groups: Vec<ModeGroup>,
}

/// Mode binaries of one agent at one predicted step.
#[derive(Clone, Debug)]
pub(crate) struct ModeGroup {
    /// Positions in [`CoalitionQp::binaries`], in guard order.
    pub binaries: Vec<usize>,
    pub state: Vec<usize>,
    /// Per mode, the split copies of state and input.
    pub parts: Vec<Vec<usize>>,
    pub modes: Vec<PwaMode>,
}

/// Sparse row `lo <= Σ coeff·var <= hi`.
type Row = (Vec<(usize, f64)>, f64, f64);

struct Rows {
    n_vars: usize,
    rows: Vec<Row>,
}

impl Rows {
    fn var(&mut self) -> usize {
        self.n_vars += 1;
        self.n_vars - 1
    }

    fn push(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        self.rows.push((coeffs.into_iter().filter(|c| c.1 != 0.0).collect(), lo, hi));
        self.rows.len() - 1
    }

    fn bounded_var(&mut self, lo: f64, hi: f64) -> usize {
        let v = self.var();
        self.push(vec![(v, 1.0)], lo, hi);
        v
    }
}

/// Builds the QP for `members`. Agents outside the coalition whose states
/// couple into it get copies for steps `1..N-1`; with `consensus` set, owned
/// states read by other coalitions are marked shared as well and `rho` is
/// added to the cost diagonal of every shared variable.
pub(crate) fn build_coalition_qp(
    net: &NetworkModel,
    members: &[usize],
    prob: &MpcProblem,
    x0: &[DVector<f64>],
    rho: f64,
) -> Result<CoalitionQp> {
    prob.validate()?;
    let horizon = prob.horizon;
    let is_member = {
        let mut v = vec![false; net.len()];
        members.iter().for_each(|&m| v[m] = true);
        v
    };
    let mut rows = Rows { n_vars: 0, rows: Vec::new() };
    let mut diag: Vec<f64> = Vec::new();
    let cost = |diag: &mut Vec<f64>, v: usize, w: f64| {
        if diag.len() <= v {
            diag.resize(v + 1, 0.0);
        }
        diag[v] += 2.0 * w;
    };

    let mut inputs = Vec::with_capacity(members.len());
    let mut states = Vec::with_capacity(members.len());
    for &i in members {
        let ub = net.input_box(i);
        let sb = net.state_box(i);
        let u_vars: Vec<Vec<usize>> = (0..horizon).map(|_| ub.iter().map(|iv| rows.bounded_var(iv.lo, iv.hi)).collect()).collect();
        let x_vars: Vec<Vec<usize>> = (1..=horizon).map(|_| sb.iter().map(|iv| rows.bounded_var(iv.lo, iv.hi)).collect()).collect();
        for t in 0..horizon {
            for &v in &u_vars[t] {
                cost(&mut diag, v, prob.input_weight);
            }
            let w = if t + 1 == horizon { prob.terminal_weight } else { prob.state_weight };
            for &v in &x_vars[t] {
                cost(&mut diag, v, w);
            }
        }
        inputs.push(u_vars);
        states.push(x_vars);
    }
    let pos: BTreeMap<usize, usize> = members.iter().enumerate().map(|(p, &m)| (m, p)).collect();

    // copies of outside states read by members, steps 1..N-1
    let mut shared: BTreeMap<SharedKey, usize> = BTreeMap::new();
    for c in net.couplings().iter().filter(|c| is_member[c.to] && !is_member[c.from]) {
        let sb = net.state_box(c.from);
        for t in 1..horizon {
            for (comp, iv) in sb.iter().enumerate() {
                shared.entry((c.from, t, comp)).or_insert_with(|| rows.bounded_var(iv.lo, iv.hi));
            }
        }
    }
    // owned states read by other coalitions
    for c in net.couplings().iter().filter(|c| !is_member[c.to] && is_member[c.from]) {
        let p = pos[&c.from];
        for t in 1..horizon {
            for (comp, &v) in states[p][t - 1].iter().enumerate() {
                shared.insert((c.from, t, comp), v);
            }
        }
    }

    let mut binaries = Vec::new();
    let mut mode_groups = Vec::new();
    for t in 0..horizon {
        for (p, &i) in members.iter().enumerate() {
            let sub = net.subsystem(i);
            let n_x = sub.n_x();
            // rows: x(t+1) - f(x(t), u(t)) - couplings = rhs
            let mut dyn_rows: Vec<(Vec<(usize, f64)>, f64)> = states[p][t].iter().map(|&v| (vec![(v, 1.0)], 0.0)).collect();
            let (own_x, own_u) = (if t == 0 { None } else { Some(&states[p][t - 1]) }, &inputs[p][t]);
            let pwa_split = t > 0 && matches!(sub.dynamics(), Dynamics::Pwa { modes } if modes.len() > 1);
            if pwa_split {
                let own_x = own_x.expect("t > 0");
                let (sb, ub) = (net.state_box(i), net.input_box(i));
                let mut x_sum: Vec<Vec<(usize, f64)>> = own_x.iter().map(|&v| vec![(v, 1.0)]).collect();
                let mut u_sum: Vec<Vec<(usize, f64)>> = own_u.iter().map(|&v| vec![(v, 1.0)]).collect();
                let mut one = Vec::new();
                mode_groups.push(ModeGroup { binaries: (binaries.len()..binaries.len() + sub.modes().len()).collect(), state: own_x.clone(), parts: Vec::new(), modes: sub.modes().to_vec() });
                for mode in sub.modes() {
                    let delta = rows.var();
                    let row = rows.push(vec![(delta, 1.0)], 0.0, 1.0);
                    binaries.push(BinaryVar { var: delta, row });
                    one.push((delta, 1.0));
                    let xm: Vec<usize> = (0..n_x).map(|_| rows.var()).collect();
                    let um: Vec<usize> = (0..sub.n_u()).map(|_| rows.var()).collect();
                    mode_groups.last_mut().expect("pushed above").parts.push(xm.iter().chain(&um).copied().collect());
                    for (k, &v) in xm.iter().enumerate() {
                        rows.push(vec![(v, 1.0), (delta, -sb[k].lo)], 0.0, f64::INFINITY);
                        rows.push(vec![(v, 1.0), (delta, -sb[k].hi)], f64::NEG_INFINITY, 0.0);
                        x_sum[k].push((v, -1.0));
                    }
                    for (k, &v) in um.iter().enumerate() {
                        rows.push(vec![(v, 1.0), (delta, -ub[k].lo)], 0.0, f64::INFINITY);
                        rows.push(vec![(v, 1.0), (delta, -ub[k].hi)], f64::NEG_INFINITY, 0.0);
                        u_sum[k].push((v, -1.0));
                    }
                    for h in &mode.guard {
                        let mut g: Vec<(usize, f64)> = h.normal.iter().zip(&xm).map(|(a, &v)| (v, *a)).collect();
                        g.push((delta, -h.offset));
                        rows.push(g, f64::NEG_INFINITY, 0.0);
                    }
                    for (r, (coeffs, _)) in dyn_rows.iter_mut().enumerate() {
                        coeffs.extend(xm.iter().enumerate().map(|(c, &v)| (v, -mode.a[(r, c)])));
                        coeffs.extend(um.iter().enumerate().map(|(c, &v)| (v, -mode.b[(r, c)])));
                    }
                }
                rows.push(one, 1.0, 1.0);
                for s in x_sum.into_iter().chain(u_sum) {
                    rows.push(s, 0.0, 0.0);
                }
            } else {
                let (a, b) = match sub.dynamics() {
                    Dynamics::Linear { a, b, .. } => (a, b),
                    Dynamics::Pwa { .. } => sub.mode_matrices(sub.active_mode(x0[i].as_slice())),
                };
                for (r, (coeffs, rhs)) in dyn_rows.iter_mut().enumerate() {
                    match own_x {
                        Some(xv) => coeffs.extend(xv.iter().enumerate().map(|(c, &v)| (v, -a[(r, c)]))),
                        None => *rhs += (0..n_x).map(|c| a[(r, c)] * x0[i][c]).sum::<f64>(),
                    }
                    coeffs.extend(own_u.iter().enumerate().map(|(c, &v)| (v, -b[(r, c)])));
                }
            }
            for c in net.couplings_into(i) {
                for (r, (coeffs, rhs)) in dyn_rows.iter_mut().enumerate() {
                    for comp in 0..c.gain.ncols() {
                        let g = c.gain[(r, comp)];
                        if t == 0 {
                            *rhs += g * x0[c.from][comp];
                        } else if let Some(&q) = pos.get(&c.from) {
                            coeffs.push((states[q][t - 1][comp], -g));
                        } else {
                            coeffs.push((shared[&(c.from, t, comp)], -g));
                        }
                    }
                }
            }
            for (coeffs, rhs) in dyn_rows {
                rows.push(coeffs, rhs, rhs);
            }
        }
    }

    let n = rows.n_vars;
    diag.resize(n, 0.0);
    let cost_diag = DVector::from_vec(diag);
    let mut p = DMatrix::from_diagonal(&cost_diag);
    for &v in shared.values() {
        p[(v, v)] += rho;
    }
    let m = rows.rows.len();
    let mut a = DMatrix::zeros(m, n);
    let mut l = DVector::zeros(m);
    let mut u = DVector::zeros(m);
    for (r, (coeffs, lo, hi)) in rows.rows.into_iter().enumerate() {
        for (v, c) in coeffs {
            a[(r, v)] += c;
        }
        l[r] = lo;
        u[r] = hi;
    }
    Ok(CoalitionQp {
        members: members.to_vec(),
        problem: QpProblem { p, q: DVector::zeros(n), a, l, u },
        binaries,
        cost_diag,
        inputs,
        states,
        shared,
        mode_groups,
    })
}

impl CoalitionQp {
    /// Control cost of a solution, without consensus terms.
    pub fn control_cost(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.iter().zip(self.cost_diag.iter()).map(|(v, d)| d * v * v).sum::<f64>()
    }

    /// Index of the chosen mode in `g`: a fixed choice, else the first open
    /// mode whose guard holds at the relaxed state, else the first open one.
    fn chosen_mode(g: &ModeGroup, x: &DVector<f64>, fix: &[Option<f64>]) -> usize {
        let state: Vec<f64> = g.state.iter().map(|&v| x[v]).collect();
        let open = || (0..g.modes.len()).filter(|&m| fix[g.binaries[m]] != Some(0.0));
        (0..g.modes.len())
            .find(|&m| fix[g.binaries[m]] == Some(1.0))
            .or_else(|| open().find(|&m| g.modes[m].contains(&state)))
            .or_else(|| open().next())
            .unwrap_or(0)
    }
}

impl BranchGuide for CoalitionQp {
    fn round(&self, x: &DVector<f64>, fix: &[Option<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.binaries.len()];
        for g in &self.mode_groups {
            out[g.binaries[Self::chosen_mode(g, x, fix)]] = 1.0;
        }
        out
    }

    /// Branches on the group whose relaxation spreads the most mass over
    /// modes other than the guard-consistent one. Groups where only the
    /// binaries are fractional are degenerate and left alone.
    fn pick(&self, x: &DVector<f64>, fix: &[Option<f64>]) -> Option<usize> {
        self.mode_groups
            .iter()
            .filter_map(|g| {
                let chosen = Self::chosen_mode(g, x, fix);
                let spread: f64 = (0..g.modes.len()).filter(|&m| m != chosen).flat_map(|m| g.parts[m].iter().map(|&v| x[v].abs())).sum();
                let b = g.binaries[chosen];
                (spread > 1e-7 && fix[b].is_none()).then_some((b, spread))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(b, _)| b)
    }
}

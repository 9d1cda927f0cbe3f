use std::fmt::Write as _;

use nalgebra::DVector;

use super::bigm::{coupling_big_m, indicator_bounds, BigM};
use super::{Layer, Schedule, TopologyLayers};
use crate::error::{invalid, Error, Result};
use crate::model::{Dynamics, Interval, NetworkModel, STRICT_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    State { agent: usize, comp: usize },
    Input { agent: usize, comp: usize },
    /// Successor state `x(k+1)`.
    Next { agent: usize, comp: usize },
    /// Externally supplied binary (decision or signal schedule value).
    Exogenous,
    Binary,
    Aux,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MldVar {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Linear row `Σ coeff·var  relation  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct MldRow {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Big-M data of one layered coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeConstants {
    pub from: usize,
    pub to: usize,
    pub big_m: BigM,
    /// `max (S x + R u − T)` of each state-dependent level, `None` for other levels.
    pub indicator_max: Vec<Option<f64>>,
}

/// One-step mixed-logical-dynamical template of a layered network.
#[derive(Clone, Debug, PartialEq)]
pub struct MldSystem {
    pub vars: Vec<MldVar>,
    pub rows: Vec<MldRow>,
    pub edge_constants: Vec<EdgeConstants>,
    /// Non-fatal findings, such as a guard region missing the box entirely.
    pub warnings: Vec<String>,
    exogenous: Vec<(usize, Schedule)>,
    state_vars: Vec<Vec<usize>>,
    input_vars: Vec<Vec<usize>>,
    next_vars: Vec<Vec<usize>>,
}

impl MldSystem {
    pub fn binary_count(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn binary_names(&self) -> Vec<&str> {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect()
    }

    /// Plain-text listing: one `var` line per variable, then one row per line
    /// as `row <label>: <coef> <var> ... <relation> <rhs>`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} variables, {} rows", self.vars.len(), self.rows.len());
        for v in &self.vars {
            let kind = match v.kind {
                VarKind::State { .. } => "state",
                VarKind::Input { .. } => "input",
                VarKind::Next { .. } => "next",
                VarKind::Exogenous => "exogenous",
                VarKind::Binary => "binary",
                VarKind::Aux => "aux",
            };
            let _ = writeln!(out, "var {} {kind}", v.name);
        }
        for r in &self.rows {
            let _ = write!(out, "row {}:", r.label);
            for &(v, c) in &r.coeffs {
                let _ = write!(out, " {c} {}", self.vars[v].name);
            }
            let _ = writeln!(out, " {} {}", r.relation.symbol(), r.rhs);
        }
        out
    }
}

struct Builder {
    vars: Vec<MldVar>,
    rows: Vec<MldRow>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) -> usize {
        self.vars.push(MldVar { name, kind });
        self.vars.len() - 1
    }

    fn row(&mut self, label: String, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        let coeffs = coeffs.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.rows.push(MldRow { label, coeffs, relation, rhs });
    }

    /// Four rows making `aux = bin · value` for `value ∈ [lo, hi]`, where
    /// `value` is the linear form `terms`.
    fn product_rows(&mut self, label: &str, aux: usize, bin: usize, terms: &[(usize, f64)], lo: f64, hi: f64) {
        let minus = |t: &[(usize, f64)]| t.iter().map(|&(v, c)| (v, -c)).collect::<Vec<_>>();
        self.row(format!("{label} upper"), vec![(aux, 1.0), (bin, -hi)], Relation::Le, 0.0);
        self.row(format!("{label} lower"), vec![(aux, 1.0), (bin, -lo)], Relation::Ge, 0.0);
        let mut r3 = vec![(aux, 1.0), (bin, -lo)];
        r3.extend(minus(terms));
        self.row(format!("{label} follow-upper"), r3, Relation::Le, -lo);
        let mut r4 = vec![(aux, 1.0), (bin, -hi)];
        r4.extend(minus(terms));
        self.row(format!("{label} follow-lower"), r4, Relation::Ge, -hi);
    }
}

fn range_of(terms: impl Iterator<Item = (f64, Interval)>) -> (f64, f64) {
    terms.fold((0.0, 0.0), |(lo, hi), (a, iv)| {
        let (p, q) = (a * iv.lo, a * iv.hi);
        (lo + p.min(q), hi + p.max(q))
    })
}

/// Compiles a layered network into MLD rows.
///
/// Each level of a layered coupling gets a binary, a defining row (reverse
/// indicator for state-dependent levels, equality with the schedule value
/// otherwise) and four product rows per gain row. State-dependent levels
/// also emit the forward indicator row. Piecewise-affine subsystems get one
/// binary per mode, a guard row and four product rows per state component,
/// plus a row forcing exactly one mode. Only single-row guards are supported.
pub fn to_mld(net: &NetworkModel, layers: &TopologyLayers) -> Result<MldSystem> {
    layers.validate(net, None)?;
    for i in 0..net.len() {
        if !net.state_box(i).iter().chain(net.input_box(i)).all(Interval::is_bounded) {
            return Err(invalid(format!("subsystem {} needs bounded state and input boxes", i + 1)));
        }
    }
    let mut b = Builder { vars: Vec::new(), rows: Vec::new() };
    let mut warnings = Vec::new();
    let mut exogenous = Vec::new();
    let mut edge_constants = Vec::new();
    let n = net.len();
    let state_vars: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..net.subsystem(i).n_x()).map(|c| b.var(format!("x{}[{}]", i + 1, c + 1), VarKind::State { agent: i, comp: c })).collect())
        .collect();
    let input_vars: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..net.subsystem(i).n_u()).map(|c| b.var(format!("u{}[{}]", i + 1, c + 1), VarKind::Input { agent: i, comp: c })).collect())
        .collect();
    let next_vars: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..net.subsystem(i).n_x()).map(|c| b.var(format!("xnext{}[{}]", i + 1, c + 1), VarKind::Next { agent: i, comp: c })).collect())
        .collect();
    // dyn_terms[i][r]: terms moved to the left of `xnext - ... = 0`
    let mut dyn_terms: Vec<Vec<Vec<(usize, f64)>>> =
        (0..n).map(|i| next_vars[i].iter().map(|&v| vec![(v, 1.0)]).collect()).collect();

    for i in 0..n {
        let sub = net.subsystem(i);
        let bx: Vec<Interval> = net.state_box(i).iter().chain(net.input_box(i)).copied().collect();
        let xu: Vec<usize> = state_vars[i].iter().chain(&input_vars[i]).copied().collect();
        let affine_row = |a: &nalgebra::DMatrix<f64>, bm: &nalgebra::DMatrix<f64>, r: usize| -> Vec<(usize, f64)> {
            a.row(r).iter().chain(bm.row(r).iter()).zip(&xu).map(|(c, &v)| (v, *c)).collect()
        };
        match sub.dynamics() {
            Dynamics::Linear { a, b: bm, .. } => {
                for r in 0..sub.n_x() {
                    dyn_terms[i][r].extend(affine_row(a, bm, r).into_iter().map(|(v, c)| (v, -c)));
                }
            }
            Dynamics::Pwa { modes } => {
                let mut deltas = Vec::new();
                for (m, mode) in modes.iter().enumerate() {
                    if mode.guard.len() > 1 {
                        return Err(invalid(format!("subsystem {} mode {} has a multi-row guard; only single-row guards compile", i + 1, m + 1)));
                    }
                    let delta = b.var(format!("delta{}_m{}", i + 1, m + 1), VarKind::Binary);
                    deltas.push((delta, 1.0));
                    if let Some(h) = mode.guard.first() {
                        let (_, mx) = range_of(h.normal.iter().copied().zip(net.state_box(i).iter().copied()));
                        let mx = mx - h.offset;
                        let mut coeffs: Vec<(usize, f64)> = h.normal.iter().zip(&state_vars[i]).map(|(c, &v)| (v, *c)).collect();
                        coeffs.push((delta, mx));
                        b.row(format!("agent {} mode {} guard", i + 1, m + 1), coeffs, Relation::Le, h.offset + mx);
                    }
                    for r in 0..sub.n_x() {
                        let terms = affine_row(&mode.a, &mode.b, r);
                        let (lo, hi) = range_of(terms.iter().map(|&(_, c)| c).zip(bx.iter().copied()));
                        let y = b.var(format!("y{}_m{}[{}]", i + 1, m + 1, r + 1), VarKind::Aux);
                        b.product_rows(&format!("agent {} mode {} comp {}", i + 1, m + 1, r + 1), y, delta, &terms, lo, hi);
                        dyn_terms[i][r].push((y, -1.0));
                    }
                }
                b.row(format!("agent {} one mode", i + 1), deltas, Relation::Eq, 1.0);
            }
        }
    }

    for c in net.couplings() {
        let (from, to) = (c.from, c.to);
        let gain_terms = |r: usize| -> Vec<(usize, f64)> { c.gain.row(r).iter().zip(&state_vars[from]).map(|(g, &v)| (v, *g)).collect() };
        let Some(el) = layers.for_edge(from, to) else {
            for r in 0..c.gain.nrows() {
                dyn_terms[to][r].extend(gain_terms(r).into_iter().map(|(v, g)| (v, -g)));
            }
            continue;
        };
        let big_m = coupling_big_m(&c.gain, net.state_box(from))?;
        let tag = format!("edge {}->{}", from + 1, to + 1);
        let mut indicator_max = Vec::new();
        let mut prev: Vec<Vec<(usize, f64)>> = (0..c.gain.nrows()).map(gain_terms).collect();
        for (q, layer) in el.layers.iter().enumerate() {
            let lvl = q + 1;
            let eps = b.var(format!("eps{}_{}_l{lvl}", from + 1, to + 1), VarKind::Binary);
            match layer {
                Layer::StateDependent { s, r, t } => {
                    if s.nrows() != 1 {
                        return Err(invalid(format!("{tag} level {lvl}: only single-row guard regions compile to MLD")));
                    }
                    let (mn, mx) = indicator_bounds(s, r, t, net.state_box(from), net.input_box(from))?[0];
                    indicator_max.push(Some(mx));
                    let mut lin: Vec<(usize, f64)> = s.row(0).iter().zip(&state_vars[from]).map(|(a, &v)| (v, *a)).collect();
                    lin.extend(r.row(0).iter().zip(&input_vars[from]).map(|(a, &v)| (v, *a)));
                    let mut fwd = lin.clone();
                    fwd.push((eps, mx));
                    b.row(format!("{tag} level {lvl} indicator"), fwd, Relation::Le, t[0] + mx);
                    if mn > 0.0 {
                        warnings.push(format!("{tag} level {lvl}: guard region misses the box; link forced off"));
                        b.row(format!("{tag} level {lvl} forced off"), vec![(eps, 1.0)], Relation::Eq, 0.0);
                    } else {
                        let mut rev = lin;
                        rev.push((eps, -(mn - STRICT_MARGIN)));
                        b.row(format!("{tag} level {lvl} reverse indicator"), rev, Relation::Ge, t[0] + STRICT_MARGIN);
                    }
                }
                Layer::Decision(sch) | Layer::Signal(sch) => {
                    indicator_max.push(None);
                    let sigma = b.var(format!("sigma{}_{}_l{lvl}", from + 1, to + 1), VarKind::Exogenous);
                    exogenous.push((sigma, sch.clone()));
                    b.row(format!("{tag} level {lvl} schedule"), vec![(eps, 1.0), (sigma, -1.0)], Relation::Eq, 0.0);
                }
            }
            let mut next_prev = Vec::with_capacity(prev.len());
            for (r, terms) in prev.iter().enumerate() {
                let z = b.var(format!("z{}_{}_l{lvl}[{}]", from + 1, to + 1, r + 1), VarKind::Aux);
                let m = big_m.rows[r];
                b.product_rows(&format!("{tag} level {lvl} comp {}", r + 1), z, eps, terms, -m, m);
                next_prev.push(vec![(z, 1.0)]);
            }
            prev = next_prev;
        }
        for (r, terms) in prev.into_iter().enumerate() {
            dyn_terms[to][r].extend(terms.into_iter().map(|(v, g)| (v, -g)));
        }
        edge_constants.push(EdgeConstants { from, to, big_m, indicator_max });
    }

    for (i, rows) in dyn_terms.into_iter().enumerate() {
        for (r, terms) in rows.into_iter().enumerate() {
            b.row(format!("agent {} dynamics comp {}", i + 1, r + 1), terms, Relation::Eq, 0.0);
        }
    }
    Ok(MldSystem { vars: b.vars, rows: b.rows, edge_constants, warnings, exogenous, state_vars, input_vars, next_vars })
}

/// Trajectory of an MLD simulation with the binary record.
#[derive(Clone, Debug, PartialEq)]
pub struct MldTrajectory {
    pub states: Vec<Vec<DVector<f64>>>,
    /// `binaries[k]` follows the order of [`MldSystem::binary_names`].
    pub binaries: Vec<Vec<bool>>,
}

struct Block {
    rows: Vec<usize>,
    binaries: Vec<usize>,
    aux: Vec<usize>,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn blocks(mld: &MldSystem) -> Vec<Block> {
    let nv = mld.vars.len();
    let unknown = |v: usize| matches!(mld.vars[v].kind, VarKind::Binary | VarKind::Aux);
    let is_dyn = |r: &MldRow| r.coeffs.iter().any(|&(v, _)| matches!(mld.vars[v].kind, VarKind::Next { .. }));
    let mut parent: Vec<usize> = (0..nv).collect();
    for r in mld.rows.iter().filter(|r| !is_dyn(r)) {
        let mut it = r.coeffs.iter().map(|&(v, _)| v).filter(|&v| unknown(v));
        if let Some(first) = it.next() {
            for v in it {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                parent[a] = b;
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Block> = std::collections::BTreeMap::new();
    for v in (0..nv).filter(|&v| unknown(v)) {
        let root = find(&mut parent, v);
        let blk = by_root.entry(root).or_insert_with(|| Block { rows: Vec::new(), binaries: Vec::new(), aux: Vec::new() });
        if mld.vars[v].kind == VarKind::Binary {
            blk.binaries.push(v);
        } else {
            blk.aux.push(v);
        }
    }
    for (ri, r) in mld.rows.iter().enumerate().filter(|(_, r)| !is_dyn(r)) {
        if let Some(&(v, _)) = r.coeffs.iter().find(|&&(v, _)| unknown(v)) {
            let root = find(&mut parent, v);
            by_root.get_mut(&root).expect("root registered above").rows.push(ri);
        }
    }
    by_root.into_values().collect()
}

/// Largest scaled violation of a row under fully known values.
fn violation(row: &MldRow, vals: &[f64]) -> f64 {
    let (mut lhs, mut scale) = (0.0, 1.0 + row.rhs.abs());
    for &(v, c) in &row.coeffs {
        lhs += c * vals[v];
        scale += (c * vals[v]).abs();
    }
    let d = lhs - row.rhs;
    let raw = match row.relation {
        Relation::Le => d.max(0.0),
        Relation::Ge => (-d).max(0.0),
        Relation::Eq => d.abs(),
    };
    raw / scale
}

/// Tightens aux intervals from the rows of a block until nothing changes.
fn propagate(mld: &MldSystem, blk: &Block, vals: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let is_aux = |v: usize| mld.vars[v].kind == VarKind::Aux;
    for _ in 0..64 {
        let mut changed = false;
        for &ri in &blk.rows {
            let row = &mld.rows[ri];
            let known: f64 = row.coeffs.iter().filter(|&&(v, _)| !is_aux(v)).map(|&(v, c)| c * vals[v]).sum();
            let rest = row.rhs - known;
            let aux: Vec<(usize, f64)> = row.coeffs.iter().copied().filter(|&(v, _)| is_aux(v)).collect();
            for (k, &(a, ca)) in aux.iter().enumerate() {
                let (mut min_o, mut max_o) = (0.0, 0.0);
                for (j, &(b, cb)) in aux.iter().enumerate() {
                    if j != k {
                        let (p, q) = (cb * lo[b], cb * hi[b]);
                        min_o += p.min(q);
                        max_o += p.max(q);
                    }
                }
                // ca·z ≤ rest − min_o (Le) and/or ca·z ≥ rest − max_o (Ge)
                let upper_on_cz = if row.relation != Relation::Ge { Some(rest - min_o) } else { None };
                let lower_on_cz = if row.relation != Relation::Le { Some(rest - max_o) } else { None };
                let (mut new_lo, mut new_hi) = (lo[a], hi[a]);
                if let Some(ub) = upper_on_cz.filter(|v| v.is_finite()) {
                    if ca > 0.0 { new_hi = new_hi.min(ub / ca) } else { new_lo = new_lo.max(ub / ca) }
                }
                if let Some(lb) = lower_on_cz.filter(|v| v.is_finite()) {
                    if ca > 0.0 { new_lo = new_lo.max(lb / ca) } else { new_hi = new_hi.min(lb / ca) }
                }
                if new_lo > lo[a] + 1e-15 || new_hi < hi[a] - 1e-15 {
                    changed = true;
                }
                lo[a] = new_lo;
                hi[a] = new_hi;
            }
        }
        if !changed {
            break;
        }
    }
}

const ROW_TOL: f64 = 1e-9;
const MAX_BLOCK_BINARIES: usize = 20;

/// Simulates an MLD system by resolving binaries and auxiliaries from the
/// constraint rows at every step.
pub fn simulate_mld(mld: &MldSystem, x0: &[DVector<f64>], inputs: &[Vec<DVector<f64>>], steps: usize) -> Result<MldTrajectory> {
    let n = mld.state_vars.len();
    if x0.len() != n || inputs.len() < steps {
        return Err(Error::Dimension("initial state or input sequence does not match the MLD system".into()));
    }
    let blks = blocks(mld);
    if let Some(b) = blks.iter().find(|b| b.binaries.len() > MAX_BLOCK_BINARIES) {
        return Err(invalid(format!("a constraint block couples {} binaries; at most {MAX_BLOCK_BINARIES} are enumerated", b.binaries.len())));
    }
    let binary_vars: Vec<usize> = (0..mld.vars.len()).filter(|&v| mld.vars[v].kind == VarKind::Binary).collect();
    let mut traj = MldTrajectory { states: vec![x0.to_vec()], binaries: Vec::new() };
    let mut vals = vec![f64::NAN; mld.vars.len()];
    for (k, u) in inputs.iter().enumerate().take(steps) {
        vals.iter_mut().for_each(|v| *v = f64::NAN);
        let x = traj.states.last().expect("starts with x0");
        for i in 0..n {
            if x[i].len() != mld.state_vars[i].len() || u[i].len() != mld.input_vars[i].len() {
                return Err(Error::Dimension(format!("subsystem {} vector sizes differ from the MLD template", i + 1)));
            }
            for (c, &v) in mld.state_vars[i].iter().enumerate() {
                vals[v] = x[i][c];
            }
            for (c, &v) in mld.input_vars[i].iter().enumerate() {
                vals[v] = u[i][c];
            }
        }
        for (v, sch) in &mld.exogenous {
            let b = sch.at(k).ok_or_else(|| invalid(format!("schedule for {} ends before step {k}", mld.vars[*v].name)))?;
            vals[*v] = f64::from(u8::from(b));
        }
        for blk in &blks {
            solve_block(mld, blk, &mut vals, k)?;
        }
        let mut next: Vec<DVector<f64>> = mld.next_vars.iter().map(|nv| DVector::zeros(nv.len())).collect();
        for row in mld.rows.iter() {
            let Some(&(nv, cn)) = row.coeffs.iter().find(|&&(v, _)| matches!(mld.vars[v].kind, VarKind::Next { .. })) else { continue };
            let rest: f64 = row.coeffs.iter().filter(|&&(v, _)| v != nv).map(|&(v, c)| c * vals[v]).sum();
            let VarKind::Next { agent, comp } = mld.vars[nv].kind else { unreachable!() };
            next[agent][comp] = (row.rhs - rest) / cn;
        }
        traj.binaries.push(binary_vars.iter().map(|&v| vals[v] > 0.5).collect());
        traj.states.push(next);
    }
    Ok(traj)
}

fn solve_block(mld: &MldSystem, blk: &Block, vals: &mut [f64], step: usize) -> Result<()> {
    let nb = blk.binaries.len();
    let mut found: Option<Vec<f64>> = None;
    let mut count = 0;
    let mut closest: Option<(f64, String)> = None;
    let mut lo = vec![f64::NEG_INFINITY; vals.len()];
    let mut hi = vec![f64::INFINITY; vals.len()];
    for mask in 0..(1u64 << nb) {
        for (j, &v) in blk.binaries.iter().enumerate() {
            vals[v] = (mask >> j & 1) as f64;
        }
        for &a in &blk.aux {
            lo[a] = f64::NEG_INFINITY;
            hi[a] = f64::INFINITY;
        }
        propagate(mld, blk, vals, &mut lo, &mut hi);
        let pinned = blk.aux.iter().all(|&a| lo[a].is_finite() && hi[a].is_finite() && hi[a] - lo[a] <= ROW_TOL * (1.0 + lo[a].abs()));
        if !pinned {
            continue;
        }
        for &a in &blk.aux {
            vals[a] = 0.5 * (lo[a] + hi[a]);
        }
        let worst = blk.rows.iter().map(|&ri| (violation(&mld.rows[ri], vals), ri)).fold((0.0, usize::MAX), |acc, c| if c.0 > acc.0 { c } else { acc });
        if worst.0 <= ROW_TOL {
            count += 1;
            if found.is_none() {
                found = Some(blk.binaries.iter().chain(&blk.aux).map(|&v| vals[v]).collect());
            }
        } else if closest.as_ref().is_none_or(|c| worst.0 < c.0) {
            closest = Some((worst.0, mld.rows[worst.1].label.clone()));
        }
    }
    match (count, found) {
        (1, Some(sol)) => {
            for (&v, s) in blk.binaries.iter().chain(&blk.aux).zip(sol) {
                vals[v] = s;
            }
            Ok(())
        }
        (0, _) => Err(Error::BandViolated {
            step,
            band: closest.map_or_else(|| "auxiliary variables are not determined".to_string(), |c| c.1),
        }),
        _ => Err(invalid(format!("step {step}: {count} binary assignments satisfy the same constraint block"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, SubsystemModel};
    use crate::topology::{simulate_pwa, EdgeLayers};

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn two_agents(gain: f64) -> NetworkModel {
        NetworkModel::uniform_scalar(2, SubsystemModel::scalar_linear(0.5, 1.0), vec![Coupling::scalar(0, 1, gain)], Interval::symmetric(0.9), Interval::symmetric(0.5)).unwrap()
    }

    fn three_layers(decision: Schedule, signal: Schedule) -> TopologyLayers {
        TopologyLayers::new(vec![EdgeLayers {
            from: 0,
            to: 1,
            layers: vec![Layer::nonnegative_source(1, 1, 0), Layer::Decision(decision), Layer::Signal(signal)],
        }])
    }

    #[test]
    fn row_count_of_two_agent_example() {
        let mld = to_mld(&two_agents(0.3), &three_layers(Schedule::Constant(true), Schedule::Constant(true))).unwrap();
        assert_eq!(mld.rows.len(), 1 + 15 + 2);
        assert_eq!(mld.binary_count(), 3);
        assert!(mld.export().lines().filter(|l| l.starts_with("row ")).count() == 18);
    }

    #[test]
    fn no_edges_is_decoupled_linear() {
        let net = NetworkModel::uniform_scalar(2, SubsystemModel::scalar_linear(0.5, 1.0), vec![], Interval::symmetric(1.0), Interval::symmetric(1.0)).unwrap();
        let mld = to_mld(&net, &TopologyLayers::default()).unwrap();
        assert_eq!(mld.binary_count(), 0);
        assert_eq!(mld.rows.len(), 2);
        let t = simulate_mld(&mld, &[scalar(0.4), scalar(-0.2)], &[vec![scalar(0.1), scalar(0.0)]], 1).unwrap();
        assert!((t.states[1][0][0] - 0.3).abs() < 1e-15);
        assert!((t.states[1][1][0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn fixed_layers_force_product_value() {
        let net = two_agents(0.3);
        let mld = to_mld(&net, &three_layers(Schedule::Constant(true), Schedule::Constant(true))).unwrap();
        let t = simulate_mld(&mld, &[scalar(0.4), scalar(0.0)], &[vec![scalar(0.0), scalar(0.0)]], 1).unwrap();
        assert!(mld.vars.iter().any(|v| v.name == "z1_2_l3[1]"));
        assert_eq!(t.binaries[0], vec![true, true, true]);
        assert!((t.states[1][1][0] - 0.3 * 0.4).abs() < 1e-12);
    }

    #[test]
    fn any_zero_layer_cuts_the_link() {
        let net = two_agents(0.3);
        let mld = to_mld(&net, &three_layers(Schedule::Sequence(vec![true, false, true]), Schedule::Sequence(vec![true, true, false]))).unwrap();
        let x0 = [scalar(0.4), scalar(0.1)];
        let u = vec![vec![scalar(0.0), scalar(0.0)]; 3];
        let t = simulate_mld(&mld, &x0, &u, 3).unwrap();
        let p = simulate_pwa(&net, &three_layers(Schedule::Sequence(vec![true, false, true]), Schedule::Sequence(vec![true, true, false])), &x0, &u, 3).unwrap();
        assert_eq!(p.links.iter().map(|l| l[0]).collect::<Vec<_>>(), vec![true, false, false]);
        for k in 0..=3 {
            for i in 0..2 {
                assert!((t.states[k][i][0] - p.states[k][i][0]).abs() < 1e-12);
            }
        }
        assert!(simulate_mld(&mld, &x0, &vec![vec![scalar(0.0), scalar(0.0)]; 4], 4).is_err());
    }

    #[test]
    fn negative_source_deactivates_state_layer() {
        let net = two_agents(0.3);
        let mld = to_mld(&net, &three_layers(Schedule::Constant(true), Schedule::Constant(true))).unwrap();
        let t = simulate_mld(&mld, &[scalar(-0.4), scalar(0.2)], &[vec![scalar(0.0), scalar(0.0)]], 1).unwrap();
        assert!(!t.binaries[0][0]);
        assert!((t.states[1][1][0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hybrid_agents_compile() {
        let net = NetworkModel::uniform_scalar(2, SubsystemModel::scalar_hybrid(0.5, 1.0, -0.5, 1.0), vec![Coupling::scalar(1, 0, 0.2)], Interval::symmetric(0.9), Interval::symmetric(0.5)).unwrap();
        let mld = to_mld(&net, &TopologyLayers::default()).unwrap();
        let x0 = [scalar(-0.4), scalar(0.6)];
        let u = vec![vec![scalar(0.05), scalar(-0.1)]];
        let t = simulate_mld(&mld, &x0, &u, 1).unwrap();
        let p = simulate_pwa(&net, &TopologyLayers::default(), &x0, &u, 1).unwrap();
        assert!((t.states[1][0][0] - p.states[1][0][0]).abs() < 1e-12);
        assert!((t.states[1][1][0] - p.states[1][1][0]).abs() < 1e-12);
    }

    #[test]
    fn empty_guard_region_warns_and_forces_off() {
        let net = two_agents(0.3);
        let layers = TopologyLayers::new(vec![EdgeLayers {
            from: 0,
            to: 1,
            layers: vec![Layer::StateDependent {
                s: nalgebra::DMatrix::from_element(1, 1, -1.0),
                r: nalgebra::DMatrix::zeros(1, 1),
                t: DVector::from_element(1, -2.0),
            }],
        }]);
        let mld = to_mld(&net, &layers).unwrap();
        assert_eq!(mld.warnings.len(), 1);
        let t = simulate_mld(&mld, &[scalar(0.5), scalar(0.0)], &[vec![scalar(0.0), scalar(0.0)]], 1).unwrap();
        assert_eq!(t.binaries[0], vec![false]);
    }
}

//! Dense convex QP kernel: `min ½xᵀPx + qᵀx  s.t.  l ≤ Ax ≤ u`.
//!
//! Operator-splitting iterations give a warm estimate of the active set,
//! which is then refined by exact KKT solves until primal feasibility and
//! dual signs hold.

mod bnb;

pub use bnb::{branch_and_bound, branch_and_bound_with, BinaryVar, BranchGuide, MiqpOutcome, DEFAULT_NODE_BUDGET};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

impl QpProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.q.len();
        let m = self.a.nrows();
        if self.p.shape() != (n, n) || self.a.ncols() != n || self.l.len() != m || self.u.len() != m {
            return Err(Error::Dimension(format!("QP with {n} variables and {m} rows has inconsistent data")));
        }
        if self.l.iter().zip(self.u.iter()).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::InvalidInput("QP bounds need l <= u".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpSettings {
    pub rho: f64,
    pub sigma: f64,
    pub relaxation: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_infeasible: f64,
    pub max_iter: usize,
    /// Feasibility and sign tolerance of the refined active-set solution.
    pub kkt_tol: f64,
    pub max_refine: usize,
    /// Run the exact active-set refinement after the splitting iterations.
    pub refine: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1e-6,
            relaxation: 1.6,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            eps_infeasible: 1e-6,
            max_iter: 20_000,
            kkt_tol: 1e-10,
            max_refine: 200,
            refine: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    /// Refined to an exact KKT point.
    Solved,
    /// Splitting iterations converged but refinement did not certify the active set.
    SolvedInaccurate,
    MaxIterations,
    PrimalInfeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers, positive at active upper bounds and negative at active lower bounds.
    pub y: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: QpStatus,
}

const RHO_EQ_SCALE: f64 = 1e3;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const CHECK_EVERY: usize = 5;
const ADAPT_EVERY: usize = 25;

/// Row-wise nonzeros of a dense matrix, for cheap products.
#[derive(Clone, Debug)]
struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows()).map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect()).collect();
        Self { ncols: m.ncols(), rows }
    }

    fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()))
    }

    fn tr_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            if y[i] != 0.0 {
                for &(j, v) in r {
                    out[j] += v * y[i];
                }
            }
        }
        out
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Reusable solver: the factorization survives changes of `q`, `l` and `u`
/// and the last iterate warm-starts the next solve.
#[derive(Clone, Debug)]
pub struct QpSolver {
    prob: QpProblem,
    settings: QpSettings,
    a_sparse: SparseRows,
    p_sparse: SparseRows,
    rho: f64,
    rho_vec: DVector<f64>,
    factor: Option<Cholesky<f64, Dyn>>,
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
}

impl QpSolver {
    pub fn new(prob: QpProblem, settings: QpSettings) -> Result<Self> {
        prob.validate()?;
        let (n, m) = (prob.q.len(), prob.a.nrows());
        let mut s = Self {
            rho: settings.rho,
            rho_vec: DVector::zeros(m),
            factor: None,
            x: DVector::zeros(n),
            z: DVector::zeros(m),
            y: DVector::zeros(m),
            a_sparse: SparseRows::from_dense(&prob.a),
            p_sparse: SparseRows::from_dense(&prob.p),
            prob,
            settings,
        };
        s.refactor()?;
        Ok(s)
    }

    pub fn problem(&self) -> &QpProblem {
        &self.prob
    }

    pub fn settings_mut(&mut self) -> &mut QpSettings {
        &mut self.settings
    }

    pub fn update_q(&mut self, q: DVector<f64>) -> Result<()> {
        if q.len() != self.prob.q.len() {
            return Err(Error::Dimension("linear cost has the wrong length".into()));
        }
        self.prob.q = q;
        Ok(())
    }

    /// Changes row bounds; refactors only when a row switches between
    /// equality and inequality.
    pub fn update_bounds(&mut self, l: DVector<f64>, u: DVector<f64>) -> Result<()> {
        if l.len() != self.prob.l.len() || u.len() != self.prob.u.len() {
            return Err(Error::Dimension("bound vectors have the wrong length".into()));
        }
        let eq_changed = (0..l.len()).any(|i| (l[i] == u[i]) != (self.prob.l[i] == self.prob.u[i]));
        self.prob.l = l;
        self.prob.u = u;
        self.prob.validate()?;
        if eq_changed {
            self.refactor()?;
        }
        Ok(())
    }

    pub fn set_row_bounds(&mut self, row: usize, lo: f64, hi: f64) -> Result<()> {
        let (mut l, mut u) = (self.prob.l.clone(), self.prob.u.clone());
        l[row] = lo;
        u[row] = hi;
        self.update_bounds(l, u)
    }

    pub fn warm_start(&mut self, x: &DVector<f64>, y: &DVector<f64>) {
        if x.len() == self.x.len() && y.len() == self.y.len() {
            self.x.copy_from(x);
            self.y.copy_from(y);
            self.z = self.a_sparse.mul(x);
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.prob.a.nrows();
        for i in 0..m {
            let (l, u) = (self.prob.l[i], self.prob.u[i]);
            self.rho_vec[i] = if l == u {
                self.rho * RHO_EQ_SCALE
            } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
                RHO_MIN
            } else {
                self.rho
            };
        }
        let n = self.prob.q.len();
        let mut k = self.prob.p.clone();
        for i in 0..n {
            k[(i, i)] += self.settings.sigma;
        }
        for (i, row) in self.a_sparse.rows.iter().enumerate() {
            let r = self.rho_vec[i];
            for &(a, va) in row {
                for &(b, vb) in row {
                    k[(a, b)] += r * va * vb;
                }
            }
        }
        self.factor = Some(Cholesky::new(k).ok_or_else(|| Error::InvalidInput("QP cost matrix is not positive semidefinite".into()))?);
        Ok(())
    }

    fn project(&self, v: &mut DVector<f64>) {
        for i in 0..v.len() {
            v[i] = v[i].clamp(self.prob.l[i], self.prob.u[i]);
        }
    }

    fn infeasibility_certificate(&self, dy: &DVector<f64>) -> bool {
        let norm = inf_norm(dy);
        if norm <= 1e-14 {
            return false;
        }
        let eps = self.settings.eps_infeasible * norm;
        if inf_norm(&self.a_sparse.tr_mul(dy)) > eps {
            return false;
        }
        let mut support = 0.0;
        for i in 0..dy.len() {
            let d = dy[i];
            if d > 0.0 {
                if self.prob.u[i] == f64::INFINITY {
                    if d > eps {
                        return false;
                    }
                    continue;
                }
                support += self.prob.u[i] * d;
            } else if d < 0.0 {
                if self.prob.l[i] == f64::NEG_INFINITY {
                    if -d > eps {
                        return false;
                    }
                    continue;
                }
                support += self.prob.l[i] * d;
            }
        }
        support < -eps
    }

    pub fn solve(&mut self) -> Result<QpSolution> {
        let s = self.settings;
        let alpha = s.relaxation;
        let mut iterations = 0;
        let mut status = QpStatus::MaxIterations;
        let mut adapt_count = 0;
        while iterations < s.max_iter {
            iterations += 1;
            let y_prev = self.y.clone();
            let mut rhs = &self.x * s.sigma - &self.prob.q;
            let rz = self.rho_vec.component_mul(&self.z) - &self.y;
            rhs += self.a_sparse.tr_mul(&rz);
            let x_t = self.factor.as_ref().expect("factored on construction").solve(&rhs);
            let z_t = self.a_sparse.mul(&x_t);
            self.x = &x_t * alpha + &self.x * (1.0 - alpha);
            let z_hat = &z_t * alpha + &self.z * (1.0 - alpha);
            let mut z_new = &z_hat + self.y.component_div(&self.rho_vec);
            self.project(&mut z_new);
            self.y += self.rho_vec.component_mul(&(&z_hat - &z_new));
            self.z = z_new;

            if iterations % CHECK_EVERY == 0 || iterations == s.max_iter {
                let ax = self.a_sparse.mul(&self.x);
                let px = self.p_sparse.mul(&self.x);
                let aty = self.a_sparse.tr_mul(&self.y);
                let r_prim = inf_norm(&(&ax - &self.z));
                let r_dual = inf_norm(&(&px + &self.prob.q + &aty));
                let prim_scale = inf_norm(&ax).max(inf_norm(&self.z));
                let dual_scale = inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&self.prob.q));
                if r_prim <= s.eps_abs + s.eps_rel * prim_scale && r_dual <= s.eps_abs + s.eps_rel * dual_scale {
                    status = QpStatus::SolvedInaccurate;
                    break;
                }
                if self.infeasibility_certificate(&(&self.y - &y_prev)) {
                    status = QpStatus::PrimalInfeasible;
                    break;
                }
                if iterations % ADAPT_EVERY == 0 && adapt_count < 50 {
                    let ratio = (r_prim / prim_scale.max(1e-12)) / (r_dual / dual_scale.max(1e-12)).max(1e-30);
                    let scale = ratio.sqrt();
                    if !(0.2..=5.0).contains(&scale) && scale.is_finite() {
                        self.rho = (self.rho * scale).clamp(RHO_MIN, RHO_MAX);
                        adapt_count += 1;
                        self.refactor()?;
                    }
                }
            }
        }
        if status == QpStatus::PrimalInfeasible {
            return Ok(QpSolution { x: self.x.clone(), y: self.y.clone(), objective: f64::INFINITY, iterations, status });
        }
        let refined = if s.refine {
            refine_active_set(&self.prob, &self.z, &self.y, &s)
        } else {
            None
        };
        if let Some((x, y)) = refined {
            self.x.copy_from(&x);
            self.z = self.a_sparse.mul(&x);
            self.y.copy_from(&y);
            let objective = self.prob.objective(&x);
            return Ok(QpSolution { x, y, objective, iterations, status: QpStatus::Solved });
        }
        let objective = 0.5 * self.x.dot(&self.p_sparse.mul(&self.x)) + self.prob.q.dot(&self.x);
        Ok(QpSolution { x: self.x.clone(), y: self.y.clone(), objective, iterations, status })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Active {
    Free,
    Lower,
    Upper,
    Fixed,
}

/// Solves `[P Aₐᵀ; Aₐ 0][x; yₐ] = [−q; bₐ]` with a tiny regularization and
/// iterative refinement against the exact matrix.
fn solve_kkt(prob: &QpProblem, active: &[(usize, f64)]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = prob.q.len();
    let k = active.len();
    let dim = n + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&prob.p);
    for (r, &(row, _)) in active.iter().enumerate() {
        for c in 0..n {
            let v = prob.a[(row, c)];
            kkt[(n + r, c)] = v;
            kkt[(c, n + r)] = v;
        }
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-&prob.q));
    for (r, &(_, b)) in active.iter().enumerate() {
        rhs[n + r] = b;
    }
    let scale = kkt.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let delta = 1e-11 * scale;
    let mut reg = kkt.clone();
    for i in 0..n {
        reg[(i, i)] += delta;
    }
    for i in n..dim {
        reg[(i, i)] -= delta;
    }
    let lu = reg.lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..10 {
        let res = &rhs - &kkt * &sol;
        if inf_norm(&res) <= 1e-15 * (1.0 + inf_norm(&rhs)) {
            break;
        }
        sol += lu.solve(&res)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let x = sol.rows(0, n).into_owned();
    let ya = sol.rows(n, k).into_owned();
    Some((x, ya))
}

fn refine_active_set(prob: &QpProblem, z: &DVector<f64>, y: &DVector<f64>, s: &QpSettings) -> Option<(DVector<f64>, DVector<f64>)> {
    let m = prob.a.nrows();
    let scale = 1.0 + inf_norm(&prob.q) + prob.l.iter().chain(prob.u.iter()).filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = s.kkt_tol * scale;
    // rows sitting on a bound with a negligible multiplier start free; if
    // they matter the primal check brings them back
    let y_floor = 1e-7 * (1.0 + inf_norm(y));
    let mut state: Vec<Active> = (0..m)
        .map(|i| {
            let (l, u) = (prob.l[i], prob.u[i]);
            if l == u {
                Active::Fixed
            } else if y[i] < -y_floor && z[i] - l < -y[i] {
                Active::Lower
            } else if y[i] > y_floor && u - z[i] < y[i] {
                Active::Upper
            } else {
                Active::Free
            }
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    // whole batches of corrections first, single steps once a batch cycles
    let mut batch = true;
    for _ in 0..s.max_refine {
        if !seen.insert(state.clone()) {
            if !batch {
                return None;
            }
            batch = false;
            seen.clear();
            seen.insert(state.clone());
        }
        let active: Vec<(usize, f64)> = (0..m)
            .filter_map(|i| match state[i] {
                Active::Free => None,
                Active::Lower | Active::Fixed => Some((i, prob.l[i])),
                Active::Upper => Some((i, prob.u[i])),
            })
            .collect();
        let (x, ya) = solve_kkt(prob, &active)?;
        let mut yfull = DVector::zeros(m);
        for (r, &(row, _)) in active.iter().enumerate() {
            yfull[row] = ya[r];
        }
        let ax = &prob.a * &x;
        let mut primal: Vec<(usize, f64, Active)> = (0..m)
            .filter(|&i| state[i] == Active::Free)
            .filter_map(|i| {
                let (lo_v, hi_v) = (prob.l[i] - ax[i], ax[i] - prob.u[i]);
                if lo_v > tol && lo_v >= hi_v {
                    Some((i, lo_v, Active::Lower))
                } else if hi_v > tol {
                    Some((i, hi_v, Active::Upper))
                } else {
                    None
                }
            })
            .collect();
        let mut dual: Vec<(usize, f64)> = (0..m)
            .filter_map(|i| {
                let wrong = match state[i] {
                    Active::Lower => yfull[i],
                    Active::Upper => -yfull[i],
                    _ => 0.0,
                };
                (wrong > tol).then_some((i, wrong))
            })
            .collect();
        if primal.is_empty() && dual.is_empty() {
            return Some((x, yfull));
        }
        let worst_first = |a: f64, b: f64| b.total_cmp(&a);
        primal.sort_by(|a, b| worst_first(a.1, b.1));
        dual.sort_by(|a, b| worst_first(a.1, b.1));
        let take = if batch { usize::MAX } else { 1 };
        if primal.is_empty() {
            dual.iter().take(take).for_each(|&(i, _)| state[i] = Active::Free);
        } else {
            primal.iter().take(take).for_each(|&(i, _, side)| state[i] = side);
        }
    }
    None
}

/// One-shot solve without reuse.
pub fn solve_qp(prob: QpProblem, settings: QpSettings) -> Result<QpSolution> {
    QpSolver::new(prob, settings)?.solve()
}

/// Largest violation among stationarity, primal feasibility, dual signs and
/// complementarity.
pub fn kkt_residual(prob: &QpProblem, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let ax = &prob.a * x;
    let stat = inf_norm(&(&prob.p * x + &prob.q + prob.a.transpose() * y));
    let mut worst = stat;
    for i in 0..ax.len() {
        let (l, u) = (prob.l[i], prob.u[i]);
        worst = worst.max(l - ax[i]).max(ax[i] - u);
        if y[i] > 0.0 {
            let gap = if u.is_finite() { (u - ax[i]).abs() * y[i] } else { y[i] };
            worst = worst.max(gap);
        } else if y[i] < 0.0 {
            let gap = if l.is_finite() { (ax[i] - l).abs() * -y[i] } else { -y[i] };
            worst = worst.max(gap);
        }
    }
    worst
}

/// `‖x − Π(x − ∇f(x))‖∞` for the box-constrained QP `min ½xᵀPx + qᵀx, lo ≤ x ≤ hi`.
pub fn projected_gradient_residual(p: &DMatrix<f64>, q: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let g = p * x + q;
    (0..x.len()).map(|i| (x[i] - (x[i] - g[i]).clamp(lo[i], hi[i])).abs()).fold(0.0, f64::max)
}

/// Box QP as a general QP with identity rows.
pub fn box_qp(p: DMatrix<f64>, q: DVector<f64>, lo: DVector<f64>, hi: DVector<f64>) -> QpProblem {
    let n = q.len();
    QpProblem { p, q, a: DMatrix::identity(n, n), l: lo, u: hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Enumerates free/lower/upper for every coordinate and keeps the best
    /// KKT-consistent point.
    fn box_oracle(p: &DMatrix<f64>, q: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> f64 {
        let n = q.len();
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let side: Vec<u8> = (0..n)
                .map(|_| {
                    let s = (c % 3) as u8;
                    c /= 3;
                    s
                })
                .collect();
            let mut x = DVector::zeros(n);
            for i in 0..n {
                x[i] = match side[i] {
                    1 => lo[i],
                    2 => hi[i],
                    _ => 0.0,
                };
            }
            let free: Vec<usize> = (0..n).filter(|&i| side[i] == 0).collect();
            if !free.is_empty() {
                let pf = DMatrix::from_fn(free.len(), free.len(), |a, b| p[(free[a], free[b])]);
                let rhs = DVector::from_fn(free.len(), |a, _| {
                    -q[free[a]] - (0..n).filter(|j| side[*j] != 0).map(|j| p[(free[a], j)] * x[j]).sum::<f64>()
                });
                let Some(sol) = pf.lu().solve(&rhs) else { continue };
                for (a, &i) in free.iter().enumerate() {
                    x[i] = sol[a];
                }
            }
            if (0..n).any(|i| x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) {
                continue;
            }
            let g = p * &x + q;
            let ok = (0..n).all(|i| match side[i] {
                1 => g[i] >= -1e-10,
                2 => g[i] <= 1e-10,
                _ => true,
            });
            if ok {
                best = best.min(0.5 * x.dot(&(p * &x)) + q.dot(&x));
            }
        }
        best
    }

    fn random_box_qp(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = &m * m.transpose() + DMatrix::identity(n, n) * 0.1;
        let q = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.1..2.0));
        (p, q, lo, hi)
    }

    #[test]
    fn unconstrained_scalar() {
        let prob = QpProblem {
            p: DMatrix::from_element(1, 1, 2.0),
            q: DVector::from_element(1, -4.0),
            a: DMatrix::zeros(0, 1),
            l: DVector::zeros(0),
            u: DVector::zeros(0),
        };
        let sol = solve_qp(prob, QpSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn equality_and_bound() {
        // min x² + y² s.t. x + y = 1, x ≤ 0.2
        let prob = QpProblem {
            p: DMatrix::identity(2, 2) * 2.0,
            q: DVector::zeros(2),
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]),
            l: DVector::from_vec(vec![1.0, f64::NEG_INFINITY]),
            u: DVector::from_vec(vec![1.0, 0.2]),
        };
        let sol = solve_qp(prob.clone(), QpSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 0.2, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], 0.8, epsilon = 1e-12);
        assert!(kkt_residual(&prob, &sol.x, &sol.y) < 1e-10);
    }

    #[test]
    fn detects_infeasibility() {
        let prob = QpProblem {
            p: DMatrix::identity(1, 1),
            q: DVector::zeros(1),
            a: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            l: DVector::from_vec(vec![1.0, f64::NEG_INFINITY]),
            u: DVector::from_vec(vec![f64::INFINITY, 0.0]),
        };
        let sol = solve_qp(prob, QpSettings::default()).unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
    }

    #[test]
    fn box_qps_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=6);
            let (p, q, lo, hi) = random_box_qp(&mut rng, n);
            let sol = solve_qp(box_qp(p.clone(), q.clone(), lo.clone(), hi.clone()), QpSettings::default()).unwrap();
            assert_eq!(sol.status, QpStatus::Solved);
            assert!(projected_gradient_residual(&p, &q, &lo, &hi, &sol.x) <= 1e-8);
            let oracle = box_oracle(&p, &q, &lo, &hi);
            assert!((sol.objective - oracle).abs() <= 1e-7, "{} vs {oracle}", sol.objective);
        }
    }

    #[test]
    fn reuse_after_q_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, q, lo, hi) = random_box_qp(&mut rng, 4);
        let mut solver = QpSolver::new(box_qp(p.clone(), q, lo.clone(), hi.clone()), QpSettings::default()).unwrap();
        solver.solve().unwrap();
        let q2 = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
        solver.update_q(q2.clone()).unwrap();
        let warm = solver.solve().unwrap();
        let cold = solve_qp(box_qp(p, q2, lo, hi), QpSettings::default()).unwrap();
        assert!((warm.x - cold.x).amax() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn box_solution_is_stationary(seed in 0u64..10_000, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (p, q, lo, hi) = random_box_qp(&mut rng, n);
            let sol = solve_qp(box_qp(p.clone(), q.clone(), lo.clone(), hi.clone()), QpSettings::default()).unwrap();
            prop_assert!(projected_gradient_residual(&p, &q, &lo, &hi, &sol.x) <= 1e-8);
        }
    }
}

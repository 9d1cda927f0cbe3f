use nalgebra::DMatrix;

use super::{NodeKind, WeightedDigraph};
use crate::error::{invalid, Error, Result};
use crate::model::{Dynamics, SubsystemModel};

/// Central finite-difference settings for nonlinear edge weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDiff {
    /// Perturbation relative to `max(1, |v|)` of each variable.
    pub step: f64,
    /// Partials with magnitude at or below this value produce no edge.
    pub zero_tol: f64,
}

impl Default for FiniteDiff {
    fn default() -> Self {
        Self { step: 1e-5, zero_tol: 1e-9 }
    }
}

fn node_kinds(n_u: usize, n_x: usize, n_y: usize) -> Vec<NodeKind> {
    std::iter::repeat_n(NodeKind::Input, n_u)
        .chain(std::iter::repeat_n(NodeKind::State, n_x))
        .chain(std::iter::repeat_n(NodeKind::Output, n_y))
        .collect()
}

/// Adds `src_off + i -> dst_off + j` for every nonzero `m[(j, i)]`.
fn add_pattern(g: &mut WeightedDigraph, m: &DMatrix<f64>, src_off: usize, dst_off: usize, tol: f64) -> Result<()> {
    for i in 0..m.ncols() {
        for j in 0..m.nrows() {
            let w = m[(j, i)];
            if w.abs() > tol {
                g.add_edge(src_off + i, dst_off + j, w)?;
            }
        }
    }
    Ok(())
}

/// Associated graph of a linear subsystem.
///
/// Nodes are ordered inputs, states, outputs. Edge `x_i -> x_j` carries
/// `A(j, i)`, `u_i -> x_j` carries `B(j, i)` and `x_i -> y_j` carries `C(j, i)`.
pub fn build_associated_graph(sys: &SubsystemModel) -> Result<WeightedDigraph> {
    let Dynamics::Linear { a, b, c } = sys.dynamics() else {
        return Err(invalid("associated graph needs a linear subsystem"));
    };
    let (n_x, n_u, n_y) = (sys.n_x(), sys.n_u(), sys.n_y());
    let mut g = WeightedDigraph::new(node_kinds(n_u, n_x, n_y));
    add_pattern(&mut g, b, 0, n_u, 0.0)?;
    add_pattern(&mut g, a, n_u, n_u, 0.0)?;
    if let Some(c) = c {
        add_pattern(&mut g, c, n_u, n_u + n_x, 0.0)?;
    }
    Ok(g)
}

type VectorField<'a> = &'a dyn Fn(&[f64], &[f64]) -> Vec<f64>;
type OutputMap<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Associated graph of `x⁺ = f(x, u)`, `y = h(x)` linearized at `(x, u)`.
///
/// Weights are central finite-difference partials; partials within
/// `fd.zero_tol` of zero produce no edge.
pub fn build_associated_graph_nonlinear(
    f: VectorField<'_>,
    h: Option<OutputMap<'_>>,
    x: &[f64],
    u: &[f64],
    fd: FiniteDiff,
) -> Result<WeightedDigraph> {
    // written with negations so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(fd.step > 0.0) || !(fd.zero_tol >= 0.0) {
        return Err(invalid("finite-difference step must be positive and zero tolerance nonnegative"));
    }
    let n_x = x.len();
    let n_u = u.len();
    let f0 = f(x, u);
    if f0.len() != n_x {
        return Err(Error::Dimension(format!("f returns {} values for {n_x} states", f0.len())));
    }
    let n_y = h.map(|h| h(x).len()).unwrap_or(0);

    let finite = |v: &[f64], what: &str| -> Result<()> {
        if v.iter().all(|z| z.is_finite()) {
            Ok(())
        } else {
            Err(invalid(format!("{what} is not finite near the linearization point")))
        }
    };
    finite(&f0, "f")?;

    let mut ax = DMatrix::zeros(n_x, n_x);
    let mut bu = DMatrix::zeros(n_x, n_u);
    let mut cx = DMatrix::zeros(n_y, n_x);
    for i in 0..n_x {
        let d = fd.step * x[i].abs().max(1.0);
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[i] += d;
        xm[i] -= d;
        let (fp, fm) = (f(&xp, u), f(&xm, u));
        finite(&fp, "f")?;
        finite(&fm, "f")?;
        for j in 0..n_x {
            ax[(j, i)] = (fp[j] - fm[j]) / (2.0 * d);
        }
        if let Some(h) = h {
            let (hp, hm) = (h(&xp), h(&xm));
            finite(&hp, "h")?;
            finite(&hm, "h")?;
            for j in 0..n_y {
                cx[(j, i)] = (hp[j] - hm[j]) / (2.0 * d);
            }
        }
    }
    for i in 0..n_u {
        let d = fd.step * u[i].abs().max(1.0);
        let (mut up, mut um) = (u.to_vec(), u.to_vec());
        up[i] += d;
        um[i] -= d;
        let (fp, fm) = (f(x, &up), f(x, &um));
        finite(&fp, "f")?;
        finite(&fm, "f")?;
        for j in 0..n_x {
            bu[(j, i)] = (fp[j] - fm[j]) / (2.0 * d);
        }
    }

    let mut g = WeightedDigraph::new(node_kinds(n_u, n_x, n_y));
    add_pattern(&mut g, &bu, 0, n_u, fd.zero_tol)?;
    add_pattern(&mut g, &ax, n_u, n_u, fd.zero_tol)?;
    add_pattern(&mut g, &cx, n_u, n_u + n_x, fd.zero_tol)?;
    Ok(g)
}

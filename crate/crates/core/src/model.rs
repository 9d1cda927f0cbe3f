//! Subsystem dynamics and coupled network models.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Margin used to encode a strict guard `s·x < t` as `s·x ≤ t − STRICT_MARGIN`.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        Self { lo: -r, hi: r }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Half-space `normal · x ≤ offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    /// `x[idx] ≥ value`, boundary included.
    pub fn at_least(dim: usize, idx: usize, value: f64) -> Self {
        let mut normal = vec![0.0; dim];
        normal[idx] = -1.0;
        Self { normal, offset: -value }
    }

    /// `x[idx] < value`, encoded with [`STRICT_MARGIN`].
    pub fn strictly_below(dim: usize, idx: usize, value: f64) -> Self {
        let mut normal = vec![0.0; dim];
        normal[idx] = 1.0;
        Self { normal, offset: value - STRICT_MARGIN }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.value(x) <= 0.0
    }
}

/// One affine piece of a piecewise-affine subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct PwaMode {
    /// Polyhedral region on the local state where the mode is active.
    pub guard: Vec<HalfSpace>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl PwaMode {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.guard.iter().all(|h| h.contains(x))
    }

    fn violation(&self, x: &[f64]) -> f64 {
        self.guard.iter().map(|h| h.value(x).max(0.0)).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics {
    Linear { a: DMatrix<f64>, b: DMatrix<f64>, c: Option<DMatrix<f64>> },
    Pwa { modes: Vec<PwaMode> },
}

/// Local dynamics of one subsystem, without couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemModel {
    dynamics: Dynamics,
    n_x: usize,
    n_u: usize,
    n_y: usize,
}

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{name} has non-finite entries")));
    }
    Ok(())
}

impl SubsystemModel {
    pub fn linear(a: DMatrix<f64>, b: DMatrix<f64>, c: Option<DMatrix<f64>>) -> Result<Self> {
        let n_x = a.nrows();
        check_shape("A", &a, n_x, n_x)?;
        if b.nrows() != n_x {
            return Err(Error::Dimension(format!("B has {} rows, expected {n_x}", b.nrows())));
        }
        let n_u = b.ncols();
        check_shape("B", &b, n_x, n_u)?;
        let n_y = match &c {
            Some(c) => {
                check_shape("C", c, c.nrows(), n_x)?;
                c.nrows()
            }
            None => 0,
        };
        Ok(Self { dynamics: Dynamics::Linear { a, b, c }, n_x, n_u, n_y })
    }

    pub fn pwa(modes: Vec<PwaMode>) -> Result<Self> {
        let first = modes.first().ok_or_else(|| invalid("piecewise-affine model needs at least one mode"))?;
        let n_x = first.a.nrows();
        let n_u = first.b.ncols();
        for (m, mode) in modes.iter().enumerate() {
            check_shape(&format!("A of mode {m}"), &mode.a, n_x, n_x)?;
            check_shape(&format!("B of mode {m}"), &mode.b, n_x, n_u)?;
            if mode.guard.iter().any(|h| h.normal.len() != n_x || !h.offset.is_finite()) {
                return Err(Error::Dimension(format!("guard of mode {m} does not match state dimension {n_x}")));
            }
        }
        Ok(Self { dynamics: Dynamics::Pwa { modes }, n_x, n_u, n_y: 0 })
    }

    /// Scalar `x⁺ = a x + b u`.
    pub fn scalar_linear(a: f64, b: f64) -> Self {
        Self::linear(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b), None)
            .expect("scalar shapes are consistent")
    }

    /// Scalar two-mode system: `(a_nonneg, b_nonneg)` when `x ≥ 0`, `(a_neg, b_neg)` when `x < 0`.
    pub fn scalar_hybrid(a_nonneg: f64, b_nonneg: f64, a_neg: f64, b_neg: f64) -> Self {
        let s = |v: f64| DMatrix::from_element(1, 1, v);
        Self::pwa(vec![
            PwaMode { guard: vec![HalfSpace::at_least(1, 0, 0.0)], a: s(a_nonneg), b: s(b_nonneg) },
            PwaMode { guard: vec![HalfSpace::strictly_below(1, 0, 0.0)], a: s(a_neg), b: s(b_neg) },
        ])
        .expect("scalar shapes are consistent")
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn is_pwa(&self) -> bool {
        matches!(self.dynamics, Dynamics::Pwa { .. })
    }

    pub fn mode_count(&self) -> usize {
        match &self.dynamics {
            Dynamics::Linear { .. } => 1,
            Dynamics::Pwa { modes } => modes.len(),
        }
    }

    pub fn modes(&self) -> &[PwaMode] {
        match &self.dynamics {
            Dynamics::Linear { .. } => &[],
            Dynamics::Pwa { modes } => modes,
        }
    }

    /// `(A, B)` of the given mode; linear models have the single mode 0.
    pub fn mode_matrices(&self, mode: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        match &self.dynamics {
            Dynamics::Linear { a, b, .. } => (a, b),
            Dynamics::Pwa { modes } => (&modes[mode].a, &modes[mode].b),
        }
    }

    /// Index of the mode whose guard contains `x`.
    ///
    /// The first containing mode wins. A point inside no guard (only possible
    /// within the strict-inequality margin) goes to the least-violated mode.
    pub fn active_mode(&self, x: &[f64]) -> usize {
        match &self.dynamics {
            Dynamics::Linear { .. } => 0,
            Dynamics::Pwa { modes } => modes.iter().position(|m| m.contains(x)).unwrap_or_else(|| {
                modes
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.violation(x).total_cmp(&b.1.violation(x)))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            }),
        }
    }

    /// Local update `A x + B u` of the active mode.
    pub fn local_step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (a, b) = self.mode_matrices(self.active_mode(x.as_slice()));
        a * x + b * u
    }

    /// Checks that sampled points of `state_box` each lie in exactly one guard.
    pub fn check_guards(&self, state_box: &[Interval]) -> Result<()> {
        let Dynamics::Pwa { modes } = &self.dynamics else { return Ok(()) };
        if state_box.iter().any(|iv| !iv.is_bounded()) {
            return Ok(());
        }
        for x in sample_box(state_box, 64) {
            let hits = modes.iter().filter(|m| m.contains(&x)).count();
            if hits != 1 {
                return Err(invalid(format!("state {x:?} lies in {hits} guards, expected exactly one")));
            }
        }
        Ok(())
    }
}

/// Box vertices (up to 2^10), the center, a per-axis grid, and seeded random points.
fn sample_box(bx: &[Interval], random: usize) -> Vec<Vec<f64>> {
    let n = bx.len();
    let mut pts = Vec::new();
    if n <= 10 {
        for mask in 0..(1usize << n) {
            pts.push((0..n).map(|i| if mask >> i & 1 == 1 { bx[i].hi } else { bx[i].lo }).collect());
        }
    }
    let center: Vec<f64> = bx.iter().map(Interval::mid).collect();
    for i in 0..n {
        for s in 0..=20 {
            let mut p = center.clone();
            p[i] = bx[i].lo + (bx[i].hi - bx[i].lo) * s as f64 / 20.0;
            pts.push(p);
        }
    }
    pts.push(center);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..random {
        pts.push(bx.iter().map(|iv| rng.random_range(iv.lo..=iv.hi)).collect());
    }
    pts
}

/// Influence of subsystem `from` on subsystem `to`: `x_to⁺ += gain · x_from`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub from: usize,
    pub to: usize,
    pub gain: DMatrix<f64>,
}

impl Coupling {
    pub fn scalar(from: usize, to: usize, gain: f64) -> Self {
        Self { from, to, gain: DMatrix::from_element(1, 1, gain) }
    }

    /// Coupling strength used as an agent-graph weight.
    pub fn strength(&self) -> f64 {
        self.gain.norm()
    }
}

/// Subsystems, coupling edges and per-subsystem box bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    subsystems: Vec<SubsystemModel>,
    couplings: Vec<Coupling>,
    state_box: Vec<Vec<Interval>>,
    input_box: Vec<Vec<Interval>>,
}

impl NetworkModel {
    pub fn new(
        subsystems: Vec<SubsystemModel>,
        couplings: Vec<Coupling>,
        state_box: Vec<Vec<Interval>>,
        input_box: Vec<Vec<Interval>>,
    ) -> Result<Self> {
        let n = subsystems.len();
        if state_box.len() != n || input_box.len() != n {
            return Err(Error::Dimension(format!("bounds given for {} / {} subsystems, expected {n}", state_box.len(), input_box.len())));
        }
        for (i, s) in subsystems.iter().enumerate() {
            if state_box[i].len() != s.n_x() || input_box[i].len() != s.n_u() {
                return Err(Error::Dimension(format!("bounds of subsystem {i} do not match its dimensions")));
            }
            for iv in state_box[i].iter().chain(&input_box[i]) {
                if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi {
                    return Err(invalid(format!("subsystem {i} has bound [{}, {}] with lower > upper", iv.lo, iv.hi)));
                }
            }
            s.check_guards(&state_box[i])?;
        }
        let mut seen = std::collections::HashSet::new();
        for c in &couplings {
            if c.from >= n || c.to >= n {
                return Err(invalid(format!("coupling {}->{} references a missing subsystem", c.from, c.to)));
            }
            if c.from == c.to {
                return Err(invalid(format!("coupling {0}->{0} is a self-coupling; fold it into A", c.from)));
            }
            check_shape(
                &format!("gain {}->{}", c.from, c.to),
                &c.gain,
                subsystems[c.to].n_x(),
                subsystems[c.from].n_x(),
            )?;
            if !seen.insert((c.from, c.to)) {
                return Err(invalid(format!("duplicate coupling {}->{}", c.from, c.to)));
            }
        }
        Ok(Self { subsystems, couplings, state_box, input_box })
    }

    /// Network of identical scalar subsystems sharing one state box and one input box.
    pub fn uniform_scalar(
        n: usize,
        subsystem: SubsystemModel,
        couplings: Vec<Coupling>,
        state: Interval,
        input: Interval,
    ) -> Result<Self> {
        Self::new(vec![subsystem; n], couplings, vec![vec![state]; n], vec![vec![input]; n])
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystem(&self, i: usize) -> &SubsystemModel {
        &self.subsystems[i]
    }

    pub fn subsystems(&self) -> &[SubsystemModel] {
        &self.subsystems
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn state_box(&self, i: usize) -> &[Interval] {
        &self.state_box[i]
    }

    pub fn input_box(&self, i: usize) -> &[Interval] {
        &self.input_box[i]
    }

    pub fn all_linear(&self) -> bool {
        self.subsystems.iter().all(|s| !s.is_pwa())
    }

    /// Couplings whose target is subsystem `i`.
    pub fn couplings_into(&self, i: usize) -> impl Iterator<Item = &Coupling> + '_ {
        self.couplings.iter().filter(move |c| c.to == i)
    }

    /// One open-loop step with every coupling active.
    pub fn step(&self, x: &[DVector<f64>], u: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut next: Vec<DVector<f64>> =
            self.subsystems.iter().enumerate().map(|(i, s)| s.local_step(&x[i], &u[i])).collect();
        for c in &self.couplings {
            next[c.to] += &c.gain * &x[c.from];
        }
        next
    }

    /// True when every component of `x` lies inside the state box.
    pub fn in_state_box(&self, x: &[DVector<f64>]) -> bool {
        x.iter().zip(&self.state_box).all(|(xi, bx)| xi.iter().zip(bx).all(|(v, iv)| iv.contains(*v)))
    }

    /// Copy with subsystem `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n {
            return Err(invalid("relabeling length differs from subsystem count"));
        }
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inv[p] != usize::MAX {
                return Err(invalid("relabeling is not a permutation"));
            }
            inv[p] = i;
        }
        fn pick<T: Clone>(inv: &[usize], v: &[T]) -> Vec<T> {
            inv.iter().map(|&i| v[i].clone()).collect()
        }
        Self::new(
            pick(&inv, &self.subsystems),
            self.couplings
                .iter()
                .map(|c| Coupling { from: perm[c.from], to: perm[c.to], gain: c.gain.clone() })
                .collect(),
            pick(&inv, &self.state_box),
            pick(&inv, &self.input_box),
        )
    }
}

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::admm::{run_admm, AdmmParams, AdmmWarm};
use super::{check_state, MpcProblem};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::NetworkModel;
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// One controller for the whole network.
    Cmpc,
    /// One controller per set of the partition, coordinated by ADMM.
    Dmpc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub steps: usize,
    /// Initial state; drawn uniformly from the state box with `seed` when absent.
    pub x0: Option<Vec<DVector<f64>>>,
    pub seed: u64,
    pub admm: AdmmParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { steps: 10, x0: None, seed: 0, admm: AdmmParams::default() }
    }
}

impl SimConfig {
    pub fn initial_state(&self, net: &NetworkModel) -> Result<Vec<DVector<f64>>> {
        if let Some(x0) = &self.x0 {
            check_state(net, x0)?;
            if !net.in_state_box(x0) {
                return Err(invalid("initial state lies outside the state box"));
            }
            return Ok(x0.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..net.len())
            .map(|i| {
                let bx = net.state_box(i);
                if !bx.iter().all(|iv| iv.is_bounded()) {
                    return Err(invalid(format!("subsystem {} has an unbounded state box; give x0 explicitly", i + 1)));
                }
                Ok(DVector::from_iterator(bx.len(), bx.iter().map(|iv| if iv.lo == iv.hi { iv.lo } else { rng.random_range(iv.lo..iv.hi) })))
            })
            .collect()
    }
}

/// Record of a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub strategy: Strategy,
    pub horizon: usize,
    pub coalitions: Vec<Vec<usize>>,
    /// Coalitions sharing at least one coupling with each coalition.
    pub coalition_neighbors: Vec<BTreeSet<usize>>,
    /// Members of each coalition with a coupling across its boundary.
    pub frontier: Vec<Vec<usize>>,
    /// Couplings `(from, to)` between different coalitions.
    pub cross_links: Vec<(usize, usize)>,
    /// `states[k]` for `k = 0..=steps`.
    pub states: Vec<Vec<DVector<f64>>>,
    /// `inputs[k]` applied between `states[k]` and `states[k + 1]`.
    pub inputs: Vec<Vec<DVector<f64>>>,
    /// `solve_seconds[k][c]`: time coalition `c` spent solving at step `k`.
    pub solve_seconds: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    /// Predicted-sequence transmissions per step.
    pub messages: Vec<usize>,
    pub predicted_cost: Vec<f64>,
    pub flags: Vec<String>,
    /// Error that stopped the run early, if any.
    pub aborted: Option<String>,
}

impl TrajectoryLog {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_cores(&self) -> usize {
        self.coalitions.len()
    }

    pub fn slowest_seconds(&self) -> Vec<f64> {
        self.solve_seconds.iter().map(|s| s.iter().copied().fold(0.0, f64::max)).collect()
    }

    pub fn is_clean(&self) -> bool {
        self.aborted.is_none() && self.flags.is_empty()
    }

    /// Columns `step,agent,x,u`; vector components are joined by `;`.
    /// The final state row has an empty input.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let join = |v: &DVector<f64>| v.iter().map(|c| format!("{c:.12e}")).collect::<Vec<_>>().join(";");
        writeln!(w, "step,agent,x,u")?;
        for (k, xs) in self.states.iter().enumerate() {
            for (i, x) in xs.iter().enumerate() {
                let u = self.inputs.get(k).map(|us| join(&us[i])).unwrap_or_default();
                writeln!(w, "{k},{},{},{u}", i + 1, join(x))?;
            }
        }
        Ok(())
    }

    /// Columns `step,coalition,solve_seconds,iterations`.
    pub fn write_sidecar_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "step,coalition,solve_seconds,iterations")?;
        for (k, secs) in self.solve_seconds.iter().enumerate() {
            for (c, s) in secs.iter().enumerate() {
                writeln!(w, "{k},{},{s:.6},{}", c + 1, self.iterations[k])?;
            }
        }
        Ok(())
    }
}

type Structure = (Vec<BTreeSet<usize>>, Vec<Vec<usize>>, Vec<(usize, usize)>);

fn coalition_structure(net: &NetworkModel, p: &Partition) -> Structure {
    let mut nbrs = vec![BTreeSet::new(); p.n_sets()];
    let mut front = vec![BTreeSet::new(); p.n_sets()];
    let mut cross = Vec::new();
    for c in net.couplings() {
        let (a, b) = (p.set_of(c.from), p.set_of(c.to));
        if a != b {
            cross.push((c.from, c.to));
            nbrs[a].insert(b);
            nbrs[b].insert(a);
            front[a].insert(c.from);
            front[b].insert(c.to);
        }
    }
    (nbrs, front.into_iter().map(|s| s.into_iter().collect()).collect(), cross)
}

/// Receding-horizon simulation. Solver failures stop the run and are kept
/// in [`TrajectoryLog::aborted`] together with the partial trajectory.
pub fn simulate_closed_loop(
    strategy: Strategy,
    net: &NetworkModel,
    partition: Option<&Partition>,
    prob: &MpcProblem,
    cfg: &SimConfig,
    exec: Execution,
) -> Result<TrajectoryLog> {
    prob.validate()?;
    cfg.admm.validate()?;
    if cfg.steps == 0 {
        return Err(invalid("simulation needs at least one step"));
    }
    let grand = Partition::grand(net.len());
    let part = match (strategy, partition) {
        (Strategy::Cmpc, _) => &grand,
        (Strategy::Dmpc, Some(p)) => p,
        (Strategy::Dmpc, None) => return Err(invalid("distributed control needs a partition")),
    };
    if part.len() != net.len() {
        return Err(invalid(format!("partition covers {} nodes but the network has {} subsystems", part.len(), net.len())));
    }
    let x0 = cfg.initial_state(net)?;
    let (coalition_neighbors, frontier, cross_links) = coalition_structure(net, part);
    let links: usize = coalition_neighbors.iter().map(BTreeSet::len).sum();
    let mut log = TrajectoryLog {
        strategy,
        horizon: prob.horizon,
        coalitions: part.sets(),
        coalition_neighbors,
        frontier,
        cross_links,
        states: vec![x0],
        inputs: Vec::new(),
        solve_seconds: Vec::new(),
        iterations: Vec::new(),
        messages: Vec::new(),
        predicted_cost: Vec::new(),
        flags: Vec::new(),
        aborted: None,
    };
    let mut warm: Option<AdmmWarm> = None;
    for k in 0..cfg.steps {
        let x = log.states.last().expect("holds x0").clone();
        let out = match run_admm(net, part, prob, &x, &cfg.admm, warm.as_ref(), exec) {
            Ok(o) => o,
            Err(e) => {
                log.aborted = Some(format!("step {k}: {e}"));
                break;
            }
        };
        let res = out.result;
        if !res.converged {
            log.flags.push(format!("step {k}: ADMM stopped at {} iterations (residuals {:.2e}, {:.2e})", res.iterations, res.primal_residual, res.dual_residual));
        }
        if !res.solution.optimal {
            log.flags.push(format!("step {k}: branch-and-bound node budget exhausted"));
        }
        let u = res.solution.inputs[0].clone();
        let next = net.step(&x, &u);
        if !net.in_state_box(&next) {
            log.flags.push(format!("step {k}: state left the box"));
        }
        log.solve_seconds.push(res.solve_seconds);
        log.iterations.push(res.iterations);
        log.messages.push(res.iterations * links);
        log.predicted_cost.push(res.solution.cost);
        log.inputs.push(u);
        log.states.push(next);
        warm = Some(out.warm.shifted(prob.horizon));
    }
    Ok(log)
}

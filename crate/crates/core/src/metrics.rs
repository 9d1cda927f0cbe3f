//! Closed-loop performance metrics and their normalization against the
//! centralized baseline.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{invalid, Result};
use crate::mpc::{MpcProblem, Strategy, TrajectoryLog};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ComputationMode {
    /// Sum of every coalition's solve time.
    Exact,
    /// Every core waits for the slowest coalition at each step.
    #[default]
    IdleSlowest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CommMode {
    /// Fixed cost per active inter-coalition link.
    Static,
    /// Predicted sequences exchanged at every iteration.
    #[default]
    Iterative,
}

/// Transmission costs: per agent state and input vectors, and per link.
#[derive(Clone, Debug, PartialEq)]
pub struct CommModel {
    pub nu_x: Vec<f64>,
    pub nu_u: Vec<f64>,
    /// Cost of link `(from, to)`, 0-based.
    pub nu_link: BTreeMap<(usize, usize), f64>,
    /// Used for links absent from `nu_link`.
    pub default_link: Option<f64>,
    pub mode: CommMode,
}

impl CommModel {
    /// Unit cost for every vector and link.
    pub fn unit(n_agents: usize, mode: CommMode) -> Self {
        Self { nu_x: vec![1.0; n_agents], nu_u: vec![1.0; n_agents], nu_link: BTreeMap::new(), default_link: Some(1.0), mode }
    }

    fn validate(&self, n_agents: usize) -> Result<()> {
        if self.nu_x.len() != n_agents || self.nu_u.len() != n_agents {
            return Err(invalid(format!("transmission costs given for {} / {} agents, expected {n_agents}", self.nu_x.len(), self.nu_u.len())));
        }
        let all = self.nu_x.iter().chain(&self.nu_u).chain(self.nu_link.values()).chain(self.default_link.iter());
        if all.into_iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("transmission costs must be finite and nonnegative"));
        }
        Ok(())
    }

    fn link(&self, from: usize, to: usize) -> Result<f64> {
        self.nu_link
            .get(&(from, to))
            .copied()
            .or(self.default_link)
            .ok_or_else(|| invalid(format!("no transmission cost for link {} -> {}", from + 1, to + 1)))
    }
}

/// `Σ_{k=1..N_sim} q‖x(k)‖² + r‖u(k−1)‖²`.
pub fn stage_cost_cumulative(log: &TrajectoryLog, prob: &MpcProblem) -> f64 {
    (1..log.states.len()).map(|k| prob.stage_cost(&log.states[k], &log.inputs[k - 1])).sum::<f64>() + 0.0
}

/// Core-seconds of a run.
pub fn computation_cost(log: &TrajectoryLog, n_cores: usize, mode: ComputationMode) -> f64 {
    match mode {
        ComputationMode::Exact => log.solve_seconds.iter().flatten().sum(),
        ComputationMode::IdleSlowest => n_cores as f64 * log.slowest_seconds().iter().sum::<f64>(),
    }
}

/// Wall-clock solve time with coalitions running side by side.
pub fn computation_time(log: &TrajectoryLog) -> f64 {
    log.slowest_seconds().iter().sum()
}

/// Communication cost of a run. Centralized runs report the cost of
/// gathering every state and input once per step.
pub fn communication_cost(log: &TrajectoryLog, comm: &CommModel) -> Result<f64> {
    let n_agents = log.states.first().map_or(0, Vec::len);
    comm.validate(n_agents)?;
    if log.strategy == Strategy::Cmpc {
        let per_step: f64 = comm.nu_x.iter().zip(&comm.nu_u).map(|(a, b)| a + b).sum();
        return Ok(log.steps() as f64 * per_step);
    }
    match comm.mode {
        CommMode::Static => Ok(log.cross_links.iter().map(|&(f, t)| comm.link(f, t)).sum::<Result<f64>>()? + 0.0),
        CommMode::Iterative => {
            // each coalition sends its frontier predictions to each neighbor coalition
            let per_iter: f64 = log
                .frontier
                .iter()
                .zip(&log.coalition_neighbors)
                .map(|(front, nbrs)| {
                    let nu: f64 = front.iter().map(|&i| comm.nu_x[i] + comm.nu_u[i]).sum();
                    nbrs.len() as f64 * log.horizon as f64 * nu
                })
                .sum();
            // adding 0.0 turns the -0.0 of an empty float sum into 0.0
            Ok(log.iterations.iter().map(|&it| it as f64 * per_iter).sum::<f64>() + 0.0)
        }
    }
}

/// Ratios against a baseline; `None` where the baseline value is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Normalized {
    pub stage: Option<f64>,
    pub time: Option<f64>,
    pub comp: Option<f64>,
    pub comm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub partition_label: String,
    pub n_cores: usize,
    pub j_stage: f64,
    pub j_time: f64,
    pub j_comp: f64,
    pub j_comm: f64,
    pub normalized: Normalized,
    pub iterations: usize,
    /// `ok`, or the flags and errors of the run.
    pub status: String,
}

impl MetricsReport {
    pub fn from_log(log: &TrajectoryLog, prob: &MpcProblem, comm: &CommModel, mode: ComputationMode, label: impl Into<String>) -> Result<Self> {
        let mut notes: Vec<String> = log.flags.clone();
        notes.extend(log.aborted.iter().map(|a| format!("aborted at {a}")));
        Ok(Self {
            partition_label: label.into(),
            n_cores: log.n_cores(),
            j_stage: stage_cost_cumulative(log, prob),
            j_time: computation_time(log),
            j_comp: computation_cost(log, log.n_cores(), mode),
            j_comm: communication_cost(log, comm)?,
            normalized: Normalized::default(),
            iterations: log.iterations.iter().sum(),
            status: if notes.is_empty() { "ok".into() } else { notes.join("; ") },
        })
    }

    /// Optimality loss in percent.
    pub fn opt_loss_pct(&self) -> Option<f64> {
        self.normalized.stage.map(|s| (s - 1.0) * 100.0)
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn ratio(value: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| if value == base { 1.0 } else { value / base + 0.0 })
}

/// Fills the normalized fields with `raw / baseline raw`.
pub fn normalize(report: &MetricsReport, baseline: &MetricsReport) -> MetricsReport {
    let mut out = report.clone();
    out.normalized = Normalized {
        stage: ratio(report.j_stage, baseline.j_stage),
        time: ratio(report.j_time, baseline.j_time),
        comp: ratio(report.j_comp, baseline.j_comp),
        comm: ratio(report.j_comm, baseline.j_comm),
    };
    out
}

pub const REPORT_HEADER: [&str; 12] = [
    "Partition",
    "Cores",
    "CostFunValue",
    "OptLossPct",
    "CompTimeS",
    "CompTimeRatio",
    "CoreSeconds",
    "CoreSecondsRatio",
    "CommCost",
    "CommRatio",
    "Iterations",
    "Status",
];

/// Columns that depend on wall-clock time.
pub const TIMING_COLUMNS: [&str; 4] = ["CompTimeS", "CompTimeRatio", "CoreSeconds", "CoreSecondsRatio"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.4}"))
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the report table. Time and core-second ratios are taken against
/// the smallest value in the column, as in the usual comparison tables.
pub fn write_report_csv(rows: &[MetricsReport], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", REPORT_HEADER.join(","))?;
    let min_of = |f: fn(&MetricsReport) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let (t_min, c_min) = (min_of(|r| r.j_time), min_of(|r| r.j_comp));
    for r in rows {
        writeln!(
            w,
            "{},{},{:.4},{},{:.4},{},{:.4},{},{:.4},{},{},{}",
            csv_field(&r.partition_label),
            r.n_cores,
            r.j_stage,
            fmt_opt(r.opt_loss_pct()),
            r.j_time,
            fmt_opt(ratio(r.j_time, t_min)),
            r.j_comp,
            fmt_opt(ratio(r.j_comp, c_min)),
            r.j_comm,
            fmt_opt(r.normalized.comm),
            r.iterations,
            csv_field(&r.status),
        )?;
    }
    Ok(())
}

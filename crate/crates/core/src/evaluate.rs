//! Posterior evaluation: run every candidate partition in closed loop and
//! rank the results against the centralized baseline.

use std::io::Write;

use crate::error::Result;
use crate::exec::Execution;
use crate::metrics::{csv_field, normalize, CommMode, CommModel, ComputationMode, MetricsReport, Normalized};
use crate::model::NetworkModel;
use crate::mpc::{simulate_closed_loop, MpcProblem, SimConfig, Strategy, TrajectoryLog};
use crate::partition::Partition;

pub const BASELINE_LABEL: &str = "CMPC";

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub label: String,
    pub partition: Partition,
}

impl Candidate {
    pub fn new(label: impl Into<String>, partition: Partition) -> Self {
        Self { label: label.into(), partition }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalConfig {
    pub prob: MpcProblem,
    pub sim: SimConfig,
    /// Unit iterative costs when absent.
    pub comm: Option<CommModel>,
    pub computation: ComputationMode,
    /// Execution of the coalition solves inside each run. Candidates run one
    /// after another so their timings do not contend.
    pub exec: Execution,
}


/// One evaluated row; `partition` is `None` for the centralized baseline.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub partition: Option<Partition>,
    pub report: MetricsReport,
    /// Absent when the run could not start.
    pub log: Option<TrajectoryLog>,
}

#[derive(Clone, Debug)]
pub struct Ranking {
    /// Baseline first, then candidates in the order given.
    pub rows: Vec<Evaluation>,
    /// Indices into `rows`, best first.
    pub order: Vec<usize>,
}

impl Ranking {
    pub fn best(&self) -> &Evaluation {
        &self.rows[self.order[0]]
    }

    pub fn reports(&self) -> Vec<MetricsReport> {
        self.rows.iter().map(|r| r.report.clone()).collect()
    }

    /// Every row ran to the end without flags.
    pub fn is_clean(&self) -> bool {
        self.rows.iter().all(|r| r.report.is_ok())
    }
}

fn failed_report(label: &str, msg: String) -> MetricsReport {
    MetricsReport {
        partition_label: label.to_string(),
        n_cores: 0,
        j_stage: f64::NAN,
        j_time: f64::NAN,
        j_comp: f64::NAN,
        j_comm: f64::NAN,
        normalized: Normalized::default(),
        iterations: 0,
        status: format!("error: {msg}"),
    }
}

fn run(net: &NetworkModel, strategy: Strategy, partition: Option<&Partition>, label: &str, cfg: &EvalConfig, comm: &CommModel) -> Evaluation {
    let outcome = simulate_closed_loop(strategy, net, partition, &cfg.prob, &cfg.sim, cfg.exec)
        .and_then(|log| MetricsReport::from_log(&log, &cfg.prob, comm, cfg.computation, label).map(|r| (r, log)));
    match outcome {
        Ok((report, log)) => Evaluation { partition: partition.cloned(), report, log: Some(log) },
        Err(e) => Evaluation { partition: partition.cloned(), report: failed_report(label, e.to_string()), log: None },
    }
}

/// Runs the centralized baseline and every candidate, normalizes against
/// the baseline and ranks by normalized stage cost, then core-seconds.
/// A failing candidate stays in the table with an error status and ranks
/// last.
pub fn posterior_evaluate(net: &NetworkModel, candidates: &[Candidate], cfg: &EvalConfig) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(crate::error::invalid("no candidate partitions given"));
    }
    let comm = cfg.comm.clone().unwrap_or_else(|| CommModel::unit(net.len(), CommMode::Iterative));
    let mut rows = vec![run(net, Strategy::Cmpc, None, BASELINE_LABEL, cfg, &comm)];
    rows.extend(candidates.iter().map(|c| run(net, Strategy::Dmpc, Some(&c.partition), &c.label, cfg, &comm)));
    let baseline = rows[0].report.clone();
    for r in &mut rows {
        r.report = normalize(&r.report, &baseline);
    }
    let key = |e: &Evaluation| {
        let stage = e.report.normalized.stage.filter(|v| v.is_finite()).unwrap_or(f64::INFINITY);
        let comp = if e.report.j_comp.is_nan() { f64::INFINITY } else { e.report.j_comp };
        (stage, comp)
    };
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&rows[a]), key(&rows[b]));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
    });
    Ok(Ranking { rows, order })
}

pub const SWEEP_HEADER: [&str; 6] = ["Partition", "NSets", "JStageNorm", "JTimeS", "CoreSeconds", "Status"];

/// Plot-ready sweep table, one row per candidate in the order given; the
/// baseline only serves as the reference.
pub fn write_sweep_csv(ranking: &Ranking, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", SWEEP_HEADER.join(","))?;
    for r in &ranking.rows[1..] {
        let n_sets = r.partition.as_ref().map_or(1, Partition::n_sets);
        let stage = r.report.normalized.stage.map_or_else(|| "undefined".into(), |v| format!("{v:.6}"));
        let (label, status) = (csv_field(&r.report.partition_label), csv_field(&r.report.status));
        writeln!(w, "{label},{n_sets},{stage},{:.6},{:.6},{status}", r.report.j_time, r.report.j_comp)?;
    }
    Ok(())
}

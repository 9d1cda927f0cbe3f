use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use ncpart::evaluate::{posterior_evaluate, write_sweep_csv, Candidate, EvalConfig, Ranking};
use ncpart::exec::Execution;
use ncpart::io::{parse_partition, write_network, write_partition_result};
use ncpart::metrics::write_report_csv;
use ncpart::mpc::{AdmmParams, MpcProblem, SimConfig};
use ncpart::partition::{enumerate_partitions_oracle, run_partitioner, Alpha, Method, ModularityOptions, PartitionResult, PartitionerParams, MAX_ORACLE_PARTITION_NODES};

use crate::source::{self, Network};
use crate::{GraphAction, GraphArgs, EvaluateArgs, MethodArgs, PartitionArgs, SimArgs, SweepArgs};

fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

pub fn graph(args: GraphArgs) -> Result<bool> {
    let net = source::load(&args.network)?;
    match args.action {
        GraphAction::Build => write_to(args.out.as_deref(), &write_network(&net.spec))?,
        GraphAction::Stats => {
            let g = &net.graph;
            let mut text = format!("{} nodes, {} edges\n", g.node_count(), g.edge_count());
            let mut tiers: Vec<f64> = g.edges().iter().map(|e| e.weight.abs()).collect();
            tiers.sort_by(f64::total_cmp);
            tiers.dedup();
            if !tiers.is_empty() && tiers.len() <= 10 {
                let list: Vec<String> = tiers.iter().map(f64::to_string).collect();
                text += &format!("weight tiers: {}\n", list.join(" "));
            } else if let (Some(lo), Some(hi)) = (tiers.first(), tiers.last()) {
                text += &format!("weights: {} distinct magnitudes in [{lo}, {hi}]\n", tiers.len());
            }
            text += "degree histogram:\n";
            for (degree, count) in g.degree_histogram() {
                text += &format!("  {degree}: {count}\n");
            }
            write_to(args.out.as_deref(), &text)?;
        }
    }
    Ok(true)
}

fn params(m: &MethodArgs, alpha: f64, seed: u64) -> Result<PartitionerParams> {
    Ok(PartitionerParams {
        alpha: Alpha::new(alpha)?,
        seed,
        modularity: ModularityOptions { weighted: m.weighted, min_gain: m.min_gain, seed, ..ModularityOptions::default() },
    })
}

/// One result per `--alpha`; modularity ignores alpha and runs once.
fn method_results(net: &Network, m: &MethodArgs, seed: u64) -> Result<Vec<PartitionResult>> {
    let Some(method) = m.method else { return Ok(Vec::new()) };
    let alphas = match (method, m.alpha.as_slice()) {
        (Method::Modularity, _) => vec![1.0],
        (_, []) => bail!("--method {method} needs --alpha"),
        (_, a) => a.to_vec(),
    };
    alphas
        .into_iter()
        .map(|a| {
            let r = run_partitioner(&net.graph, method, &params(m, a, seed)?)?;
            info!("{method} alpha={a}: {} sets, objective {}", r.partition.n_sets(), r.objective);
            Ok(r)
        })
        .collect()
}

fn label(r: &PartitionResult) -> String {
    match (r.method, r.alpha) {
        (Method::Modularity, _) | (_, None) => format!("{} ({} sets)", r.method, r.partition.n_sets()),
        (m, Some(a)) => format!("{m} alpha={a} ({} sets)", r.partition.n_sets()),
    }
}

pub fn partition(args: PartitionArgs) -> Result<bool> {
    let net = source::load(&args.network)?;
    if args.method.method.is_none() {
        bail!("partition needs --method");
    }
    if args.method.alpha.len() > 1 {
        bail!("partition takes a single --alpha; use sweep for several");
    }
    let r = method_results(&net, &args.method, args.seed)?.remove(0);
    write_to(args.out.as_deref(), &write_partition_result(&r))?;
    if args.out.is_some() {
        println!("{} sets, objective={}", r.partition.n_sets(), r.objective);
        if let Some(p) = r.p_idx {
            println!("p_idx={p}");
        }
        if let Some(q) = r.modularity_q {
            println!("Q={q}");
        }
    }
    for f in &r.flags {
        eprintln!("warning: {f}");
    }
    Ok(r.flags.is_empty())
}

fn eval_config(s: &SimArgs) -> EvalConfig {
    EvalConfig {
        prob: MpcProblem::with_horizon(s.horizon),
        sim: SimConfig { steps: s.steps, x0: None, seed: s.seed, admm: AdmmParams { rho: s.rho, max_iter: s.max_iter, tol: s.tol } },
        exec: if s.sequential { Execution::Sequential } else { Execution::Parallel },
        ..EvalConfig::default()
    }
}

fn run_evaluation(net: &Network, candidates: &[Candidate], sim: &SimArgs) -> Result<Ranking> {
    let model = net.model()?;
    info!("evaluating {} candidates plus the centralized baseline", candidates.len());
    let ranking = posterior_evaluate(model, candidates, &eval_config(sim))?;
    for (rank, &i) in ranking.order.iter().enumerate() {
        let r = &ranking.rows[i].report;
        info!("#{} {} stage={:.6} status={}", rank + 1, r.partition_label, r.j_stage, r.status);
    }
    Ok(ranking)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

/// Report CSV plus per-run trajectory logs in `dir`.
fn write_outputs(dir: &Path, ranking: &Ranking) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_report_csv(&ranking.reports(), create(dir, "report.csv")?)?;
    for (k, row) in ranking.rows.iter().enumerate() {
        if let Some(log) = &row.log {
            log.write_csv(create(dir, &format!("run{k}.csv"))?)?;
            log.write_sidecar_csv(create(dir, &format!("run{k}_steps.csv"))?)?;
        }
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<bool> {
    let net = source::load(&args.network)?;
    let mut candidates = Vec::new();
    for path in &args.partitions {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file = parse_partition(&text).with_context(|| format!("in {}", path.display()))?;
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        candidates.push(Candidate::new(name, file.partition));
    }
    for r in method_results(&net, &args.method, args.sim.seed)? {
        candidates.push(Candidate::new(label(&r), r.partition));
    }
    if candidates.is_empty() {
        bail!("nothing to evaluate; give --partition files or --method with --alpha");
    }
    let ranking = run_evaluation(&net, &candidates, &args.sim)?;
    write_report_csv(&ranking.reports(), io::stdout().lock())?;
    if let Some(dir) = &args.out {
        write_outputs(dir, &ranking)?;
    }
    Ok(ranking.is_clean())
}

pub fn sweep(args: SweepArgs) -> Result<bool> {
    let net = source::load(&args.network)?;
    let candidates: Vec<Candidate> = if args.all_partitions {
        let n = net.graph.node_count();
        if n > MAX_ORACLE_PARTITION_NODES {
            bail!("--all-partitions is limited to {MAX_ORACLE_PARTITION_NODES} agents; the network has {n}");
        }
        enumerate_partitions_oracle(n)?.map(|p| Candidate::new(p.to_string(), p)).collect()
    } else {
        if args.method.method.is_none() {
            bail!("sweep needs --method with --alpha, or --all-partitions");
        }
        method_results(&net, &args.method, args.sim.seed)?.into_iter().map(|r| Candidate::new(label(&r), r.partition)).collect()
    };
    let ranking = run_evaluation(&net, &candidates, &args.sim)?;
    write_sweep_csv(&ranking, io::stdout().lock())?;
    if let Some(dir) = &args.out {
        write_outputs(dir, &ranking)?;
        write_sweep_csv(&ranking, create(dir, "sweep.csv")?)?;
    }
    Ok(ranking.is_clean())
}

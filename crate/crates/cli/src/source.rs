//! Resolves `--network` arguments: a file path or a generator spec.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ncpart::generators::{benchmark50, modular64, random_network};
use ncpart::graph::{build_agent_graph, WeightedDigraph};
use ncpart::io::{parse_network, NetworkSpec};
use ncpart::model::NetworkModel;

/// A loaded network: always a graph, a dynamic model when one is declared.
pub struct Network {
    pub graph: WeightedDigraph,
    pub spec: NetworkSpec,
    model: Option<NetworkModel>,
}

impl Network {
    pub fn model(&self) -> Result<&NetworkModel> {
        match &self.model {
            Some(m) => Ok(m),
            None => bail!("the network has no dynamics; add 'linear' or 'mode' lines to simulate it"),
        }
    }
}

fn from_model(net: NetworkModel) -> Result<Network> {
    let spec = NetworkSpec::from_model(&net)?;
    Ok(Network { graph: build_agent_graph(&net), spec, model: Some(net) })
}

/// `random:n,density,seed`
fn random_spec(args: &str) -> Result<NetworkModel> {
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let [n, density, seed] = parts.as_slice() else {
        bail!("random networks are given as random:n,density,seed");
    };
    let n: usize = n.parse().with_context(|| format!("bad agent count '{n}'"))?;
    let density: f64 = density.parse().with_context(|| format!("bad density '{density}'"))?;
    let seed: u64 = seed.parse().with_context(|| format!("bad seed '{seed}'"))?;
    Ok(random_network(n, density, seed)?)
}

pub fn load(arg: &str) -> Result<Network> {
    match arg {
        "modular64" => return from_model(modular64()),
        "random-benchmark" => return from_model(benchmark50()),
        _ => {}
    }
    if let Some(rest) = arg.strip_prefix("random:") {
        return from_model(random_spec(rest)?);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("'{arg}' is neither a network file nor a generator (modular64, random-benchmark, random:n,density,seed)");
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = parse_network(&text).with_context(|| format!("in {}", path.display()))?;
    let graph = spec.graph()?;
    let model = match spec.local {
        Some(_) => Some(spec.to_model().with_context(|| format!("in {}", path.display()))?),
        None => None,
    };
    Ok(Network { graph, spec, model })
}

use std::fmt::Write as _;

use super::{agent_id, content_lines, no_trailing, parse_error, real};
use crate::error::{invalid, Result};
use crate::graph::WeightedDigraph;
use crate::model::{Coupling, Dynamics, Interval, NetworkModel, SubsystemModel};

/// Scalar mode `x⁺ = a x + b u`, active on `x ≥ 0` or on `x < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMode {
    pub id: usize,
    pub nonnegative: bool,
    pub a: f64,
    pub b: f64,
}

/// Dynamics shared by every agent of a network file.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalDynamics {
    Linear { a: f64, b: f64 },
    Hybrid(Vec<ScalarMode>),
}

/// Contents of a network file. Edges are `(from, to, weight)`, 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub state: Interval,
    pub input: Interval,
    /// Absent in graph-only files.
    pub local: Option<LocalDynamics>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl NetworkSpec {
    pub fn graph(&self) -> Result<WeightedDigraph> {
        WeightedDigraph::from_edges(self.nodes, self.edges.iter().copied())
    }

    pub fn to_model(&self) -> Result<NetworkModel> {
        let sub = match &self.local {
            None => return Err(invalid("network file declares no dynamics ('linear' or 'mode' lines)")),
            Some(LocalDynamics::Linear { a, b }) => SubsystemModel::scalar_linear(*a, *b),
            Some(LocalDynamics::Hybrid(modes)) => {
                let pick = |nonneg: bool| modes.iter().find(|m| m.nonnegative == nonneg).ok_or_else(|| invalid("hybrid dynamics need one x>=0 mode and one x<0 mode"));
                let (pos, neg) = (pick(true)?, pick(false)?);
                if modes.len() != 2 {
                    return Err(invalid("hybrid dynamics need exactly two modes"));
                }
                let sub = SubsystemModel::scalar_hybrid(pos.a, pos.b, neg.a, neg.b);
                if modes[0].nonnegative {
                    sub
                } else {
                    // keep the declared mode order as guard order
                    let mut m = sub.modes().to_vec();
                    m.swap(0, 1);
                    SubsystemModel::pwa(m)?
                }
            }
        };
        let couplings = self.edges.iter().map(|&(from, to, w)| Coupling::scalar(from, to, w)).collect();
        NetworkModel::uniform_scalar(self.nodes, sub, couplings, self.state, self.input)
    }

    /// Inverse of [`NetworkSpec::to_model`] for networks of identical scalar
    /// agents with shared boxes.
    pub fn from_model(net: &NetworkModel) -> Result<Self> {
        let n = net.len();
        if n == 0 {
            return Err(invalid("empty network"));
        }
        let first = net.subsystem(0);
        let uniform = (0..n).all(|i| net.subsystem(i) == first && net.state_box(i) == net.state_box(0) && net.input_box(i) == net.input_box(0));
        if !uniform || first.n_x() != 1 || first.n_u() != 1 {
            return Err(invalid("only networks of identical scalar agents have a file form"));
        }
        let local = match first.dynamics() {
            Dynamics::Linear { a, b, .. } => LocalDynamics::Linear { a: a[(0, 0)], b: b[(0, 0)] },
            Dynamics::Pwa { modes } => {
                let scalar = modes.iter().enumerate().map(|(k, m)| {
                    let [h] = m.guard.as_slice() else { return Err(invalid("only single-halfspace scalar guards have a file form")) };
                    let nonnegative = match (h.normal[0], h.offset) {
                        (c, o) if c < 0.0 && o == 0.0 => true,
                        (c, o) if c > 0.0 && o <= 0.0 => false,
                        _ => return Err(invalid("only sign guards x>=0 / x<0 have a file form")),
                    };
                    Ok(ScalarMode { id: k + 1, nonnegative, a: m.a[(0, 0)], b: m.b[(0, 0)] })
                });
                LocalDynamics::Hybrid(scalar.collect::<Result<_>>()?)
            }
        };
        let edges = net.couplings().iter().map(|c| (c.from, c.to, c.gain[(0, 0)])).collect();
        Ok(Self { nodes: n, state: net.state_box(0)[0], input: net.input_box(0)[0], local: Some(local), edges })
    }
}

/// Parses a network file.
///
/// Lines: `nodes N`, `bounds x lo hi`, `bounds u lo hi`,
/// `linear a <real> b <real>`, `mode <id> guard x>=0|x<0 a <real> b <real>`
/// and `edge <i> <j> <w>` for the influence of agent `j` on agent `i`.
/// Bounds default to the whole real line.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let mut nodes = None;
    let mut spec = NetworkSpec {
        nodes: 0,
        state: Interval::new(f64::NEG_INFINITY, f64::INFINITY),
        input: Interval::new(f64::NEG_INFINITY, f64::INFINITY),
        local: None,
        edges: Vec::new(),
    };
    let mut linear = None;
    let mut modes: Vec<ScalarMode> = Vec::new();
    for (line, content) in content_lines(text)? {
        let mut tok = content.split_whitespace();
        match tok.next() {
            Some("nodes") => {
                if nodes.is_some() {
                    return Err(parse_error(line, "'nodes' given twice"));
                }
                let t = tok.next().ok_or_else(|| parse_error(line, "missing node count"))?;
                let n: usize = t.parse().map_err(|_| parse_error(line, format!("node count '{t}' is not an integer")))?;
                if n == 0 {
                    return Err(parse_error(line, "node count must be positive"));
                }
                nodes = Some(n);
                no_trailing(line, tok)?;
            }
            Some("bounds") => {
                let which = tok.next();
                let (lo, hi) = (real(line, tok.next(), "lower bound")?, real(line, tok.next(), "upper bound")?);
                if lo > hi {
                    return Err(parse_error(line, "lower bound exceeds upper bound"));
                }
                match which {
                    Some("x") => spec.state = Interval::new(lo, hi),
                    Some("u") => spec.input = Interval::new(lo, hi),
                    _ => return Err(parse_error(line, "bounds apply to 'x' or 'u'")),
                }
                no_trailing(line, tok)?;
            }
            Some("linear") => {
                let (a, b) = coefficients(line, &mut tok)?;
                linear = Some(LocalDynamics::Linear { a, b });
                no_trailing(line, tok)?;
            }
            Some("mode") => {
                let t = tok.next().ok_or_else(|| parse_error(line, "missing mode id"))?;
                let id: usize = t.parse().map_err(|_| parse_error(line, format!("mode id '{t}' is not an integer")))?;
                if modes.iter().any(|m| m.id == id) {
                    return Err(parse_error(line, format!("mode {id} given twice")));
                }
                if tok.next() != Some("guard") {
                    return Err(parse_error(line, "expected 'guard'"));
                }
                let nonnegative = match tok.next() {
                    Some("x>=0") => true,
                    Some("x<0") => false,
                    _ => return Err(parse_error(line, "guard must be x>=0 or x<0")),
                };
                let (a, b) = coefficients(line, &mut tok)?;
                modes.push(ScalarMode { id, nonnegative, a, b });
                no_trailing(line, tok)?;
            }
            Some("edge") => {
                let n = nodes.ok_or_else(|| parse_error(line, "'edge' before 'nodes'"))?;
                let to = agent_id(line, tok.next(), Some(n), "agent")?;
                let from = agent_id(line, tok.next(), Some(n), "agent")?;
                let w = real(line, tok.next(), "weight")?;
                spec.edges.push((from, to, w));
                no_trailing(line, tok)?;
            }
            Some(other) => return Err(parse_error(line, format!("unknown keyword '{other}'"))),
            None => unreachable!("blank lines are skipped"),
        }
    }
    spec.nodes = nodes.ok_or_else(|| parse_error(1, "missing 'nodes' line"))?;
    spec.local = match (linear, modes.is_empty()) {
        (Some(_), false) => return Err(parse_error(1, "both 'linear' and 'mode' lines given")),
        (Some(l), true) => Some(l),
        (None, false) => {
            modes.sort_by_key(|m| m.id);
            Some(LocalDynamics::Hybrid(modes))
        }
        (None, true) => None,
    };
    Ok(spec)
}

fn coefficients<'a>(line: usize, tok: &mut impl Iterator<Item = &'a str>) -> Result<(f64, f64)> {
    if tok.next() != Some("a") {
        return Err(parse_error(line, "expected 'a <real>'"));
    }
    let a = real(line, tok.next(), "a")?;
    if tok.next() != Some("b") {
        return Err(parse_error(line, "expected 'b <real>'"));
    }
    Ok((a, real(line, tok.next(), "b")?))
}

pub fn write_network(spec: &NetworkSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", spec.nodes);
    for (name, iv) in [("x", spec.state), ("u", spec.input)] {
        if iv.lo.is_finite() || iv.hi.is_finite() {
            let _ = writeln!(out, "bounds {name} {} {}", iv.lo, iv.hi);
        }
    }
    match &spec.local {
        None => {}
        Some(LocalDynamics::Linear { a, b }) => {
            let _ = writeln!(out, "linear a {a} b {b}");
        }
        Some(LocalDynamics::Hybrid(modes)) => {
            for m in modes {
                let guard = if m.nonnegative { "x>=0" } else { "x<0" };
                let _ = writeln!(out, "mode {} guard {guard} a {} b {}", m.id, m.a, m.b);
            }
        }
    }
    for &(from, to, w) in &spec.edges {
        let _ = writeln!(out, "edge {} {} {w}", to + 1, from + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::generators::{benchmark50, modular64, random_network};
    use crate::graph::build_agent_graph;

    fn line_of(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn empty_file_fails_at_line_one() {
        assert_eq!(line_of(parse_network("").unwrap_err()), 1);
        assert_eq!(line_of(parse_network("# only a comment\n\n").unwrap_err()), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "nodes 3\n# comment\nedge 1 2 0.5\nedge 1 4 0.5\n";
        assert_eq!(line_of(parse_network(text).unwrap_err()), 4);
        assert_eq!(line_of(parse_network("nodes 2\nbounds x 1 -1\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_network("nodes 2\nmode 1 guard x>0 a 1 b 1\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_network("edge 1 2 0.5\nnodes 2\n").unwrap_err()), 1);
    }

    #[test]
    fn edge_reads_row_then_column() {
        let spec = parse_network("nodes 3\nedge 2 3 0.25 # agent 3 drives agent 2\n").unwrap();
        assert_eq!(spec.edges, vec![(2, 1, 0.25)]);
        let g = spec.graph().unwrap();
        assert_eq!(g.weight(2, 1), Some(0.25));
    }

    #[test]
    fn generated_networks_round_trip() {
        for net in [benchmark50(), modular64(), random_network(7, 0.4, 3).unwrap()] {
            let spec = NetworkSpec::from_model(&net).unwrap();
            let text = write_network(&spec);
            let back = parse_network(&text).unwrap();
            assert_eq!(back, spec);
            let model = back.to_model().unwrap();
            assert_eq!(model, net);
            assert_eq!(build_agent_graph(&model).edges(), back.graph().unwrap().edges());
        }
    }

    #[test]
    fn declared_mode_order_is_kept() {
        let text = "nodes 1\nbounds x -1 1\nbounds u -1 1\nmode 1 guard x<0 a -0.5 b 1\nmode 2 guard x>=0 a 0.5 b 1\n";
        let net = parse_network(text).unwrap().to_model().unwrap();
        assert_eq!(net.subsystem(0).active_mode(&[-0.3]), 0);
        assert_eq!(net.subsystem(0).active_mode(&[0.3]), 1);
    }

    #[test]
    fn graph_only_files_have_no_model() {
        let spec = parse_network("nodes 2\nedge 1 2 0.5\n").unwrap();
        assert!(spec.local.is_none());
        assert!(spec.to_model().is_err());
        assert_eq!(spec.graph().unwrap().edge_count(), 1);
    }
}

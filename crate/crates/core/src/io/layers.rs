use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{agent_id, bit, content_lines, parse_error, real};
use crate::error::Result;
use crate::topology::{EdgeLayers, Layer, Schedule, TopologyLayers};

/// Parses a topology-layer file. Each line adds one layer to an edge, in
/// order:
///
/// ```text
/// layer <src> <dst> state-dep S <s..> R <r..> T <t>
/// layer <src> <dst> decision [bits]
/// layer <src> <dst> signal <bits>
/// ```
///
/// A state-dependent line holds one halfspace row. A decision without bits
/// is always on.
pub fn parse_layers(text: &str) -> Result<TopologyLayers> {
    let mut edges: Vec<EdgeLayers> = Vec::new();
    for (line, content) in content_lines(text)? {
        let mut tok = content.split_whitespace();
        if tok.next() != Some("layer") {
            return Err(parse_error(line, "expected 'layer <src> <dst> <kind>'"));
        }
        let from = agent_id(line, tok.next(), None, "source agent")?;
        let to = agent_id(line, tok.next(), None, "destination agent")?;
        let rest: Vec<&str> = tok.collect();
        let layer = match rest.split_first() {
            Some((&"state-dep", args)) => state_dependent(line, args)?,
            Some((&"decision", [])) => Layer::Decision(Schedule::Constant(true)),
            Some((&"decision", bits)) => Layer::Decision(Schedule::Sequence(bits.iter().map(|b| bit(line, b)).collect::<Result<_>>()?)),
            Some((&"signal", [])) => return Err(parse_error(line, "signal needs at least one bit")),
            Some((&"signal", bits)) => Layer::Signal(Schedule::Sequence(bits.iter().map(|b| bit(line, b)).collect::<Result<_>>()?)),
            Some((kind, _)) => return Err(parse_error(line, format!("unknown layer kind '{kind}'"))),
            None => return Err(parse_error(line, "missing layer kind")),
        };
        match edges.iter_mut().find(|e| e.from == from && e.to == to) {
            Some(e) => e.layers.push(layer),
            None => edges.push(EdgeLayers { from, to, layers: vec![layer] }),
        }
    }
    Ok(TopologyLayers::new(edges))
}

fn state_dependent(line: usize, args: &[&str]) -> Result<Layer> {
    let pos = |key: &str| args.iter().position(|t| *t == key).ok_or_else(|| parse_error(line, format!("state-dep needs '{key}'")));
    let (s_at, r_at, t_at) = (pos("S")?, pos("R")?, pos("T")?);
    if !(s_at == 0 && s_at < r_at && r_at < t_at) || t_at + 2 != args.len() {
        return Err(parse_error(line, "expected 'S <reals> R <reals> T <real>'"));
    }
    let reals = |toks: &[&str]| toks.iter().map(|t| real(line, Some(t), "coefficient")).collect::<Result<Vec<f64>>>();
    let s = reals(&args[1..r_at])?;
    let r = reals(&args[r_at + 1..t_at])?;
    if s.is_empty() {
        return Err(parse_error(line, "S needs at least one coefficient"));
    }
    let t = real(line, Some(args[t_at + 1]), "T")?;
    Ok(Layer::StateDependent { s: DMatrix::from_row_slice(1, s.len(), &s), r: DMatrix::from_row_slice(1, r.len(), &r), t: DVector::from_element(1, t) })
}

/// Writes layers in the format read by [`parse_layers`]. Multi-row
/// state-dependent layers have no line form and are skipped with an error.
pub fn write_layers(layers: &TopologyLayers) -> Result<String> {
    let bits = |v: &[bool]| v.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    for e in &layers.edges {
        for layer in &e.layers {
            let body = match layer {
                Layer::StateDependent { s, r, t } => {
                    if s.nrows() != 1 {
                        return Err(crate::error::invalid(format!("layer on {}->{} has {} rows; the file form holds one", e.from + 1, e.to + 1, s.nrows())));
                    }
                    let join = |m: &DMatrix<f64>| m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
                    format!("state-dep S {} R {} T {}", join(s), join(r), t[0])
                }
                Layer::Decision(Schedule::Constant(true)) => "decision".to_string(),
                Layer::Decision(Schedule::Constant(false)) => "decision 0".to_string(),
                Layer::Decision(Schedule::Sequence(v)) => format!("decision {}", bits(v)),
                Layer::Signal(Schedule::Constant(b)) => format!("signal {}", bits(&[*b])),
                Layer::Signal(Schedule::Sequence(v)) => format!("signal {}", bits(v)),
            };
            let _ = writeln!(out, "layer {} {} {body}", e.from + 1, e.to + 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::generators::random_layered;

    #[test]
    fn parses_all_kinds() {
        let text = "# edge 1 -> 2\nlayer 1 2 state-dep S -1 R 0 T 0\nlayer 1 2 decision\nlayer 1 2 signal 1 0 1\nlayer 2 1 decision 0 1\n";
        let l = parse_layers(text).unwrap();
        assert_eq!(l.edges.len(), 2);
        let e = l.for_edge(0, 1).unwrap();
        assert_eq!(e.layers.len(), 3);
        assert_eq!(e.layers[1], Layer::Decision(Schedule::Constant(true)));
        assert_eq!(e.layers[2], Layer::Signal(Schedule::Sequence(vec![true, false, true])));
        let x = DVector::from_element(1, 0.2);
        let u = DVector::from_element(1, 0.0);
        // -x <= 0: on for a nonnegative source
        assert_eq!(e.layers[0].value(0, &x, &u), Some(true));
        assert_eq!(e.layers[0].value(0, &-x, &u), Some(false));
    }

    #[test]
    fn generated_layers_round_trip() {
        for seed in 0..3 {
            let inst = random_layered(4, 6, seed);
            let text = write_layers(&inst.layers).unwrap();
            assert_eq!(parse_layers(&text).unwrap(), inst.layers);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line = |t: &str| match parse_layers(t).unwrap_err() {
            Error::Parse { line, .. } => line,
            e => panic!("{e}"),
        };
        assert_eq!(line(""), 1);
        assert_eq!(line("layer 1 2 decision\nlayer 1 2 signal\n"), 2);
        assert_eq!(line("layer 1 2 decision\n\nlayer 1 2 state-dep S 1 T 0\n"), 3);
        assert_eq!(line("layer 1 2 signal 1 2\n"), 1);
        assert_eq!(line("edge 1 2\n"), 1);
    }
}

//! Line-oriented text formats for networks, partitions and topology layers.
//!
//! Agent ids in files are 1-based; everything in memory is 0-based.

mod layers;
mod network;
mod partition;

pub use layers::{parse_layers, write_layers};
pub use network::{parse_network, write_network, LocalDynamics, NetworkSpec, ScalarMode};
pub use partition::{parse_partition, write_partition, write_partition_result, PartitionFile};

use crate::error::{Error, Result};

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-blank lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> Result<Vec<(usize, &str)>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(parse_error(1, "file has no content"));
    }
    Ok(lines)
}

fn real(line: usize, tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    tok.parse::<f64>().map_err(|_| parse_error(line, format!("{what} '{tok}' is not a number")))
}

/// A 1-based id converted to 0-based, checked against `n` when known.
fn agent_id(line: usize, tok: Option<&str>, n: Option<usize>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    let id: usize = tok.parse().map_err(|_| parse_error(line, format!("{what} '{tok}' is not a positive integer")))?;
    if id == 0 || n.is_some_and(|n| id > n) {
        return Err(parse_error(line, format!("{what} {id} is out of range")));
    }
    Ok(id - 1)
}

fn bit(line: usize, tok: &str) -> Result<bool> {
    match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_error(line, format!("'{tok}' is not a 0/1 value"))),
    }
}

fn no_trailing<'a>(line: usize, mut rest: impl Iterator<Item = &'a str>) -> Result<()> {
    match rest.next() {
        Some(tok) => Err(parse_error(line, format!("unexpected token '{tok}'"))),
        None => Ok(()),
    }
}

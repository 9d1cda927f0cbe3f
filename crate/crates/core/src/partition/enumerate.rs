use super::Partition;
use crate::error::{Error, Result};

/// Largest node count accepted by [`enumerate_partitions_oracle`].
pub const MAX_ORACLE_NODES: usize = 13;

/// Number of set partitions of `n` elements, via the Bell triangle.
pub fn bell_number(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("row is never empty"));
        for v in &row {
            let last = *next.last().expect("just pushed");
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// Every set partition of `0..n` exactly once, in restricted-growth-string order.
pub fn enumerate_partitions_oracle(n: usize) -> Result<PartitionIter> {
    if n > MAX_ORACLE_NODES {
        return Err(Error::TooLarge { n, limit: MAX_ORACLE_NODES, hint: "exhaustive enumeration is limited to small networks" });
    }
    Ok(PartitionIter { rgs: vec![0; n], prefix_max: vec![0; n], done: false })
}

/// Iterator over restricted-growth strings.
#[derive(Clone, Debug)]
pub struct PartitionIter {
    rgs: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    fn advance(&mut self) {
        let n = self.rgs.len();
        for i in (1..n).rev() {
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in (i + 1)..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let p = Partition::from_assignment(self.rgs.clone()).expect("restricted-growth strings use every label");
        if self.rgs.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn bell_numbers() {
        // Bell(n+1) = Σ C(n,k) Bell(k)
        let mut bell = vec![1u128];
        for n in 0..13usize {
            let mut c = 1u128;
            let mut s = 0u128;
            for k in 0..=n {
                s += c * bell[k];
                c = c * (n - k) as u128 / (k + 1) as u128;
            }
            bell.push(s);
        }
        for (n, b) in bell.iter().enumerate() {
            assert_eq!(bell_number(n), *b);
        }
        assert_eq!(bell_number(3), 5);
        assert_eq!(bell_number(8), 4140);
    }

    #[test]
    fn counts_and_uniqueness() {
        assert_eq!(enumerate_partitions_oracle(1).unwrap().count(), 1);
        let all: Vec<_> = enumerate_partitions_oracle(3).unwrap().collect();
        let rendered: Vec<String> = all.iter().map(|p| p.to_string()).collect();
        assert_eq!(rendered, ["{1 2 3}", "{1 2 | 3}", "{1 3 | 2}", "{1 | 2 3}", "{1 | 2 | 3}"]);
        for n in 0..=8 {
            let seen: HashSet<Partition> = enumerate_partitions_oracle(n).unwrap().map(|p| p.canonical()).collect();
            assert_eq!(seen.len() as u128, bell_number(n));
        }
        assert!(enumerate_partitions_oracle(14).is_err());
    }
}

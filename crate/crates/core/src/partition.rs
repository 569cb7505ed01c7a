//! Set partitions of an ordered terminal list.
//!
//! Partitions are indexed by their restricted-growth string (RGS) in
//! lexicographic order. Terminal `i` carries label `rgs[i]`, where labels are
//! assigned in order of first appearance. For three terminals `a, b, c` the
//! order is frozen as
//!
//! | index | RGS   | name    |
//! |-------|-------|---------|
//! | 0     | 0 0 0 | `abc`   |
//! | 1     | 0 0 1 | `ab|c`  |
//! | 2     | 0 1 0 | `ac|b`  |
//! | 3     | 0 1 1 | `a|bc`  |
//! | 4     | 0 1 2 | `a|b|c` |
//!
//! Every serialized distribution in this crate uses this order.

use crate::error::{Error, Result};

pub const MAX_TERMINALS: usize = 6;

/// Index of a terminal partition in the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct TerminalPartition(pub usize);

/// Canonical indices for three terminals.
pub mod j3 {
    pub const ABC: usize = 0;
    pub const AB_C: usize = 1;
    pub const AC_B: usize = 2;
    pub const A_BC: usize = 3;
    pub const A_B_C: usize = 4;
    pub const NAMES: [&str; 5] = ["abc", "ab|c", "ac|b", "a|bc", "a|b|c"];

    /// The b<->c relabeling of the five partitions.
    pub const SWAP_BC: [usize; 5] = [ABC, AC_B, AB_C, A_BC, A_B_C];
}

/// All set partitions of `k` ordered terminals.
#[derive(Debug, Clone)]
pub struct PartitionSet {
    k: usize,
    rgs: Vec<Vec<u8>>,
    /// RGS read as a base-6 number -> partition index.
    lookup: Vec<u16>,
}

/// Returns the canonical list of partitions of `k` terminals.
pub fn canonical_partitions(k: usize) -> Result<Vec<TerminalPartition>> {
    Ok((0..PartitionSet::new(k)?.len()).map(TerminalPartition).collect())
}

pub fn bell(k: usize) -> usize {
    // Bell triangle.
    let mut row = vec![1usize];
    for _ in 1..=k {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

impl PartitionSet {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=MAX_TERMINALS).contains(&k) {
            return Err(Error::TerminalCount(k));
        }
        let mut rgs = Vec::new();
        let mut cur = vec![0u8; k];
        gen(&mut cur, 1, 0, &mut rgs);
        let mut lookup = vec![u16::MAX; 6usize.pow(k as u32)];
        for (i, r) in rgs.iter().enumerate() {
            lookup[code(r)] = i as u16;
        }
        Ok(Self { k, rgs, lookup })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rgs.is_empty()
    }

    pub fn rgs(&self, idx: usize) -> &[u8] {
        &self.rgs[idx]
    }

    pub fn block_count(&self, idx: usize) -> usize {
        self.rgs[idx].iter().copied().max().map_or(0, |m| m as usize + 1)
    }

    pub fn together(&self, idx: usize, x: usize, y: usize) -> bool {
        self.rgs[idx][x] == self.rgs[idx][y]
    }

    /// Index of the partition whose RGS is `rgs` (must already be canonical).
    pub fn index_of_rgs(&self, rgs: &[u8]) -> Option<usize> {
        if rgs.len() != self.k || rgs.iter().any(|&d| d as usize >= self.k) {
            return None;
        }
        match self.lookup[code(rgs)] {
            u16::MAX => None,
            i => Some(i as usize),
        }
    }

    /// Index of the partition induced by arbitrary per-terminal labels.
    pub fn index_of_labels<T: PartialEq + Copy>(&self, labels: &[T]) -> usize {
        debug_assert_eq!(labels.len(), self.k);
        let mut digits = [0usize; MAX_TERMINALS];
        let mut next = 0usize;
        let mut c = 0usize;
        for i in 0..labels.len() {
            digits[i] = match (0..i).find(|&j| labels[j] == labels[i]) {
                Some(j) => digits[j],
                None => {
                    next += 1;
                    next - 1
                }
            };
            c = c * 6 + digits[i];
        }
        self.lookup[c] as usize
    }

    /// Human-readable name, e.g. `ab|c`, using `names` for the terminals.
    pub fn name(&self, idx: usize, names: &[String]) -> String {
        let r = &self.rgs[idx];
        let nb = self.block_count(idx);
        let sep = if names.iter().all(|n| n.chars().count() == 1) { "" } else { "," };
        (0..nb)
            .map(|b| {
                (0..self.k)
                    .filter(|&i| r[i] as usize == b)
                    .map(|i| names[i].as_str())
                    .collect::<Vec<_>>()
                    .join(sep)
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Parses a name such as `ab|c` (or `a,b|c` for long names) or a bare index.
    pub fn parse_name(&self, s: &str, names: &[String]) -> Result<usize> {
        if let Ok(i) = s.trim().parse::<usize>() {
            if i < self.len() {
                return Ok(i);
            }
        }
        let mut labels = vec![usize::MAX; self.k];
        for (b, block) in s.trim().split(['|', '‖']).enumerate() {
            let members: Vec<String> = if block.contains(',') || names.iter().any(|n| n.chars().count() > 1) {
                block.split(',').map(|m| m.trim().to_string()).collect()
            } else {
                block.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_string()).collect()
            };
            for m in members {
                let t = names
                    .iter()
                    .position(|n| *n == m)
                    .ok_or_else(|| Error::UnknownTerminal(m.clone()))?;
                if labels[t] != usize::MAX {
                    return Err(Error::InvalidModel(format!("terminal {m} listed twice in {s:?}")));
                }
                labels[t] = b;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::InvalidModel(format!("partition {s:?} does not cover every terminal")));
        }
        Ok(self.index_of_labels(&labels))
    }

    /// Maps a partition through a map `f` from these terminals onto the
    /// terminals of `target`: terminals `i, j` end up together iff `f(i), f(j)`
    /// are together. Used to lift distributions of contracted models.
    pub fn pullback(&self, target: &PartitionSet, target_idx: usize, f: &[usize]) -> usize {
        let labels: Vec<u8> = f.iter().map(|&t| target.rgs[target_idx][t]).collect();
        self.index_of_labels(&labels)
    }
}

fn code(rgs: &[u8]) -> usize {
    rgs.iter().fold(0, |c, &d| c * 6 + d as usize)
}

fn gen(cur: &mut Vec<u8>, pos: usize, max: u8, out: &mut Vec<Vec<u8>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..=max + 1 {
        cur[pos] = v;
        gen(cur, pos + 1, max.max(v), out);
    }
}

/// Relabels `labels` by order of first appearance.
pub fn canonical_rgs<T: PartialEq + Copy>(labels: &[T]) -> Vec<u8> {
    let mut seen: Vec<T> = Vec::with_capacity(labels.len());
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i as u8,
            None => {
                seen.push(*l);
                (seen.len() - 1) as u8
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Vec<String> {
        ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sizes_match_bell_numbers() {
        for k in 1..=6 {
            assert_eq!(PartitionSet::new(k).unwrap().len(), bell(k));
        }
        assert_eq!(bell(3), 5);
        assert_eq!(bell(6), 203);
        assert!(PartitionSet::new(0).is_err());
        assert!(PartitionSet::new(7).is_err());
    }

    #[test]
    fn three_terminal_order_is_frozen() {
        let ps = PartitionSet::new(3).unwrap();
        let names: Vec<String> = (0..5).map(|i| ps.name(i, &abc())).collect();
        assert_eq!(names, j3::NAMES);
        assert_eq!(ps.index_of_labels(&[7, 7, 2]), j3::AB_C);
        assert_eq!(ps.parse_name("b|ac", &abc()).unwrap(), j3::AC_B);
        assert_eq!(ps.parse_name("a‖b‖c", &abc()).unwrap(), j3::A_B_C);
    }

    #[test]
    fn small_cases() {
        let one = PartitionSet::new(1).unwrap();
        assert_eq!(one.len(), 1);
        let two = PartitionSet::new(2).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(two.name(0, &names), "ab");
        assert_eq!(two.name(1, &names), "a|b");
    }

    #[test]
    fn swap_bc_is_the_relabeling() {
        let ps = PartitionSet::new(3).unwrap();
        for i in 0..5 {
            let r = ps.rgs(i);
            assert_eq!(ps.index_of_labels(&[r[0], r[2], r[1]]), j3::SWAP_BC[i]);
        }
    }
}

//! Feasibility of 8-tuples of three-terminal partitions
//! `(C1, C2, C1>S1, C1>~S1, C1>S2, C1>~S2, C1>S3, C1>~S3)`, where `C1>S`
//! is the swap that takes `C1` on `S` and `C2` elsewhere.
//!
//! A tuple is decided on a universal graph whose vertices are codes: one
//! class per coordinate, either a block of that coordinate's partition or
//! the empty class (no terminal in the cluster). Each pair of codes carries
//! one edge. The edge is open in `C1` iff the codes agree on every coordinate
//! inheriting the `C1` status, and open in `C2` iff they agree on the others;
//! which coordinates inherit which status depends on the edge's S-sets, read
//! off the coordinate-0 classes. Codes whose realized clusters contradict
//! their classes are deleted until nothing changes; the tuple is feasible iff
//! the terminals survive. This accepts exactly the tuples realized by some
//! finite graph.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::Graph;
use crate::par;
use crate::partition::{j3, PartitionSet};
use crate::swap::{self, s_membership, PAIR_CAP};

pub const COORDS: usize = 8;
pub const TUPLE_COUNT: u32 = 390_625;
/// Largest edge count for [`observed_tuples`].
pub const OBSERVED_CAP: usize = 10;

const EMPTY: u8 = 3;

/// Label of each terminal per partition, in canonical order.
const RGS: [[u8; 3]; 5] = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [0, 1, 2]];
const BLOCKS: [u8; 5] = [1, 2, 2, 2, 3];

pub const COORD_NAMES: [&str; COORDS] = ["C1", "C2", "S1", "~S1", "S2", "~S2", "S3", "~S3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleIndex(pub [u8; COORDS]);

impl TupleIndex {
    /// `J1` is the most significant base-5 digit.
    pub fn pack(&self) -> u32 {
        self.0.iter().fold(0u32, |acc, &d| acc * 5 + d as u32)
    }

    pub fn unpack(mut x: u32) -> Self {
        let mut t = [0u8; COORDS];
        for j in (0..COORDS).rev() {
            t[j] = (x % 5) as u8;
            x /= 5;
        }
        Self(t)
    }

    /// Image under relabeling `b <-> c`, which also exchanges `S1` and `S2`.
    pub fn swap_bc(&self) -> Self {
        let s = |j: usize| j3::SWAP_BC[self.0[j] as usize] as u8;
        Self([s(0), s(1), s(4), s(5), s(2), s(3), s(6), s(7)])
    }

    pub fn names(&self) -> [&'static str; COORDS] {
        self.0.map(|p| j3::NAMES[p as usize])
    }
}

/// Whether an edge whose endpoints lie in `C1`-clusters of classes `u`, `v`
/// (block index of `case`, or `None` for no terminal) belongs to `S_i`,
/// `i` in 1..=3.
pub fn side_predicate(u: Option<u8>, v: Option<u8>, case: usize, i: usize) -> bool {
    assert!((1..=3).contains(&i) && case < 5);
    let touches = |x: usize| {
        let b = RGS[case][x];
        u == Some(b) || v == Some(b)
    };
    s_membership(touches(0), touches(1), touches(2))[i - 1]
}

fn class_opt(c: u8) -> Option<u8> {
    (c != EMPTY).then_some(c)
}

/// Coordinates inheriting the `C1` status for an edge with S-pattern `m`.
fn first_coords(m: [bool; 3]) -> [usize; 4] {
    [0, if m[0] { 2 } else { 3 }, if m[1] { 4 } else { 5 }, if m[2] { 6 } else { 7 }]
}

fn complement(a: [usize; 4]) -> [usize; 4] {
    let mut out = [0; 4];
    let mut k = 0;
    for j in 0..COORDS {
        if !a.contains(&j) {
            out[k] = j;
            k += 1;
        }
    }
    out
}

fn key(code: &[u8; COORDS], coords: &[usize; 4]) -> usize {
    coords.iter().fold(0, |acc, &j| acc << 2 | code[j] as usize)
}

/// One union rule for the configuration being built.
#[derive(Clone, Copy)]
struct Rule {
    k1: u8,
    k2: u8,
    coords: [usize; 4],
}

#[derive(Default)]
struct Scratch {
    codes: Vec<[u8; COORDS]>,
    alive: Vec<bool>,
    parent: Vec<u32>,
    by_class: [Vec<u32>; 4],
    first: Vec<u32>,
    second: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl Scratch {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = p;
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }

    fn build(&mut self, t: &TupleIndex) {
        self.codes.clear();
        for term in 0..3 {
            self.codes.push(std::array::from_fn(|j| RGS[t.0[j] as usize][term]));
        }
        let radix: [u8; COORDS] = std::array::from_fn(|j| BLOCKS[t.0[j] as usize] + 1);
        let mut digits = [0u8; COORDS];
        loop {
            let code: [u8; COORDS] = std::array::from_fn(|j| if digits[j] + 1 == radix[j] { EMPTY } else { digits[j] });
            if code.iter().any(|&c| c != EMPTY) {
                self.codes.push(code);
            }
            let mut j = 0;
            while j < COORDS {
                digits[j] += 1;
                if digits[j] < radix[j] {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            if j == COORDS {
                break;
            }
        }
        self.alive.clear();
        self.alive.resize(self.codes.len(), true);
        self.parent.resize(self.codes.len(), 0);
    }

    /// Union-find over alive codes for configuration `j`.
    fn connect(&mut self, j: usize, rules: &[Rule]) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        for c in &mut self.by_class {
            c.clear();
        }
        for (i, code) in self.codes.iter().enumerate() {
            if self.alive[i] {
                self.by_class[code[0] as usize].push(i as u32);
            }
        }
        for rule in rules {
            if !rule.coords.contains(&j) {
                continue;
            }
            self.first.clear();
            self.first.resize(256, NONE);
            self.second.clear();
            self.second.resize(256, NONE);
            let lists = if rule.k1 == rule.k2 { vec![rule.k1] } else { vec![rule.k1, rule.k2] };
            // First pass: one representative per bucket and class.
            for &k in &lists {
                for idx in 0..self.by_class[k as usize].len() {
                    let u = self.by_class[k as usize][idx];
                    let b = key(&self.codes[u as usize], &rule.coords);
                    let slot = if k == rule.k1 { &mut self.first[b] } else { &mut self.second[b] };
                    if *slot == NONE {
                        *slot = u;
                    }
                }
            }
            for &k in &lists {
                for idx in 0..self.by_class[k as usize].len() {
                    let u = self.by_class[k as usize][idx];
                    let b = key(&self.codes[u as usize], &rule.coords);
                    if rule.k1 == rule.k2 {
                        let f = self.first[b];
                        self.union(f, u);
                    } else {
                        let other = if k == rule.k1 { self.second[b] } else { self.first[b] };
                        if other != NONE {
                            self.union(other, u);
                        }
                    }
                }
            }
        }
    }

    fn feasible(&mut self, t: &TupleIndex) -> bool {
        self.build(t);
        let case = t.0[0] as usize;
        let mut classes: Vec<u8> = (0..BLOCKS[case]).collect();
        classes.push(EMPTY);
        let mut rules = Vec::new();
        for (x, &k1) in classes.iter().enumerate() {
            for &k2 in &classes[x..] {
                let m = std::array::from_fn(|i| side_predicate(class_opt(k1), class_opt(k2), case, i + 1));
                let a = first_coords(m);
                if k1 == k2 {
                    rules.push(Rule { k1, k2, coords: a });
                }
                rules.push(Rule { k1, k2, coords: complement(a) });
            }
        }
        // Terminal of each block per coordinate.
        let reps: [[u32; 3]; COORDS] = std::array::from_fn(|j| {
            let mut r = [NONE; 3];
            for term in (0..3).rev() {
                r[RGS[t.0[j] as usize][term] as usize] = term as u32;
            }
            r
        });
        loop {
            let mut deleted = false;
            for (j, rep) in reps.iter().enumerate() {
                self.connect(j, &rules);
                for u in 0..self.codes.len() {
                    if !self.alive[u] {
                        continue;
                    }
                    let c = self.codes[u][j];
                    if c == EMPTY {
                        continue;
                    }
                    let r = rep[c as usize];
                    if self.find(u as u32) != self.find(r) {
                        if u < 3 {
                            return false;
                        }
                        self.alive[u] = false;
                        deleted = true;
                    }
                }
            }
            if !deleted {
                return true;
            }
        }
    }
}

pub fn feasible(t: &TupleIndex) -> bool {
    Scratch::default().feasible(t)
}

/// Surviving codes of a feasible tuple, terminals first.
#[cfg(test)]
pub(crate) fn universal_codes(t: &TupleIndex) -> Option<Vec<[u8; COORDS]>> {
    let mut s = Scratch::default();
    s.feasible(t).then(|| s.codes.iter().zip(&s.alive).filter(|(_, &a)| a).map(|(c, _)| *c).collect())
}

/// Fixed values for some coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Slice {
    pub fixed: [Option<u8>; COORDS],
}

impl Slice {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn j1(p: usize) -> Self {
        let mut s = Self::default();
        s.fixed[0] = Some(p as u8);
        s
    }

    /// Parses `J1=a|b|c,J3=ab|c` (partition names or indices).
    pub fn parse(s: &str) -> Result<Self> {
        let ps = PartitionSet::new(3)?;
        let names = ["a", "b", "c"].map(String::from);
        let mut out = Self::default();
        for item in s.split([',', ';']).map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::Options(format!("slice item {item:?} is not J<n>=<partition>")))?;
            let j: usize = k
                .trim()
                .trim_start_matches(['J', 'j'])
                .parse()
                .map_err(|_| Error::Options(format!("bad slice coordinate {k:?}")))?;
            if !(1..=COORDS).contains(&j) {
                return Err(Error::Options(format!("slice coordinate J{j} out of range 1..=8")));
            }
            out.fixed[j - 1] = Some(ps.parse_name(v.trim(), &names)? as u8);
        }
        Ok(out)
    }

    pub fn contains(&self, t: &TupleIndex) -> bool {
        self.fixed.iter().zip(&t.0).all(|(f, &x)| f.is_none_or(|f| f == x))
    }

    pub fn indices(&self) -> Vec<u32> {
        (0..TUPLE_COUNT).filter(|&i| self.contains(&TupleIndex::unpack(i))).collect()
    }

    pub fn to_json(&self) -> Value {
        let m: serde_json::Map<String, Value> = self
            .fixed
            .iter()
            .enumerate()
            .filter_map(|(j, f)| f.map(|p| (format!("J{}", j + 1), Value::String(j3::NAMES[p as usize].into()))))
            .collect();
        Value::Object(m)
    }
}

/// Bitset over all packed tuples; bits outside the evaluated slice are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSet {
    words: Vec<u64>,
    pub slice: Slice,
}

const WORDS: usize = (TUPLE_COUNT as usize).div_ceil(64);
pub const FILE_BYTES: usize = (TUPLE_COUNT as usize).div_ceil(8);

impl FeasibleSet {
    pub fn empty(slice: Slice) -> Self {
        Self { words: vec![0; WORDS], slice }
    }

    pub fn from_indices(slice: Slice, idx: impl IntoIterator<Item = u32>) -> Self {
        let mut f = Self::empty(slice);
        for i in idx {
            f.insert(i);
        }
        f
    }

    pub fn insert(&mut self, i: u32) {
        self.words[i as usize / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: u32) -> bool {
        self.words[i as usize / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..TUPLE_COUNT).filter(|&i| self.contains(i))
    }

    /// Union of two results; the slice becomes the full space if they differ.
    pub fn union(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        let slice = if self.slice == other.slice { self.slice } else { Slice::full() };
        Self { words, slice }
    }

    /// Feasible count per value of `J1`.
    pub fn counts_by_j1(&self) -> [usize; 5] {
        let mut out = [0; 5];
        for i in self.iter() {
            out[TupleIndex::unpack(i).0[0] as usize] += 1;
        }
        out
    }

    /// Whether the set is closed under the `b <-> c` relabeling (within the slice
    /// and its image).
    pub fn is_bc_symmetric(&self) -> bool {
        self.iter().all(|i| {
            let s = TupleIndex::unpack(i).swap_bc();
            !self.slice.contains(&s) || self.contains(s.pack())
        })
    }

    /// Little-endian packed bits: tuple `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(FILE_BYTES);
        out
    }

    pub fn from_bytes(bytes: &[u8], slice: Slice) -> Result<Self> {
        if bytes.len() != FILE_BYTES {
            return Err(Error::Dimension { expected: FILE_BYTES, got: bytes.len() });
        }
        let mut words = vec![0u64; WORDS];
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut b = [0u8; 8];
            b[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(b);
        }
        let f = Self { words, slice };
        if f.iter().any(|i| i >= TUPLE_COUNT) {
            return Err(Error::InvalidModel("bitset has bits past the last tuple".into()));
        }
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path, slice: Slice) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, slice)
    }

    pub fn summary(&self) -> Value {
        let by = self.counts_by_j1();
        json!({
            "schema": 1,
            "slice": self.slice.to_json(),
            "feasible": self.count(),
            "by_j1": j3::NAMES.iter().zip(by).map(|(n, c)| json!({"J1": n, "feasible": c})).collect::<Vec<_>>(),
        })
    }
}

pub fn enumerate_feasible(slice: &Slice, workers: usize) -> FeasibleSet {
    let idx = slice.indices();
    let found = par::map_reduce(
        workers,
        par::split(idx.len() as u64, 512),
        |range| {
            let mut scratch = Scratch::default();
            idx[range.start as usize..range.end as usize]
                .iter()
                .copied()
                .filter(|&i| scratch.feasible(&TupleIndex::unpack(i)))
                .collect::<Vec<u32>>()
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap_or_default();
    FeasibleSet::from_indices(*slice, found)
}

/// Every tuple realized by some pair of configurations of `g`.
pub fn observed_tuples(g: &Graph, workers: usize) -> Result<BTreeSet<u32>> {
    if g.terminals.len() != 3 {
        return Err(Error::TerminalCount(g.terminals.len()));
    }
    let cap = OBSERVED_CAP.min(PAIR_CAP);
    if g.edges.len() > cap {
        return Err(Error::CapExceeded { what: "edge count for pair enumeration", got: g.edges.len(), cap });
    }
    let c = crate::engine::Compiled::bond(g)?;
    let n = 1u64 << g.edges.len();
    let all = par::map_reduce(
        workers,
        par::split(n, 64),
        |range| {
            let mut seen = BTreeSet::new();
            let mut dsu = c.new_dsu();
            for c1 in range {
                let f = swap::first_run(&c, g, c1, &mut dsu);
                for c2 in 0..n {
                    let p2 = c.classify(c2, &mut dsu);
                    let rest = swap::swap_parts(&c, &f, c1, c2, &mut dsu);
                    let t = TupleIndex([f.part as u8, p2 as u8, rest[0] as u8, rest[1] as u8, rest[2] as u8, rest[3] as u8, rest[4] as u8, rest[5] as u8]);
                    seen.insert(t.pack());
                }
            }
            seen
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap_or_default();
    Ok(all)
}

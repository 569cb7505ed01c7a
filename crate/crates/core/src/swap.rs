//! Swapped configurations and adaptive swap schedules on three-terminal
//! graphs.
//!
//! Edge sets and configurations are bit masks over the graph's edge indices.
//! `swap(c1, c2, s)` agrees with `c1` on `s` and with `c2` elsewhere.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde_json::{json, Value};

use crate::dsu::Dsu;
use crate::engine::exact::{Weight, Weights};
use crate::engine::Compiled;
use crate::error::{Error, Result};
use crate::inequalities::{self, Check, Relation};
use crate::model::{full_mask, Configuration, Graph};
use crate::par;
use crate::partition::j3::*;
use crate::rational::{self, Rational};

/// Largest edge count for enumerations over configuration pairs.
pub const PAIR_CAP: usize = 12;

pub fn swap(c1: Configuration, c2: Configuration, s: u64) -> Configuration {
    debug_assert_eq!(c1.len, c2.len);
    Configuration::new((c1.bits & s) | (c2.bits & !s), c1.len)
}

fn swap_bits(c1: u64, c2: u64, s: u64) -> u64 {
    (c1 & s) | (c2 & !s)
}

fn connect(g: &Graph, mask: u64, dsu: &mut Dsu) {
    dsu.reset();
    for (i, e) in g.edges.iter().enumerate() {
        if mask >> i & 1 == 1 {
            dsu.union(e.u, e.v);
        }
    }
}

/// Vertex set of each terminal's open cluster, sorted.
pub fn components(g: &Graph, c: Configuration) -> Vec<Vec<usize>> {
    let mut dsu = Dsu::new(g.vertices.len());
    connect(g, c.bits, &mut dsu);
    g.terminals
        .iter()
        .map(|&t| {
            let r = dsu.find(t);
            (0..g.vertices.len()).filter(|&v| dsu.find(v) == r).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct STriple {
    pub s: [u64; 3],
}

fn require_three(g: &Graph) -> Result<()> {
    if g.terminals.len() != 3 {
        return Err(Error::TerminalCount(g.terminals.len()));
    }
    Ok(())
}

fn check_edges(g: &Graph, cap: usize) -> Result<()> {
    if g.edges.len() > cap {
        return Err(Error::CapExceeded { what: "edge count for pair enumeration", got: g.edges.len(), cap });
    }
    Ok(())
}

/// Membership of an edge in `S_1, S_2, S_3` from whether it touches the
/// clusters of `a`, `b`, `c`.
pub(crate) fn s_membership(ta: bool, tb: bool, tc: bool) -> [bool; 3] {
    [tc || (tb && !ta), tb || (tc && !ta), (tb || tc) && !ta]
}

/// The three sets for a `dsu` already holding the clusters of `c1`.
fn s_sets_connected(g: &Graph, dsu: &mut Dsu) -> STriple {
    let roots = [dsu.find(g.terminals[0]), dsu.find(g.terminals[1]), dsu.find(g.terminals[2])];
    let mut s = [0u64; 3];
    for (i, e) in g.edges.iter().enumerate() {
        let (ru, rv) = (dsu.find(e.u), dsu.find(e.v));
        let t = |x: usize| ru == roots[x] || rv == roots[x];
        for (j, inside) in s_membership(t(0), t(1), t(2)).into_iter().enumerate() {
            if inside {
                s[j] |= 1 << i;
            }
        }
    }
    STriple { s }
}

pub fn s_sets(g: &Graph, c1: Configuration) -> Result<STriple> {
    require_three(g)?;
    let mut dsu = Dsu::new(g.vertices.len());
    connect(g, c1.bits, &mut dsu);
    Ok(s_sets_connected(g, &mut dsu))
}

/// What a schedule may look at: edges assigned so far and their statuses in
/// both configurations. Status bits outside `assigned` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Revealed {
    pub assigned: u64,
    pub c1: u64,
    pub c2: u64,
}

/// An adaptive rule choosing the next edge and its side (`true` for S)
/// before that edge is revealed.
pub trait SwapSchedule: Sync {
    fn name(&self) -> &str;
    fn next(&self, g: &Graph, r: &Revealed) -> Option<(usize, bool)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Query edges touching the known cluster of terminal `root` in the given
    /// configuration, lowest index first, until it is fully explored.
    Grow { root: usize, in_s: bool, view: View },
    /// Assign every remaining edge.
    Rest { in_s: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSchedule {
    pub name: String,
    pub phases: Vec<Phase>,
}

pub const BUILTIN_SCHEDULES: [&str; 6] = ["fig1", "s1", "s2", "s3", "constant", "fig1-second"];

impl PhaseSchedule {
    pub fn builtin(name: &str) -> Result<Self> {
        use Phase::*;
        let grow = |root, in_s| Grow { root, in_s, view: View::First };
        let phases = match name {
            "fig1" => vec![grow(0, true), Rest { in_s: false }],
            "fig1-second" => vec![Grow { root: 0, in_s: true, view: View::Second }, Rest { in_s: false }],
            "s1" => vec![grow(2, true), grow(0, false), grow(1, true), Rest { in_s: false }],
            "s2" => vec![grow(1, true), grow(0, false), grow(2, true), Rest { in_s: false }],
            "s3" => vec![grow(0, false), grow(1, true), grow(2, true), Rest { in_s: false }],
            "constant" => vec![Rest { in_s: true }],
            _ => return Err(Error::Schedule(format!("unknown schedule {name:?}; expected one of {}", BUILTIN_SCHEDULES.join(", ")))),
        };
        Ok(Self { name: name.to_string(), phases })
    }

    fn max_root(&self) -> Option<usize> {
        self.phases
            .iter()
            .filter_map(|p| match p {
                Phase::Grow { root, .. } => Some(*root),
                Phase::Rest { .. } => None,
            })
            .max()
    }
}

impl SwapSchedule for PhaseSchedule {
    fn name(&self) -> &str {
        &self.name
    }

    fn next(&self, g: &Graph, r: &Revealed) -> Option<(usize, bool)> {
        let m = g.edges.len();
        let unassigned = full_mask(m) & !r.assigned;
        if unassigned == 0 {
            return None;
        }
        for phase in &self.phases {
            match *phase {
                Phase::Grow { root, in_s, view } => {
                    let open = match view {
                        View::First => r.c1,
                        View::Second => r.c2,
                    } & r.assigned;
                    let mut known = vec![false; g.vertices.len()];
                    known[g.terminals[root]] = true;
                    // Closure of the root over revealed open edges.
                    loop {
                        let mut grew = false;
                        for (i, e) in g.edges.iter().enumerate() {
                            if open >> i & 1 == 1 && known[e.u] != known[e.v] {
                                known[e.u] = true;
                                known[e.v] = true;
                                grew = true;
                            }
                        }
                        if !grew {
                            break;
                        }
                    }
                    let hit = g.edges.iter().enumerate().find(|(i, e)| unassigned >> i & 1 == 1 && (known[e.u] || known[e.v]));
                    if let Some((i, _)) = hit {
                        return Some((i, in_s));
                    }
                }
                Phase::Rest { in_s } => return Some((unassigned.trailing_zeros() as usize, in_s)),
            }
        }
        None
    }
}

/// Runs `sched` on the pair and returns the set S.
pub fn run_schedule(g: &Graph, sched: &dyn SwapSchedule, c1: Configuration, c2: Configuration) -> Result<u64> {
    let m = g.edges.len();
    let mut r = Revealed { assigned: 0, c1: 0, c2: 0 };
    let mut s = 0u64;
    while let Some((e, in_s)) = sched.next(g, &r) {
        if e >= m {
            return Err(Error::Schedule(format!("schedule {} chose edge {e} of {m}", sched.name())));
        }
        if r.assigned >> e & 1 == 1 {
            return Err(Error::Schedule(format!("schedule {} assigned edge {e} twice", sched.name())));
        }
        r.assigned |= 1 << e;
        r.c1 |= c1.bits & (1 << e);
        r.c2 |= c2.bits & (1 << e);
        if in_s {
            s |= 1 << e;
        }
    }
    if r.assigned != full_mask(m) {
        return Err(Error::Schedule(format!("schedule {} left edges unassigned", sched.name())));
    }
    Ok(s)
}

fn check_schedule(g: &Graph, sched: &dyn SwapSchedule) -> Result<()> {
    let _ = run_schedule(g, sched, Configuration::new(0, g.edges.len()), Configuration::new(0, g.edges.len()))?;
    Ok(())
}

fn phase_check(g: &Graph, s: &PhaseSchedule) -> Result<()> {
    match s.max_root() {
        Some(r) if r >= g.terminals.len() => Err(Error::TerminalCount(g.terminals.len())),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct TreeLemmaReport {
    pub schedule: String,
    pub pass: bool,
    pub max_deviation: Rational,
    pub pairs: u64,
    /// Joint law numerators of `(swap(c1,c2,S), swap(c2,c1,S))`, row-major
    /// over `(x, y)`, over `denominator`.
    pub law: Vec<BigUint>,
    pub denominator: BigUint,
    pub edges: usize,
}

impl TreeLemmaReport {
    pub fn to_json(&self, with_table: bool) -> Value {
        let mut v = json!({
            "schedule": self.schedule,
            "pass": self.pass,
            "max_deviation": rational::fmt(&self.max_deviation),
            "pairs": self.pairs,
        });
        if with_table {
            let n = 1usize << self.edges;
            let den = BigInt::from(self.denominator.clone());
            let rows: Vec<Value> = (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| !self.law[x * n + y].is_zero())
                .map(|(x, y)| {
                    let p = Rational::new(BigInt::from(self.law[x * n + y].clone()), den.clone());
                    json!({"x": format!("{x:0w$b}", w = self.edges), "y": format!("{y:0w$b}", w = self.edges), "p": rational::fmt(&p)})
                })
                .collect();
            v["table"] = Value::Array(rows);
        }
        v
    }
}

fn weight_table<W: Weight>(w: &Weights, m: usize) -> Vec<W> {
    (0..1u64 << m).map(|mask| W::from_big(&w.weight(mask))).collect()
}

/// Checks that the law of `(swap(c1,c2,S), swap(c2,c1,S))` is `mu x mu` exactly.
pub fn verify_tree_lemma(g: &Graph, sched: &dyn SwapSchedule, workers: usize) -> Result<TreeLemmaReport> {
    check_edges(g, PAIR_CAP)?;
    check_schedule(g, sched)?;
    let m = g.edges.len();
    let n = 1u64 << m;
    // Target cell for every pair, computed in parallel by c1 range.
    let targets: Vec<u32> = par::map_reduce(
        workers,
        par::split(n, 64),
        |range| {
            let mut out = Vec::with_capacity(((range.end - range.start) * n) as usize);
            for c1 in range {
                for c2 in 0..n {
                    let (a, b) = (Configuration::new(c1, m), Configuration::new(c2, m));
                    let s = run_schedule(g, sched, a, b).expect("schedule checked");
                    let x = swap_bits(c1, c2, s);
                    let y = swap_bits(c2, c1, s);
                    out.push((x << m | y) as u32);
                }
            }
            Ok::<_, Error>(out)
        },
        |a, b| {
            let mut a = a?;
            a.extend(b?);
            Ok(a)
        },
    )
    .unwrap_or_else(|| Ok(Vec::new()))?;
    let weights = Weights::new(&g.edges.iter().map(|e| e.p.clone()).collect::<Vec<_>>());
    let table = weight_table::<BigUint>(&weights, m);
    let mut law = vec![BigUint::zero(); (n * n) as usize];
    for (pair, &t) in targets.iter().enumerate() {
        let (c1, c2) = (pair as u64 / n, pair as u64 % n);
        law[t as usize] += &table[c1 as usize] * &table[c2 as usize];
    }
    let mut max_dev = BigUint::zero();
    for x in 0..n as usize {
        for y in 0..n as usize {
            let expect = &table[x] * &table[y];
            let got = &law[x * n as usize + y];
            let d = if *got >= expect { got - &expect } else { &expect - got };
            if d > max_dev {
                max_dev = d;
            }
        }
    }
    let denominator = &weights.denominator * &weights.denominator;
    let max_deviation = Rational::new(BigInt::from(max_dev), BigInt::from(denominator.clone()));
    Ok(TreeLemmaReport {
        schedule: sched.name().to_string(),
        pass: max_deviation.is_zero(),
        max_deviation,
        pairs: n * n,
        law,
        denominator,
        edges: m,
    })
}

/// [`verify_tree_lemma`] for a built-in schedule name.
pub fn verify_builtin(g: &Graph, name: &str, workers: usize) -> Result<TreeLemmaReport> {
    let s = PhaseSchedule::builtin(name)?;
    phase_check(g, &s)?;
    if name.starts_with('s') && name.len() == 2 {
        require_three(g)?;
    }
    verify_tree_lemma(g, &s, workers)
}

fn in_ab(p: usize) -> bool {
    p == ABC || p == AB_C
}

fn in_ac(p: usize) -> bool {
    p == ABC || p == AC_B
}

/// Which implication failed and on which pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub fact: &'static str,
    pub c1: u64,
    pub c2: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyObservationReport {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
    pub pairs: u64,
}

impl KeyObservationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass,
            "pairs": self.pairs,
            "counterexample": self.counterexample.as_ref().map(|c| json!({"fact": c.fact, "c1": c.c1, "c2": c.c2})),
        })
    }
}

/// Per-`c1` data shared by all `c2`.
pub(crate) struct FirstRun {
    pub part: usize,
    pub s: STriple,
}

pub(crate) fn first_run(c: &Compiled, g: &Graph, c1: u64, dsu: &mut Dsu) -> FirstRun {
    c.connect(c1, dsu);
    let part = c.classify_connected(c1, dsu);
    let s = s_sets_connected(g, dsu);
    FirstRun { part, s }
}

/// Partitions of the swaps of `c1, c2` over `S_1, S_2, S_3` and complements.
pub(crate) fn swap_parts(c: &Compiled, f: &FirstRun, c1: u64, c2: u64, dsu: &mut Dsu) -> [usize; 6] {
    let mut out = [0; 6];
    for i in 0..3 {
        out[2 * i] = c.classify(swap_bits(c1, c2, f.s.s[i]), dsu);
        out[2 * i + 1] = c.classify(swap_bits(c1, c2, !f.s.s[i]), dsu);
    }
    out
}

/// Checks, for every pair, the key implication, the two separation facts for
/// `S_1`, `S_2` and the cut property of the complement of `S_3`.
pub fn verify_key_observation(g: &Graph, workers: usize) -> Result<KeyObservationReport> {
    require_three(g)?;
    check_edges(g, PAIR_CAP)?;
    let c = Compiled::bond(g)?;
    let n = 1u64 << g.edges.len();
    let found = par::map_reduce(
        workers,
        par::split(n, 64),
        |range| {
            let mut dsu = c.new_dsu();
            for c1 in range {
                let f = first_run(&c, g, c1, &mut dsu);
                for c2 in 0..n {
                    let p = swap_parts(&c, &f, c1, c2, &mut dsu);
                    let fail = |fact| Some(Counterexample { fact, c1, c2 });
                    if f.part == A_B_C {
                        if (in_ab(p[4]) || in_ac(p[4])) && !(in_ab(p[0]) || in_ac(p[2])) {
                            return fail("key");
                        }
                        if in_ac(p[0]) {
                            return fail("s1_separates_ac");
                        }
                        if in_ab(p[2]) {
                            return fail("s2_separates_ab");
                        }
                    }
                    if (f.part == A_BC || f.part == A_B_C) && !(p[5] == A_BC || p[5] == A_B_C) {
                        return fail("s3_cut");
                    }
                }
            }
            None
        },
        |a, b| a.or(b),
    )
    .flatten();
    Ok(KeyObservationReport { pass: found.is_none(), counterexample: found, pairs: n * n })
}

/// Exact sum of `P(c1) P(c2)` over pairs, one total per flag bit.
fn pair_flag_sums<W, F>(g: &Graph, workers: usize, nflags: usize, table: &[W], flags: &F) -> Result<Vec<BigUint>>
where
    W: Weight,
    F: Fn(&Compiled, &FirstRun, u64, u64, &mut Dsu) -> u32 + Sync,
{
    let c = Compiled::bond(g)?;
    let n = 1u64 << g.edges.len();
    let sums = par::map_reduce(
        workers,
        par::split(n, 64),
        |range| {
            let mut acc = vec![W::zero(); nflags];
            let mut dsu = c.new_dsu();
            for c1 in range {
                let w1 = &table[c1 as usize];
                if w1.is_zero() {
                    continue;
                }
                let f = first_run(&c, g, c1, &mut dsu);
                for c2 in 0..n {
                    let w2 = &table[c2 as usize];
                    if w2.is_zero() {
                        continue;
                    }
                    let mut bits = flags(&c, &f, c1, c2, &mut dsu);
                    if bits == 0 {
                        continue;
                    }
                    let w = w1.times(w2);
                    while bits != 0 {
                        acc[bits.trailing_zeros() as usize] += &w;
                        bits &= bits - 1;
                    }
                }
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![W::zero(); nflags]);
    Ok(sums.into_iter().map(W::into_big).collect())
}

/// Exact probabilities, over independent `(c1, c2)`, of each flag bit.
pub(crate) fn pair_probabilities<F>(g: &Graph, workers: usize, nflags: usize, flags: F) -> Result<Vec<Rational>>
where
    F: Fn(&Compiled, &FirstRun, u64, u64, &mut Dsu) -> u32 + Sync,
{
    let m = g.edges.len();
    let weights = Weights::new(&g.edges.iter().map(|e| e.p.clone()).collect::<Vec<_>>());
    let sums = if weights.denominator.bits() * 2 <= 127 {
        pair_flag_sums(g, workers, nflags, &weight_table::<u128>(&weights, m), &flags)?
    } else {
        pair_flag_sums(g, workers, nflags, &weight_table::<BigUint>(&weights, m), &flags)?
    };
    let den = BigInt::from(&weights.denominator * &weights.denominator);
    Ok(sums.into_iter().map(|s| Rational::new(BigInt::from(s), den.clone())).collect())
}

#[derive(Debug, Clone)]
pub struct FinalReport {
    /// `P(C1 in a|b|c, swap over S_i in ab / ac / ab or ac)` for i = 1, 2, 3.
    pub joint: [Rational; 3],
    pub checks: Vec<Check>,
}

impl FinalReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass(),
            "joint": self.joint.iter().map(rational::fmt).collect::<Vec<_>>(),
            "joint_float": self.joint.iter().map(rational::to_f64).collect::<Vec<_>>(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

/// The three joint probabilities behind the final three-terminal inequality,
/// each checked against its single-configuration bound, and the assembled
/// inequality itself.
pub fn final_inequality_report(g: &Graph, workers: usize) -> Result<FinalReport> {
    require_three(g)?;
    check_edges(g, PAIR_CAP)?;
    let probs = pair_probabilities(g, workers, 4, |c, f, c1, c2, dsu| {
        let mut bits = 0;
        if f.part == A_B_C {
            if in_ab(c.classify(swap_bits(c1, c2, f.s.s[0]), dsu)) {
                bits |= 1;
            }
            if in_ac(c.classify(swap_bits(c1, c2, f.s.s[1]), dsu)) {
                bits |= 2;
            }
            let p3 = c.classify(swap_bits(c1, c2, f.s.s[2]), dsu);
            if in_ab(p3) || in_ac(p3) {
                bits |= 4;
            }
        }
        if f.part == A_BC || f.part == A_B_C {
            let p3 = c.classify(swap_bits(c1, c2, f.s.s[2]), dsu);
            if in_ab(p3) || in_ac(p3) {
                bits |= 8;
            }
        }
        bits
    })?;
    let rho = crate::engine::bond_distribution(g, &crate::engine::EngineOptions::exact().workers(workers).with_cap(PAIR_CAP))?;
    let r = rho.probs();
    let [t, x, y, z, s] = [&r[ABC], &r[AB_C], &r[AC_B], &r[A_BC], &r[A_B_C]];
    let product = (z + s) * (t + x + y);
    let checks = vec![
        Check::new("s1_joint", probs[0].clone(), Relation::Le, x.clone()),
        Check::new("s2_joint", probs[1].clone(), Relation::Le, y.clone()),
        Check::new("s3_union", probs[2].clone(), Relation::Le, &probs[0] + &probs[1]),
        Check::new("s3_cut", probs[3].clone(), Relation::Eq, product.clone()),
        Check::new("s3_joint", probs[2].clone(), Relation::Ge, &product - z),
        inequalities::eq_final(r),
    ];
    Ok(FinalReport { joint: [probs[0].clone(), probs[1].clone(), probs[2].clone()], checks })
}

#[cfg(test)]
mod tests;

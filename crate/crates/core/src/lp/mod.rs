//! Feasibility of a three-terminal distribution `rho` against the feasible
//! tuples: is there a law on feasible 8-tuples whose pairs of coordinates
//! `(1,2), (3,4), (5,6), (7,8)` are each distributed as `rho x rho`?
//!
//! Infeasibility comes with a Farkas certificate `y` (one entry per
//! constraint) with `y . A_j <= 0` for every column and `y . b > 0`. The
//! column condition does not involve `rho`, so a certificate proves
//! infeasibility at every `rho` where the quadratic form `y . b(rho)` is
//! positive.

mod scan;
mod simplex;

pub use scan::{
    scan, slice_threshold, symmetric_rho, symmetric_slice, verify_stored, Covered, ScanCheck, ScanOptions, ScanReport, SlicePoint, StoredScan, Threshold,
};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::dist::PartitionDistribution;
use crate::error::{Error, Result};
use crate::inequalities;
use crate::partition::j3;
use crate::rational::{self, Rational};
use crate::tuples::{FeasibleSet, TupleIndex, COORDS};

pub const GROUPS: usize = 4;
pub const ROWS: usize = GROUPS * 25;
const _: () = assert!(COORDS == 2 * GROUPS);

/// Pair projections of one feasible tuple; entry `g` is the pair in group `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Profile(pub [(u8, u8); GROUPS]);

impl Profile {
    pub fn of(t: &TupleIndex) -> Self {
        Self(std::array::from_fn(|g| (t.0[2 * g], t.0[2 * g + 1])))
    }

    /// Constraint rows this column touches, one per group.
    pub fn rows(&self) -> [usize; GROUPS] {
        std::array::from_fn(|g| row(g, self.0[g].0 as usize, self.0[g].1 as usize))
    }
}

pub fn row(group: usize, x: usize, y: usize) -> usize {
    group * 25 + 5 * x + y
}

/// Distinct pair-projection profiles of the feasible tuples, sorted.
pub fn aggregate_profiles(f: &FeasibleSet) -> Result<Vec<Profile>> {
    let mut out: Vec<Profile> = f.iter().map(|i| Profile::of(&TupleIndex::unpack(i))).collect();
    if out.is_empty() {
        return Err(Error::InvalidModel("feasible set is empty".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MarginalLP {
    pub profiles: Vec<Profile>,
    pub rho: [Rational; 5],
    /// Right-hand sides `rho(x) rho(y)`, row-indexed by [`row`].
    pub rhs: Vec<Rational>,
}

fn rho5(rho: &PartitionDistribution) -> Result<[Rational; 5]> {
    if rho.k() != 3 {
        return Err(Error::TerminalCount(rho.k()));
    }
    Ok(std::array::from_fn(|i| rho.get(i).clone()))
}

pub(crate) fn rhs_of(rho: &[Rational; 5]) -> Vec<Rational> {
    let mut rhs = vec![Rational::zero(); ROWS];
    for g in 0..GROUPS {
        for x in 0..5 {
            for y in 0..5 {
                rhs[row(g, x, y)] = &rho[x] * &rho[y];
            }
        }
    }
    rhs
}

impl MarginalLP {
    pub fn new(profiles: Vec<Profile>, rho: &PartitionDistribution) -> Result<Self> {
        let rho = rho5(rho)?;
        let rhs = rhs_of(&rho);
        Ok(Self { profiles, rho, rhs })
    }

    pub fn from_feasible(f: &FeasibleSet, rho: &PartitionDistribution) -> Result<Self> {
        Self::new(aggregate_profiles(f)?, rho)
    }

    /// Same columns, another `rho`.
    pub fn with_rho(&self, rho: &[Rational; 5]) -> Self {
        Self { profiles: self.profiles.clone(), rho: rho.clone(), rhs: rhs_of(rho) }
    }

    pub(crate) fn columns(&self) -> Vec<Vec<usize>> {
        self.profiles.iter().map(|p| p.rows().to_vec()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub dual: Vec<Rational>,
}

impl Certificate {
    /// `y . b(rho)` for any `rho`.
    pub fn value_at(&self, rho: &[Rational; 5]) -> Rational {
        let q = self.quadratic_form();
        let mut v = Rational::zero();
        for x in 0..5 {
            for y in 0..5 {
                v += &q[x][y] * &rho[x] * &rho[y];
            }
        }
        v
    }

    /// `Q[x][y] = sum over groups of y_(g,x,y)`, so `y . b(rho) = rho^T Q rho`.
    pub fn quadratic_form(&self) -> [[Rational; 5]; 5] {
        std::array::from_fn(|x| std::array::from_fn(|y| (0..GROUPS).map(|g| &self.dual[row(g, x, y)]).sum()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": 1,
            "kind": "farkas",
            "rows": ROWS,
            "dual": self.dual.iter().map(rational::fmt).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .get("dual")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidModel("certificate needs a \"dual\" array".into()))?;
        let dual = arr
            .iter()
            .map(|x| x.as_str().ok_or_else(|| Error::InvalidModel("dual entries must be strings".into())).and_then(rational::parse))
            .collect::<Result<Vec<_>>>()?;
        if dual.len() != ROWS {
            return Err(Error::Dimension { expected: ROWS, got: dual.len() });
        }
        Ok(Self { dual })
    }
}

/// Independent check of the Farkas conditions for `lp`.
pub fn verify_certificate(lp: &MarginalLP, c: &Certificate) -> bool {
    if c.dual.len() != ROWS {
        return false;
    }
    let columns_ok = lp.profiles.iter().all(|p| {
        let mut s = Rational::zero();
        for g in 0..GROUPS {
            let (x, y) = p.0[g];
            s += &c.dual[g * 25 + x as usize * 5 + y as usize];
        }
        !s.is_positive()
    });
    let mut yb = Rational::zero();
    for (yi, bi) in c.dual.iter().zip(&lp.rhs) {
        yb += yi * bi;
    }
    columns_ok && yb.is_positive()
}

#[derive(Debug, Clone)]
pub enum Outcome {
    /// Weights on profiles (indices into `lp.profiles`); all others are zero.
    Feasible { witness: Vec<(usize, Rational)> },
    Infeasible { certificate: Certificate },
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible { .. })
    }

    pub fn to_json(&self, lp: &MarginalLP) -> Value {
        match self {
            Outcome::Feasible { witness } => json!({
                "feasible": true,
                "witness": witness.iter().map(|(j, q)| json!({
                    "tuple": lp.profiles[*j].0.iter().flat_map(|&(x, y)| [j3::NAMES[x as usize], j3::NAMES[y as usize]]).collect::<Vec<_>>(),
                    "q": rational::fmt(q),
                })).collect::<Vec<_>>(),
            }),
            Outcome::Infeasible { certificate } => json!({"feasible": false, "certificate": certificate.to_json()}),
        }
    }
}

/// Checks a witness exactly: non-negative weights meeting every equality.
pub fn verify_witness(lp: &MarginalLP, witness: &[(usize, Rational)]) -> bool {
    let mut lhs = vec![Rational::zero(); ROWS];
    for (j, q) in witness {
        if q.is_negative() || *j >= lp.profiles.len() {
            return false;
        }
        for r in lp.profiles[*j].rows() {
            lhs[r] += q;
        }
    }
    lhs == lp.rhs
}

pub fn solve(lp: &MarginalLP) -> Outcome {
    // Integer right-hand sides: certificates and supports are scale-free.
    let den = rational::common_denominator(lp.rho.iter());
    let scale = Rational::from_integer(&den * &den);
    let b: Vec<Rational> = lp.rhs.iter().map(|x| x * &scale).collect();
    match simplex::phase1(ROWS, &lp.columns(), &b) {
        simplex::Phase1::Feasible(w) => {
            let inv = Rational::from_integer(BigInt::from(1)) / &scale;
            Outcome::Feasible { witness: w.into_iter().map(|(j, q)| (j, q * &inv)).collect() }
        }
        simplex::Phase1::Infeasible(y) => Outcome::Infeasible { certificate: Certificate { dual: normalize(y) } },
    }
}

/// Scales a dual vector to coprime integers.
fn normalize(y: Vec<Rational>) -> Vec<Rational> {
    let den = rational::common_denominator(y.iter());
    let ints: Vec<BigInt> = y.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
    if g.is_zero() {
        return y;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

#[derive(Debug, Clone)]
pub struct DerivedSample {
    pub rho: [Rational; 5],
    pub from_graph: bool,
    pub computer: bool,
    pub e2: bool,
    pub lp_feasible: bool,
    /// Whether the LP answer agrees with what the inequalities demand.
    pub consistent: bool,
}

#[derive(Debug, Clone)]
pub struct DerivedReport {
    pub samples: Vec<DerivedSample>,
}

impl DerivedReport {
    pub fn pass(&self) -> bool {
        self.samples.iter().all(|s| s.consistent)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass(),
            "samples": self.samples.iter().map(|s| json!({
                "rho": s.rho.iter().map(rational::fmt).collect::<Vec<_>>(),
                "from_graph": s.from_graph,
                "computer": s.computer,
                "e2": s.e2,
                "lp_feasible": s.lp_feasible,
                "consistent": s.consistent,
            })).collect::<Vec<_>>(),
        })
    }
}

/// A sample violating either derived inequality must be LP-infeasible; a
/// sample from a real graph must be LP-feasible.
pub fn check_derived_inequalities(f: &FeasibleSet, samples: &[(PartitionDistribution, bool)]) -> Result<DerivedReport> {
    let profiles = aggregate_profiles(f)?;
    let mut out = Vec::new();
    for (rho, from_graph) in samples {
        let lp = MarginalLP::new(profiles.clone(), rho)?;
        let r = rho.probs();
        let computer = inequalities::eq_computer(r).satisfied;
        let e2 = inequalities::e2(r).satisfied;
        let outcome = solve(&lp);
        let lp_feasible = outcome.is_feasible();
        let proven = match &outcome {
            Outcome::Feasible { witness } => verify_witness(&lp, witness),
            Outcome::Infeasible { certificate } => verify_certificate(&lp, certificate),
        };
        let consistent = proven && (computer && e2 || !lp_feasible) && (!from_graph || lp_feasible);
        out.push(DerivedSample { rho: lp.rho.clone(), from_graph: *from_graph, computer, e2, lp_feasible, consistent });
    }
    Ok(DerivedReport { samples: out })
}

//! Tail probabilities of the largest number of marked vertices sharing a
//! cluster, and the corresponding cluster-size inequalities.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{exact, Compiled, EngineOptions};
use crate::error::{Error, Result};
use crate::inequalities::{Check, Relation};
use crate::model::Graph;
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
pub struct KmaxQuery {
    /// The marked vertex set (indices into the graph's vertices).
    pub set: Vec<usize>,
    /// Threshold, at least 1.
    pub lambda: Rational,
    pub u: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmaxTail {
    /// `P(|K_max(set)| >= lambda)`.
    pub kmax: Rational,
    /// `P(|K_u ∩ set| >= lambda)` when `u` was given.
    pub ku: Option<Rational>,
}

/// Joint law of `(|K_max(set)|, |K_u ∩ set|)`; entry `[m][j]`.
#[derive(Debug, Clone)]
pub struct KmaxLaw {
    pub joint: Vec<Vec<Rational>>,
}

impl KmaxLaw {
    fn size(&self) -> usize {
        self.joint.len() - 1
    }

    pub fn kmax_at_least(&self, threshold: usize) -> Rational {
        self.joint.iter().skip(threshold).flatten().sum()
    }

    pub fn ku_at_least(&self, threshold: usize) -> Rational {
        self.joint.iter().flat_map(|row| row.iter().skip(threshold)).sum()
    }
}

fn validate(g: &Graph, set: &[usize], u: Option<usize>, opts: &EngineOptions) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidModel("marked set must be non-empty".into()));
    }
    if set.iter().chain(u.iter()).any(|&v| v >= g.vertices.len()) {
        return Err(Error::InvalidModel("marked vertex out of range".into()));
    }
    let cap = opts.cap.min(63);
    if g.edges.len() > cap {
        return Err(Error::CapExceeded { what: "edge count", got: g.edges.len(), cap });
    }
    Ok(())
}

pub fn kmax_law(g: &Graph, set: &[usize], u: Option<usize>, opts: &EngineOptions) -> Result<KmaxLaw> {
    validate(g, set, u, opts)?;
    let c = Compiled::bond(g)?;
    let n = set.len();
    let mut marked = vec![0u32; g.vertices.len()];
    for &v in set {
        marked[v] += 1;
    }
    let width = n + 1;
    let (sums, den) = exact::accumulate_by(&c, opts.workers, width * width, |mask, dsu| {
        c.connect(mask, dsu);
        let mut per_root = vec![0usize; marked.len()];
        for &v in set {
            per_root[dsu.find(v)] += 1;
        }
        let m = per_root.iter().copied().max().unwrap_or(0);
        let j = u.map_or(0, |u| per_root[dsu.find(u)]);
        m * width + j
    });
    let den = BigInt::from(den);
    let joint = (0..width)
        .map(|m| (0..width).map(|j| Rational::new(BigInt::from(sums[m * width + j].clone()), den.clone())).collect())
        .collect();
    Ok(KmaxLaw { joint })
}

fn ceil_threshold(lambda: &Rational) -> Result<usize> {
    if *lambda < Rational::one() {
        return Err(Error::InvalidModel(format!("lambda must be >= 1, got {}", rational::fmt(lambda))));
    }
    let (q, r) = lambda.numer().div_rem(lambda.denom());
    let c = if r.is_zero() { q } else { q + 1 };
    Ok(c.try_into().unwrap_or(usize::MAX))
}

pub fn kmax_tail(g: &Graph, q: &KmaxQuery, opts: &EngineOptions) -> Result<KmaxTail> {
    let threshold = ceil_threshold(&q.lambda)?;
    let law = kmax_law(g, &q.set, q.u, opts)?;
    Ok(KmaxTail { kmax: law.kmax_at_least(threshold), ku: q.u.map(|_| law.ku_at_least(threshold)) })
}

/// Both cluster-size inequalities at scale `3^k` (k >= 1):
/// `P(Kmax >= 3^k l) <= P(Kmax >= l)^(3^(k-1)+1)` and
/// `P(|K_u ∩ set| >= 3^k l) <= P(Kmax >= l)^(3^(k-1)) P(|K_u ∩ set| >= l)`.
pub fn hutchcroft_checks(g: &Graph, q: &KmaxQuery, k: u32, opts: &EngineOptions) -> Result<Vec<Check>> {
    if !(1..=4).contains(&k) {
        return Err(Error::Unsupported(format!("scale exponent k must be in 1..=4, got {k}")));
    }
    let law = kmax_law(g, &q.set, q.u, opts)?;
    let lo = ceil_threshold(&q.lambda)?;
    let scaled = &q.lambda * Rational::from_integer(BigInt::from(3u32.pow(k)));
    let hi = ceil_threshold(&scaled)?;
    let base = law.kmax_at_least(lo);
    let e = 3usize.pow(k - 1);
    let mut out = vec![Check::new("hc", law.kmax_at_least(hi), Relation::Le, num_traits::pow(base.clone(), e + 1))];
    if q.u.is_some() {
        out.push(Check::new("hc_plus", law.ku_at_least(hi), Relation::Le, num_traits::pow(base, e) * law.ku_at_least(lo)));
    }
    debug_assert!(law.size() == q.set.len());
    Ok(out)
}

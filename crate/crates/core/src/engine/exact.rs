//! Exhaustive enumeration over all `2^m` configurations.
//!
//! With `p_i = n_i / d_i`, the weight of a configuration is an integer
//! numerator over the fixed denominator `D = prod d_i`, so partition masses
//! are accumulated as exact integers and divided once at the end. When `D`
//! fits in 127 bits the accumulators are `u128`, otherwise `BigUint`.

use std::ops::AddAssign;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use super::Compiled;
use crate::dsu::Dsu;
use crate::dist::PartitionDistribution;
use crate::par;
use crate::rational::{weight_parts, Rational};

pub(crate) trait Weight: Clone + Send + Sync + Zero + for<'a> AddAssign<&'a Self> {
    fn times(&self, other: &Self) -> Self;
    fn from_big(b: &BigUint) -> Self;
    fn into_big(self) -> BigUint;
}

impl Weight for u128 {
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn from_big(b: &BigUint) -> Self {
        b.to_u128().expect("fits by construction")
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Weight for BigUint {
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn from_big(b: &BigUint) -> Self {
        b.clone()
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Integer weight tables for one half of the element set.
pub(crate) struct HalfTable<W> {
    pub shift: usize,
    pub low: Vec<W>,
    pub high: Vec<W>,
}

/// Per-configuration integer weights over a common denominator.
pub(crate) struct Weights {
    pub denominator: BigUint,
    open: Vec<BigUint>,
    closed: Vec<BigUint>,
}

impl Weights {
    pub fn new(probs: &[Rational]) -> Self {
        let mut denominator = BigUint::one();
        let mut open = Vec::with_capacity(probs.len());
        let mut closed = Vec::with_capacity(probs.len());
        for p in probs {
            let (n, c, d) = weight_parts(p);
            denominator *= &d;
            open.push(n);
            closed.push(c);
        }
        Self { denominator, open, closed }
    }

    pub fn fits_u128(&self) -> bool {
        self.denominator.bits() <= 127
    }

    fn product<W: Weight>(&self, range: std::ops::Range<usize>, mask: u64) -> W {
        let mut acc = W::from_big(&BigUint::one());
        for (j, i) in range.enumerate() {
            let f = if mask >> j & 1 == 1 { &self.open[i] } else { &self.closed[i] };
            acc = acc.times(&W::from_big(f));
        }
        acc
    }

    pub fn tables<W: Weight>(&self) -> HalfTable<W> {
        let m = self.open.len();
        let shift = m / 2;
        let low = (0..1u64 << shift).map(|l| self.product(0..shift, l)).collect();
        let high = (0..1u64 << (m - shift)).map(|h| self.product(shift..m, h)).collect();
        HalfTable { shift, low, high }
    }

    /// Exact weight numerator of one configuration.
    pub fn weight(&self, mask: u64) -> BigUint {
        self.product::<BigUint>(0..self.open.len(), mask)
    }
}

/// Number of work chunks; fixed so results never depend on the worker count.
const CHUNKS: u64 = 256;

fn accumulate<W, F>(c: &Compiled, weights: &Weights, workers: usize, nparts: usize, key: &F) -> Vec<BigUint>
where
    W: Weight,
    F: Fn(u64, &mut Dsu) -> usize + Sync,
{
    let t = weights.tables::<W>();
    let high_count = t.high.len() as u64;
    let sums = par::map_reduce(
        workers,
        par::split(high_count, CHUNKS),
        |range| {
            let mut acc = vec![W::zero(); nparts];
            let mut dsu = c.new_dsu();
            for h in range {
                let wh = &t.high[h as usize];
                if wh.is_zero() {
                    continue;
                }
                for (l, wl) in t.low.iter().enumerate() {
                    if wl.is_zero() {
                        continue;
                    }
                    let mask = (h << t.shift) | l as u64;
                    let idx = key(mask, &mut dsu);
                    acc[idx] += &wl.times(wh);
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
    .unwrap_or_else(|| vec![W::zero(); nparts]);
    sums.into_iter().map(W::into_big).collect()
}

/// Total weight numerator per key, and the common denominator.
pub(crate) fn accumulate_by<F>(c: &Compiled, workers: usize, nkeys: usize, key: F) -> (Vec<BigUint>, BigUint)
where
    F: Fn(u64, &mut Dsu) -> usize + Sync,
{
    let weights = Weights::new(c.probs());
    let sums = if weights.fits_u128() {
        accumulate::<u128, F>(c, &weights, workers, nkeys, &key)
    } else {
        accumulate::<BigUint, F>(c, &weights, workers, nkeys, &key)
    };
    (sums, weights.denominator)
}

pub(crate) fn distribution(c: &Compiled, workers: usize) -> PartitionDistribution {
    let (sums, den) = accumulate_by(c, workers, c.parts().len(), |mask, dsu| c.classify(mask, dsu));
    let den = BigInt::from(den);
    let probs = sums.into_iter().map(|s| Rational::new(BigInt::from(s), den.clone())).collect();
    PartitionDistribution::from_parts_unchecked(c.terminal_names().to_vec(), probs)
}

pub(crate) fn distribution_f64(c: &Compiled, probs: &[f64]) -> Vec<f64> {
    let m = c.element_count();
    let mut out = vec![0.0; c.parts().len()];
    let mut dsu = c.new_dsu();
    let shift = m / 2;
    let table = |range: std::ops::Range<usize>| -> Vec<f64> {
        (0..1u64 << range.len())
            .map(|mask| range.clone().enumerate().map(|(j, i)| if mask >> j & 1 == 1 { probs[i] } else { 1.0 - probs[i] }).product())
            .collect()
    };
    let low = table(0..shift);
    let high = table(shift..m);
    for (h, wh) in high.iter().enumerate() {
        if *wh == 0.0 {
            continue;
        }
        for (l, wl) in low.iter().enumerate() {
            if *wl == 0.0 {
                continue;
            }
            let mask = ((h as u64) << shift) | l as u64;
            out[c.classify(mask, &mut dsu)] += wl * wh;
        }
    }
    out
}

//! Seeded Monte-Carlo sampling.
//!
//! Sample `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so each sample
//! is a pure function of its index and the estimate is identical for any
//! worker count.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Compiled, EngineOptions};
use crate::dist::PartitionDistribution;
use crate::error::Result;
use crate::par;
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
pub struct McEstimate {
    /// Empirical distribution `counts / samples`.
    pub dist: PartitionDistribution,
    pub counts: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
}

pub(crate) fn sample_config(seed: u64, index: u64, probs: &[f64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut mask = 0u64;
    for (i, &p) in probs.iter().enumerate() {
        if rng.gen::<f64>() < p {
            mask |= 1 << i;
        }
    }
    mask
}

pub(crate) fn estimate(c: &Compiled, opts: &EngineOptions) -> Result<McEstimate> {
    let probs: Vec<f64> = c.probs().iter().map(rational::to_f64).collect();
    let nparts = c.parts().len();
    let counts = par::map_reduce(
        opts.workers,
        par::split(opts.samples, 64),
        |range| {
            let mut acc = vec![0u64; nparts];
            let mut dsu = c.new_dsu();
            for i in range {
                let mask = sample_config(opts.seed, i, &probs);
                acc[c.classify(mask, &mut dsu)] += 1;
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
    .unwrap_or_else(|| vec![0; nparts]);
    let n = BigInt::from(opts.samples);
    let dist = PartitionDistribution::from_parts_unchecked(
        c.terminal_names().to_vec(),
        counts.iter().map(|&k| Rational::new(BigInt::from(k), n.clone())).collect(),
    );
    Ok(McEstimate { dist, counts, samples: opts.samples, seed: opts.seed })
}

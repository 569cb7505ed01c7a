//! Partition distributions for bond, site and full-hyperedge percolation,
//! by exhaustive enumeration or seeded Monte-Carlo sampling.

mod compiled;
pub(crate) mod exact;
mod kmax;
mod mc;
mod preprocess;

pub use compiled::Compiled;
pub use kmax::{hutchcroft_checks, kmax_law, kmax_tail, KmaxQuery, KmaxTail};
pub use mc::McEstimate;
pub use preprocess::{preprocess, Preprocessed};

use serde::Serialize;

use crate::dist::PartitionDistribution;
use crate::error::{Error, Result};
use crate::event::{self, EventSet};
use crate::inequalities::{self, Check};
use crate::model::{Graph, HyperModel, Model, SiteModel};
use crate::rational::{self, Rational};

pub const DEFAULT_CAP: usize = 24;
pub const CAP_ENV: &str = "PERCLAB_MAX_EDGES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngineOptions {
    pub mode: Mode,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Largest number of random elements enumerated in exact mode.
    pub cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { mode: Mode::Exact, samples: 1_000_000, seed: 0x5eed, workers: 1, cap: DEFAULT_CAP }
    }
}

impl EngineOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn workers(mut self, n: usize) -> Self {
        self.workers = n.max(1);
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self { mode: Mode::MonteCarlo, samples, seed, ..Self::default() }
    }

    /// Default options with the cap taken from `PERCLAB_MAX_EDGES` when set.
    pub fn from_env() -> Result<Self> {
        let mut o = Self::default();
        if let Ok(v) = std::env::var(CAP_ENV) {
            o.cap = v.trim().parse().map_err(|_| Error::Options(format!("{CAP_ENV}={v:?} is not an integer")))?;
        }
        Ok(o)
    }

    fn check(&self, elements: usize) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Options("workerCount must be positive".into()));
        }
        match self.mode {
            Mode::Exact if elements > self.cap.min(63) => {
                Err(Error::CapExceeded { what: "random element count", got: elements, cap: self.cap.min(63) })
            }
            Mode::MonteCarlo if self.samples == 0 => Err(Error::Options("Monte-Carlo mode needs at least one sample".into())),
            Mode::MonteCarlo if elements > 64 => Err(Error::CapExceeded { what: "random element count", got: elements, cap: 64 }),
            _ => Ok(()),
        }
    }
}

fn run(c: &Compiled, opts: &EngineOptions) -> Result<PartitionDistribution> {
    opts.check(c.element_count())?;
    match opts.mode {
        Mode::Exact => Ok(exact::distribution(c, opts.workers)),
        Mode::MonteCarlo => Ok(mc::estimate(c, opts)?.dist),
    }
}

pub fn bond_distribution(g: &Graph, opts: &EngineOptions) -> Result<PartitionDistribution> {
    run(&Compiled::bond(g)?, opts)
}

pub fn site_distribution(m: &SiteModel, opts: &EngineOptions) -> Result<PartitionDistribution> {
    run(&Compiled::site(m)?, opts)
}

pub fn hyper_distribution(h: &HyperModel, opts: &EngineOptions) -> Result<PartitionDistribution> {
    run(&Compiled::hyper(h)?, opts)
}

pub fn distribution(m: &Model, opts: &EngineOptions) -> Result<PartitionDistribution> {
    run(&Compiled::from_model(m)?, opts)
}

/// Monte-Carlo estimate with the raw per-partition sample counts.
pub fn monte_carlo(m: &Model, opts: &EngineOptions) -> Result<McEstimate> {
    let c = Compiled::from_model(m)?;
    let opts = EngineOptions { mode: Mode::MonteCarlo, ..opts.clone() };
    opts.check(c.element_count())?;
    mc::estimate(&c, &opts)
}

/// Float-mirror distribution for inner optimization loops.
pub fn bond_distribution_f64(g: &Graph, probs: &[f64]) -> Result<Vec<f64>> {
    let c = Compiled::bond(g)?;
    if c.element_count() > 30 {
        return Err(Error::CapExceeded { what: "edge count (float path)", got: c.element_count(), cap: 30 });
    }
    Ok(exact::distribution_f64(&c, probs))
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    pub k: usize,
    pub target: Rational,
    pub together: Rational,
    pub separate: Rational,
    /// `target - P(all together)`.
    pub margin_together: Rational,
    /// `1 - target - P(all separate)`.
    pub margin_separate: Rational,
    /// Smallest eps for which both `P(together) > p - eps` and
    /// `P(separate) > 1 - p - eps` could hold (the larger margin).
    pub gap: Rational,
    pub instance: Check,
}

impl DichotomyReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "target": rational::fmt(&self.target),
            "together": rational::fmt(&self.together),
            "separate": rational::fmt(&self.separate),
            "together_float": rational::to_f64(&self.together),
            "separate_float": rational::to_f64(&self.separate),
            "margin_together": rational::fmt(&self.margin_together),
            "margin_separate": rational::fmt(&self.margin_separate),
            "gap": rational::fmt(&self.gap),
            "instance": self.instance.to_json(),
        })
    }
}

/// Probabilities of "all terminals together" and "all apart" against a target `p`.
pub fn dichotomy_scan(g: &Graph, p: &Rational, opts: &EngineOptions) -> Result<DichotomyReport> {
    let k = g.terminals.len();
    if !(3..=4).contains(&k) {
        return Err(Error::Unsupported(format!("dichotomy scan supports 3 or 4 terminals, got {k}")));
    }
    let rho = bond_distribution(g, opts)?;
    let ps = rho.partition_set();
    let all: Vec<usize> = (0..k).collect();
    let together = crate::dist::event_probability(&rho, &event::together(&ps, &all))?;
    let last = ps.len() - 1;
    let separate = crate::dist::event_probability(&rho, &EventSet::from_indices(ps.len(), [last]))?;
    let margin_together = p - &together;
    let margin_separate = rational::one() - p - &separate;
    let gap = margin_together.clone().max(margin_separate.clone());
    let instance = if k == 4 {
        inequalities::four_terminal_pair_bound(&rho)?
    } else {
        inequalities::eq_final(rho.probs())
    };
    Ok(DichotomyReport { k, target: p.clone(), together, separate, margin_together, margin_separate, gap, instance })
}

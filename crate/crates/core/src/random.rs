//! Seeded random models for property checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Edge, Graph, HyperModel, Hyperedge, SiteModel};
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub terminals: usize,
    /// Extra non-terminal vertices, inclusive range.
    pub extra: (usize, usize),
    /// Element count, inclusive range.
    pub elements: (usize, usize),
    /// Probabilities are `k / den` with `den` drawn from `2..=max_den`.
    pub max_den: i64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { terminals: 3, extra: (0, 3), elements: (1, 8), max_den: 9 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(n: usize, terminals: usize) -> Vec<String> {
    (0..n)
        .map(|i| if i < terminals { ((b'a' + i as u8) as char).to_string() } else { format!("v{}", i - terminals) })
        .collect()
}

fn prob(rng: &mut impl Rng, max_den: i64) -> Rational {
    let d = rng.gen_range(2..=max_den.max(2));
    rational::ratio(rng.gen_range(0..=d), d)
}

pub fn graph(rng: &mut impl Rng, spec: &RandomSpec) -> Graph {
    let n = spec.terminals + rng.gen_range(spec.extra.0..=spec.extra.1);
    let m = rng.gen_range(spec.elements.0..=spec.elements.1);
    let edges = (0..m)
        .map(|_| {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            Edge { u, v, p: prob(rng, spec.max_den) }
        })
        .collect();
    Graph::new(names(n, spec.terminals), edges, (0..spec.terminals).collect()).expect("valid by construction")
}

pub fn site_model(rng: &mut impl Rng, spec: &RandomSpec) -> SiteModel {
    let g = graph(rng, &RandomSpec { elements: (0, spec.elements.1 * 2), ..spec.clone() });
    let n = g.vertices.len();
    let probs = (0..n).map(|_| prob(rng, spec.max_den)).collect();
    let edges = g.edges.iter().map(|e| (e.u, e.v)).collect();
    SiteModel::new(g.vertices, edges, probs, g.terminals).expect("valid by construction")
}

pub fn hyper_model(rng: &mut impl Rng, spec: &RandomSpec) -> HyperModel {
    let n = spec.terminals + rng.gen_range(spec.extra.0..=spec.extra.1);
    let m = rng.gen_range(spec.elements.0..=spec.elements.1);
    let hyperedges = (0..m)
        .map(|_| {
            let size = rng.gen_range(2..=n.min(4));
            let mut members: Vec<usize> = Vec::with_capacity(size);
            while members.len() < size {
                let v = rng.gen_range(0..n);
                if !members.contains(&v) {
                    members.push(v);
                }
            }
            Hyperedge { members, p: prob(rng, spec.max_den) }
        })
        .collect();
    HyperModel::new(names(n, spec.terminals), hyperedges, (0..spec.terminals).collect()).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_graph() {
        let s = RandomSpec::default();
        assert_eq!(graph(&mut rng(3), &s), graph(&mut rng(3), &s));
        let h = hyper_model(&mut rng(4), &s);
        assert!(h.hyperedges.iter().all(|e| e.members.len() >= 2));
    }
}

//! Simulations between bond, site and full-hyperedge percolation.
//!
//! Auxiliary vertices are named `e{i}` (per edge) and `h{i}` (per hyperedge).
//! If a name is already taken, primes are appended until it is free, so the
//! output of one transform can always be fed to another.

use std::collections::HashSet;

use num_traits::Signed;
use serde_json::{json, Value};

use crate::dist::PartitionDistribution;
use crate::error::{Error, Result};
use crate::model::{Graph, HyperModel, Hyperedge, SiteModel};
use crate::rational::{self, Rational};

/// Source terminal `i` is target vertex `targets[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalMap {
    pub source_names: Vec<String>,
    pub targets: Vec<usize>,
}

impl TerminalMap {
    fn new(source_names: Vec<String>, targets: Vec<usize>, target_vertices: usize) -> Self {
        debug_assert!(targets.iter().all(|&t| t < target_vertices));
        debug_assert_eq!(targets.iter().collect::<HashSet<_>>().len(), targets.len());
        Self { source_names, targets }
    }

    pub fn to_json(&self, target_vertices: &[String]) -> Value {
        let m: serde_json::Map<String, Value> = self
            .source_names
            .iter()
            .zip(&self.targets)
            .map(|(s, &t)| (s.clone(), Value::String(target_vertices[t].clone())))
            .collect();
        Value::Object(m)
    }
}

struct Namer {
    taken: HashSet<String>,
}

impl Namer {
    fn new(existing: &[String]) -> Self {
        Self { taken: existing.iter().cloned().collect() }
    }

    fn fresh(&mut self, base: String) -> String {
        let mut name = base;
        while self.taken.contains(&name) {
            name.push('\'');
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Subdivides each edge with a site open with the edge's probability.
pub fn bond_to_site(g: &Graph) -> (SiteModel, TerminalMap) {
    let mut namer = Namer::new(&g.vertices);
    let n = g.vertices.len();
    let mut vertices = g.vertices.clone();
    let mut probs = vec![rational::one(); n];
    let mut edges = Vec::with_capacity(2 * g.edges.len());
    for (i, e) in g.edges.iter().enumerate() {
        let m = vertices.len();
        vertices.push(namer.fresh(format!("e{i}")));
        probs.push(e.p.clone());
        edges.push((e.u, m));
        edges.push((m, e.v));
    }
    let map = TerminalMap::new(g.terminal_names(), g.terminals.clone(), vertices.len());
    let site = SiteModel { vertices, edges, probs, terminals: g.terminals.clone() };
    (site, map)
}

/// Replaces each hyperedge by a star around a site open with its probability.
pub fn hyper_to_site(h: &HyperModel) -> (SiteModel, TerminalMap) {
    let mut namer = Namer::new(&h.vertices);
    let n = h.vertices.len();
    let mut vertices = h.vertices.clone();
    let mut probs = vec![rational::one(); n];
    let mut edges = Vec::new();
    for (i, he) in h.hyperedges.iter().enumerate() {
        let m = vertices.len();
        vertices.push(namer.fresh(format!("h{i}")));
        probs.push(he.p.clone());
        edges.extend(he.members.iter().map(|&v| (v, m)));
    }
    let map = TerminalMap::new(h.terminal_names(), h.terminals.clone(), vertices.len());
    let site = SiteModel { vertices, edges, probs, terminals: h.terminals.clone() };
    (site, map)
}

/// Subdivides each edge and turns every site into a hyperedge joining it to
/// its adjacent subdivision vertices. Sites without edges would give a
/// one-member hyperedge and are dropped.
pub fn site_to_hyper(m: &SiteModel) -> (HyperModel, TerminalMap) {
    let mut namer = Namer::new(&m.vertices);
    let n = m.vertices.len();
    let mut vertices = m.vertices.clone();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(u, v)) in m.edges.iter().enumerate() {
        let a = vertices.len();
        vertices.push(namer.fresh(format!("e{i}")));
        incident[u].push(a);
        incident[v].push(a);
    }
    let hyperedges = (0..n)
        .filter(|&v| !incident[v].is_empty())
        .map(|v| {
            let mut members = vec![v];
            members.extend(&incident[v]);
            Hyperedge { members, p: m.probs[v].clone() }
        })
        .collect();
    let map = TerminalMap::new(m.terminal_names(), m.terminals.clone(), vertices.len());
    let hyper = HyperModel { vertices, hyperedges, terminals: m.terminals.clone() };
    (hyper, map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationCheck {
    pub equal: bool,
    /// Largest absolute entry-wise difference.
    pub max_residual: Rational,
}

impl SimulationCheck {
    pub fn to_json(&self) -> Value {
        json!({
            "equal": self.equal,
            "max_residual": rational::fmt(&self.max_residual),
            "max_residual_float": rational::to_f64(&self.max_residual),
        })
    }
}

/// Exact entry-wise comparison of two distributions over the same terminals
/// (target terminal `i` is the image of source terminal `i`).
pub fn verify_simulation(src: &PartitionDistribution, dst: &PartitionDistribution) -> Result<SimulationCheck> {
    if src.k() != dst.k() {
        return Err(Error::Dimension { expected: src.k(), got: dst.k() });
    }
    let max_residual = src
        .probs()
        .iter()
        .zip(dst.probs())
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(rational::zero);
    Ok(SimulationCheck { equal: max_residual == rational::zero(), max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{bond_distribution, hyper_distribution, site_distribution, EngineOptions};
    use crate::partition::j3;
    use crate::rational::ratio;

    fn abc() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    #[test]
    fn single_edge_becomes_path() {
        let g = Graph::from_names(&["a", "b"], &["a", "b"], &[("a", "b", ratio(2, 3))]).unwrap();
        let (s, map) = bond_to_site(&g);
        assert_eq!(s.vertices, vec!["a", "b", "e0"]);
        assert_eq!(s.probs, vec![rational::one(), rational::one(), ratio(2, 3)]);
        assert_eq!(s.edges, vec![(0, 2), (2, 1)]);
        assert_eq!(map.targets, vec![0, 1]);
        let e = EngineOptions::exact();
        let c = verify_simulation(&bond_distribution(&g, &e).unwrap(), &site_distribution(&s, &e).unwrap()).unwrap();
        assert!(c.equal);
    }

    #[test]
    fn empty_edge_set() {
        let g = Graph::new(abc(), vec![], vec![0, 1, 2]).unwrap();
        let (s, _) = bond_to_site(&g);
        assert_eq!(s.vertices.len(), 3);
        assert!(s.edges.is_empty());
    }

    #[test]
    fn triangle_round_trip() {
        let h = ratio(1, 2);
        let g = Graph::from_names(&["a", "b", "c"], &["a", "b", "c"], &[("a", "b", h.clone()), ("a", "c", h.clone()), ("b", "c", h)]).unwrap();
        let (s, _) = bond_to_site(&g);
        assert_eq!(s.vertices.len(), 6);
        let e = EngineOptions::exact();
        assert_eq!(bond_distribution(&g, &e).unwrap(), site_distribution(&s, &e).unwrap());
    }

    #[test]
    fn hyperedge_to_claw() {
        let h = HyperModel::new(abc(), vec![Hyperedge { members: vec![0, 1, 2], p: ratio(1, 3) }], vec![0, 1, 2]).unwrap();
        let (s, _) = hyper_to_site(&h);
        let rho = site_distribution(&s, &EngineOptions::exact()).unwrap();
        assert_eq!(rho.get(j3::ABC), &ratio(1, 3));
    }

    #[test]
    fn shared_vertex_hyperedges() {
        let h = HyperModel::new(
            vec!["a".into(), "b".into(), "c".into(), "x".into()],
            vec![Hyperedge { members: vec![0, 3], p: ratio(1, 3) }, Hyperedge { members: vec![3, 1, 2], p: ratio(3, 4) }],
            vec![0, 1, 2],
        )
        .unwrap();
        let (s, _) = hyper_to_site(&h);
        let e = EngineOptions::exact();
        assert_eq!(hyper_distribution(&h, &e).unwrap(), site_distribution(&s, &e).unwrap());
    }

    #[test]
    fn site_path_and_claw_to_hyper() {
        let e = EngineOptions::exact();
        let path = SiteModel::new(
            vec!["a".into(), "m".into(), "b".into()],
            vec![(0, 1), (1, 2)],
            vec![ratio(1, 2), ratio(2, 5), ratio(7, 8)],
            vec![0, 2],
        )
        .unwrap();
        let (h, _) = site_to_hyper(&path);
        assert_eq!(site_distribution(&path, &e).unwrap(), hyper_distribution(&h, &e).unwrap());

        let claw = SiteModel::new(
            vec!["a".into(), "b".into(), "c".into(), "o".into(), "z".into()],
            vec![(0, 3), (1, 3), (2, 3)],
            vec![rational::one(), rational::one(), rational::one(), ratio(3, 7), rational::one()],
            vec![0, 1, 2],
        )
        .unwrap();
        let (h, _) = site_to_hyper(&claw);
        // isolated z is dropped
        assert_eq!(h.hyperedges.len(), 4);
        let rho = hyper_distribution(&h, &e).unwrap();
        assert_eq!(rho.get(j3::ABC), &ratio(3, 7));
    }

    #[test]
    fn name_collisions_get_primes() {
        let g = Graph::from_names(&["a", "e0", "c"], &["a", "c"], &[("a", "e0", ratio(1, 2)), ("e0", "c", ratio(1, 2))]).unwrap();
        let (s, _) = bond_to_site(&g);
        assert_eq!(&s.vertices[3..], &["e0'", "e1"]);
        let (h, _) = site_to_hyper(&s);
        assert_eq!(h.vertices[5], "e0''");
    }

    #[test]
    fn perturbation_is_detected() {
        let g = Graph::from_names(&["a", "b"], &["a", "b"], &[("a", "b", ratio(1, 2))]).unwrap();
        let e = EngineOptions::exact();
        let a = bond_distribution(&g, &e).unwrap();
        let b = bond_distribution(&g.with_probs(&[ratio(1, 3)]), &e).unwrap();
        let c = verify_simulation(&a, &b).unwrap();
        assert!(!c.equal);
        assert_eq!(c.max_residual, ratio(1, 6));
        assert!(verify_simulation(&a, &a).unwrap().equal);
    }
}

//! Deletion of probability-0 edges and contraction of probability-1 edges.

use num_traits::{One, Zero};

use crate::dist::PartitionDistribution;
use crate::dsu::Dsu;
use crate::error::Result;
use crate::model::{Edge, Graph};
use crate::partition::PartitionSet;

#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Graph with no certain edges; its terminals are the distinct classes of
    /// the original terminals.
    pub graph: Graph,
    /// Original terminal `i` is now terminal `terminal_map[i]` of `graph`.
    pub terminal_map: Vec<usize>,
    /// Pairs of original terminal names merged by contraction.
    pub merged_terminals: Vec<(String, String)>,
    pub original_terminals: Vec<String>,
}

impl Preprocessed {
    /// Distribution over the original terminals from one over the reduced ones.
    pub fn lift(&self, reduced: &PartitionDistribution) -> Result<PartitionDistribution> {
        let src = PartitionSet::new(self.terminal_map.len())?;
        let dst = reduced.partition_set();
        let mut probs = vec![num_rational::BigRational::zero(); src.len()];
        for (j, p) in reduced.probs().iter().enumerate() {
            probs[src.pullback(&dst, j, &self.terminal_map)] += p;
        }
        PartitionDistribution::new(self.original_terminals.clone(), probs)
    }
}

pub fn preprocess(g: &Graph) -> Result<Preprocessed> {
    let n = g.vertices.len();
    let mut dsu = Dsu::new(n);
    for e in &g.edges {
        if e.p.is_one() {
            dsu.union(e.u, e.v);
        }
    }
    // Each class is named after its first terminal, or else its lowest vertex.
    let mut rep_of_class = vec![usize::MAX; n];
    for &t in &g.terminals {
        let r = dsu.find(t);
        if rep_of_class[r] == usize::MAX {
            rep_of_class[r] = t;
        }
    }
    for v in 0..n {
        let r = dsu.find(v);
        if rep_of_class[r] == usize::MAX {
            rep_of_class[r] = v;
        }
    }
    let mut new_index = vec![usize::MAX; n];
    let mut vertices = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if rep_of_class[r] == v {
            new_index[r] = vertices.len();
            vertices.push(g.vertices[v].clone());
        }
    }
    let map = |v: usize, dsu: &mut Dsu| new_index[dsu.find(v)];
    let edges: Vec<Edge> = g
        .edges
        .iter()
        .filter(|e| !e.p.is_zero() && !e.p.is_one())
        .filter_map(|e| {
            let (u, v) = (map(e.u, &mut dsu), map(e.v, &mut dsu));
            (u != v).then(|| Edge { u, v, p: e.p.clone() })
        })
        .collect();
    let mut terminals = Vec::new();
    let mut terminal_map = Vec::new();
    let mut merged_terminals = Vec::new();
    for (i, &t) in g.terminals.iter().enumerate() {
        let nt = map(t, &mut dsu);
        match terminals.iter().position(|&x| x == nt) {
            Some(j) => {
                terminal_map.push(j);
                let first = g.terminals[terminal_map[..i].iter().position(|&m| m == j).expect("seen")];
                merged_terminals.push((g.vertices[first].clone(), g.vertices[t].clone()));
            }
            None => {
                terminal_map.push(terminals.len());
                terminals.push(nt);
            }
        }
    }
    Ok(Preprocessed {
        graph: Graph::new(vertices, edges, terminals)?,
        terminal_map,
        merged_terminals,
        original_terminals: g.terminal_names(),
    })
}

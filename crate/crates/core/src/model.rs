//! Percolation models and their JSON form.
//!
//! ```json
//! {"vertices": ["a", "b", "c"], "terminals": ["a", "b", "c"],
//!  "edges": [{"u": "a", "v": "b", "p": "1/2"}]}
//! ```
//!
//! A site model carries `"sites": {"a": "1", "m": "1/2"}` and edges without
//! `p`; a hyper model carries `"hyperedges": [{"members": ["a","b","c"], "p": "1/3"}]`.

use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Bond percolation on a multigraph with per-edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub terminals: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub p: Rational,
}

/// Site percolation: every vertex open independently.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteModel {
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    pub probs: Vec<Rational>,
    pub terminals: Vec<usize>,
}

/// Full hyperedge percolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperModel {
    pub vertices: Vec<String>,
    pub hyperedges: Vec<Hyperedge>,
    pub terminals: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperedge {
    pub members: Vec<usize>,
    pub p: Rational,
}

/// Any of the three model kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Bond(Graph),
    Site(SiteModel),
    Hyper(HyperModel),
}

/// Open/closed statuses of a model's random elements, bit `i` for element `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub bits: u64,
    pub len: usize,
}

impl Configuration {
    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self { bits: bits & full_mask(len), len }
    }

    pub fn is_open(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }
}

pub(crate) fn full_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

fn index_names(vertices: &[String]) -> Result<HashMap<&str, usize>> {
    let mut idx = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        if idx.insert(v.as_str(), i).is_some() {
            return Err(Error::InvalidModel(format!("duplicate vertex {v:?}")));
        }
    }
    Ok(idx)
}

fn check_terminals(n: usize, terminals: &[usize]) -> Result<()> {
    if terminals.is_empty() {
        return Err(Error::InvalidModel("no terminals".into()));
    }
    for (i, &t) in terminals.iter().enumerate() {
        if t >= n {
            return Err(Error::InvalidModel(format!("terminal index {t} out of range")));
        }
        if terminals[..i].contains(&t) {
            return Err(Error::InvalidModel("terminals must be pairwise distinct".into()));
        }
    }
    Ok(())
}

fn check_prob(p: &Rational) -> Result<()> {
    if *p < Rational::zero() || *p > Rational::one() {
        return Err(Error::InvalidModel(format!("probability {} outside [0, 1]", rational::fmt(p))));
    }
    Ok(())
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>, terminals: Vec<usize>) -> Result<Self> {
        index_names(&vertices)?;
        check_terminals(vertices.len(), &terminals)?;
        for e in &edges {
            if e.u >= vertices.len() || e.v >= vertices.len() {
                return Err(Error::InvalidModel("edge endpoint is not a declared vertex".into()));
            }
            if e.u == e.v {
                return Err(Error::InvalidModel(format!("self-loop at {:?}", vertices[e.u])));
            }
            check_prob(&e.p)?;
        }
        Ok(Self { vertices, edges, terminals })
    }

    /// Builds a graph from vertex names; terminals and endpoints by name.
    pub fn from_names(vertices: &[&str], terminals: &[&str], edges: &[(&str, &str, Rational)]) -> Result<Self> {
        let vs: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let idx = index_names(&vs)?;
        let look = |n: &str| idx.get(n).copied().ok_or_else(|| Error::InvalidModel(format!("unknown vertex {n:?}")));
        let terms = terminals.iter().map(|t| look(t)).collect::<Result<Vec<_>>>()?;
        let es = edges
            .iter()
            .map(|(u, v, p)| Ok(Edge { u: look(u)?, v: look(v)?, p: p.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vs, es, terms)
    }

    pub fn terminal_names(&self) -> Vec<String> {
        self.terminals.iter().map(|&t| self.vertices[t].clone()).collect()
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Same graph with every edge probability replaced.
    pub fn with_probs(&self, probs: &[Rational]) -> Self {
        let mut g = self.clone();
        for (e, p) in g.edges.iter_mut().zip(probs) {
            e.p = p.clone();
        }
        g
    }
}

impl SiteModel {
    pub fn new(vertices: Vec<String>, edges: Vec<(usize, usize)>, probs: Vec<Rational>, terminals: Vec<usize>) -> Result<Self> {
        index_names(&vertices)?;
        check_terminals(vertices.len(), &terminals)?;
        if probs.len() != vertices.len() {
            return Err(Error::InvalidModel("every vertex needs a site probability".into()));
        }
        for p in &probs {
            check_prob(p)?;
        }
        for &(u, v) in &edges {
            if u >= vertices.len() || v >= vertices.len() {
                return Err(Error::InvalidModel("edge endpoint is not a declared vertex".into()));
            }
            if u == v {
                return Err(Error::InvalidModel(format!("self-loop at {:?}", vertices[u])));
            }
        }
        Ok(Self { vertices, edges, probs, terminals })
    }

    pub fn terminal_names(&self) -> Vec<String> {
        self.terminals.iter().map(|&t| self.vertices[t].clone()).collect()
    }
}

impl HyperModel {
    pub fn new(vertices: Vec<String>, hyperedges: Vec<Hyperedge>, terminals: Vec<usize>) -> Result<Self> {
        index_names(&vertices)?;
        check_terminals(vertices.len(), &terminals)?;
        for h in &hyperedges {
            if h.members.len() < 2 {
                return Err(Error::InvalidModel("hyperedges need at least two members".into()));
            }
            if h.members.iter().any(|&m| m >= vertices.len()) {
                return Err(Error::InvalidModel("hyperedge member is not a declared vertex".into()));
            }
            check_prob(&h.p)?;
        }
        Ok(Self { vertices, hyperedges, terminals })
    }

    pub fn terminal_names(&self) -> Vec<String> {
        self.terminals.iter().map(|&t| self.vertices[t].clone()).collect()
    }
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Bond(_) => "bond",
            Model::Site(_) => "site",
            Model::Hyper(_) => "hyper",
        }
    }

    pub fn terminal_names(&self) -> Vec<String> {
        match self {
            Model::Bond(g) => g.terminal_names(),
            Model::Site(m) => m.terminal_names(),
            Model::Hyper(h) => h.terminal_names(),
        }
    }

    /// Number of random elements (edges, sites or hyperedges).
    pub fn element_count(&self) -> usize {
        match self {
            Model::Bond(g) => g.edges.len(),
            Model::Site(m) => m.vertices.len(),
            Model::Hyper(h) => h.hyperedges.len(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(s)?;
        raw.into_model()
    }

    pub fn to_json(&self) -> Value {
        let names = |vs: &[String], ix: &[usize]| ix.iter().map(|&i| vs[i].clone()).collect::<Vec<_>>();
        match self {
            Model::Bond(g) => json!({
                "vertices": g.vertices,
                "terminals": names(&g.vertices, &g.terminals),
                "edges": g.edges.iter().map(|e| json!({
                    "u": g.vertices[e.u], "v": g.vertices[e.v], "p": rational::fmt(&e.p)
                })).collect::<Vec<_>>(),
            }),
            Model::Site(m) => {
                let sites: serde_json::Map<String, Value> = m
                    .vertices
                    .iter()
                    .zip(&m.probs)
                    .map(|(v, p)| (v.clone(), Value::String(rational::fmt(p))))
                    .collect();
                json!({
                    "vertices": m.vertices,
                    "terminals": names(&m.vertices, &m.terminals),
                    "edges": m.edges.iter().map(|&(u, v)| json!({"u": m.vertices[u], "v": m.vertices[v]})).collect::<Vec<_>>(),
                    "sites": sites,
                })
            }
            Model::Hyper(h) => json!({
                "vertices": h.vertices,
                "terminals": names(&h.vertices, &h.terminals),
                "hyperedges": h.hyperedges.iter().map(|e| json!({
                    "members": names(&h.vertices, &e.members), "p": rational::fmt(&e.p)
                })).collect::<Vec<_>>(),
            }),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    vertices: Vec<String>,
    terminals: Vec<String>,
    #[serde(default)]
    edges: Option<Vec<RawEdge>>,
    #[serde(default)]
    sites: Option<HashMap<String, Value>>,
    #[serde(default)]
    hyperedges: Option<Vec<RawHyperedge>>,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    schema: Option<u32>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: String,
    v: String,
    #[serde(default)]
    p: Option<Value>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawHyperedge {
    members: Vec<String>,
    p: Value,
}

fn prob_value(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => rational::parse_probability(s),
        Value::Number(n) => rational::parse_probability(&n.to_string()),
        other => Err(Error::BadProbability(other.to_string(), "expected a string".into())),
    }
}

impl RawModel {
    fn into_model(self) -> Result<Model> {
        let _ = self.schema;
        let idx = index_names(&self.vertices)?;
        let look = |n: &str| idx.get(n).copied().ok_or_else(|| Error::InvalidModel(format!("unknown vertex {n:?}")));
        let terminals = self.terminals.iter().map(|t| look(t)).collect::<Result<Vec<_>>>()?;
        let kind = match (&self.kind, &self.sites, &self.hyperedges) {
            (Some(k), _, _) => k.clone(),
            (None, Some(_), None) => "site".into(),
            (None, None, Some(_)) => "hyper".into(),
            (None, None, None) => "bond".into(),
            _ => return Err(Error::InvalidModel("both \"sites\" and \"hyperedges\" given".into())),
        };
        match kind.as_str() {
            "bond" => {
                let edges = self
                    .edges
                    .unwrap_or_default()
                    .iter()
                    .map(|e| {
                        let p = e.p.as_ref().ok_or_else(|| Error::InvalidModel("bond edge without \"p\"".into()))?;
                        Ok(Edge { u: look(&e.u)?, v: look(&e.v)?, p: prob_value(p)? })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Bond(Graph::new(self.vertices, edges, terminals)?))
            }
            "site" => {
                let sites = self.sites.unwrap_or_default();
                let mut probs = vec![None; self.vertices.len()];
                for (name, p) in &sites {
                    probs[look(name)?] = Some(prob_value(p)?);
                }
                let probs = probs
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| p.ok_or_else(|| Error::InvalidModel(format!("vertex {:?} has no site probability", self.vertices[i]))))
                    .collect::<Result<Vec<_>>>()?;
                let edges = self
                    .edges
                    .unwrap_or_default()
                    .iter()
                    .map(|e| {
                        if e.p.is_some() {
                            return Err(Error::InvalidModel("site-model edges carry no probability".into()));
                        }
                        Ok((look(&e.u)?, look(&e.v)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Site(SiteModel::new(self.vertices, edges, probs, terminals)?))
            }
            "hyper" => {
                if self.edges.as_ref().is_some_and(|e| !e.is_empty()) {
                    return Err(Error::InvalidModel("hyper models use \"hyperedges\", not \"edges\"".into()));
                }
                let hyperedges = self
                    .hyperedges
                    .unwrap_or_default()
                    .iter()
                    .map(|h| {
                        Ok(Hyperedge {
                            members: h.members.iter().map(|m| look(m)).collect::<Result<Vec<_>>>()?,
                            p: prob_value(&h.p)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Hyper(HyperModel::new(self.vertices, hyperedges, terminals)?))
            }
            other => Err(Error::InvalidModel(format!("unknown model kind {other:?}"))),
        }
    }
}

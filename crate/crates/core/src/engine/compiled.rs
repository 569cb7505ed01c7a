use crate::dsu::Dsu;
use crate::error::{Error, Result};
use crate::model::{Graph, HyperModel, Model, SiteModel};
use crate::partition::PartitionSet;
use crate::rational::Rational;

#[derive(Debug, Clone)]
enum Kind {
    /// Element `i` is edge `edges[i]`.
    Bond { edges: Vec<(u32, u32)> },
    /// Element `i` is vertex `i`; an edge is usable when both ends are open.
    Site { edges: Vec<(u32, u32)> },
    /// Element `i` is hyperedge `members[i]`.
    Hyper { members: Vec<Vec<u32>> },
}

/// A model lowered to index form, ready for enumeration.
#[derive(Debug, Clone)]
pub struct Compiled {
    n: usize,
    terminals: Vec<usize>,
    terminal_names: Vec<String>,
    probs: Vec<Rational>,
    kind: Kind,
    parts: PartitionSet,
}

impl Compiled {
    fn build(n: usize, terminals: Vec<usize>, terminal_names: Vec<String>, probs: Vec<Rational>, kind: Kind) -> Result<Self> {
        let parts = PartitionSet::new(terminals.len())?;
        if n > u32::MAX as usize {
            return Err(Error::InvalidModel("too many vertices".into()));
        }
        Ok(Self { n, terminals, terminal_names, probs, kind, parts })
    }

    pub fn bond(g: &Graph) -> Result<Self> {
        Self::build(
            g.vertices.len(),
            g.terminals.clone(),
            g.terminal_names(),
            g.edges.iter().map(|e| e.p.clone()).collect(),
            Kind::Bond { edges: g.edges.iter().map(|e| (e.u as u32, e.v as u32)).collect() },
        )
    }

    pub fn site(m: &SiteModel) -> Result<Self> {
        Self::build(
            m.vertices.len(),
            m.terminals.clone(),
            m.terminal_names(),
            m.probs.clone(),
            Kind::Site { edges: m.edges.iter().map(|&(u, v)| (u as u32, v as u32)).collect() },
        )
    }

    pub fn hyper(h: &HyperModel) -> Result<Self> {
        Self::build(
            h.vertices.len(),
            h.terminals.clone(),
            h.terminal_names(),
            h.hyperedges.iter().map(|e| e.p.clone()).collect(),
            Kind::Hyper { members: h.hyperedges.iter().map(|e| e.members.iter().map(|&m| m as u32).collect()).collect() },
        )
    }

    pub fn from_model(m: &Model) -> Result<Self> {
        match m {
            Model::Bond(g) => Self::bond(g),
            Model::Site(s) => Self::site(s),
            Model::Hyper(h) => Self::hyper(h),
        }
    }

    pub fn element_count(&self) -> usize {
        self.probs.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn terminal_names(&self) -> &[String] {
        &self.terminal_names
    }

    pub fn parts(&self) -> &PartitionSet {
        &self.parts
    }

    pub fn new_dsu(&self) -> Dsu {
        Dsu::new(self.n)
    }

    /// Merges clusters for configuration `mask` into a freshly reset `dsu`.
    pub fn connect(&self, mask: u64, dsu: &mut Dsu) {
        dsu.reset();
        match &self.kind {
            Kind::Bond { edges } => {
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let (u, v) = edges[i];
                    dsu.union(u as usize, v as usize);
                }
            }
            Kind::Site { edges } => {
                for &(u, v) in edges {
                    if mask >> u & 1 == 1 && mask >> v & 1 == 1 {
                        dsu.union(u as usize, v as usize);
                    }
                }
            }
            Kind::Hyper { members } => {
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let hs = &members[i];
                    for w in hs.windows(2) {
                        dsu.union(w[0] as usize, w[1] as usize);
                    }
                }
            }
        }
    }

    /// Whether vertex `v` can belong to a cluster at all under `mask`.
    pub fn vertex_open(&self, mask: u64, v: usize) -> bool {
        match self.kind {
            Kind::Site { .. } => mask >> v & 1 == 1,
            _ => true,
        }
    }

    /// Canonical index of the terminal partition under `mask`.
    pub fn classify(&self, mask: u64, dsu: &mut Dsu) -> usize {
        self.connect(mask, dsu);
        self.classify_connected(mask, dsu)
    }

    /// Like [`classify`](Self::classify) for a `dsu` already built by [`connect`](Self::connect).
    pub fn classify_connected(&self, mask: u64, dsu: &mut Dsu) -> usize {
        let mut labels = [0usize; crate::partition::MAX_TERMINALS];
        for (slot, &t) in labels.iter_mut().zip(&self.terminals) {
            // Closed sites are their own singleton; offset keeps them distinct from roots.
            *slot = if self.vertex_open(mask, t) { dsu.find(t) } else { self.n + t };
        }
        self.parts.index_of_labels(&labels[..self.terminals.len()])
    }
}

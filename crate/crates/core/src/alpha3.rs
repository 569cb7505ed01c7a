//! Parametric graph families and derivative-free maximization of
//! three-terminal functionals, `min(P(abc), P(a|b|c))` above all.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::engine::{bond_distribution, bond_distribution_f64, EngineOptions};
use crate::error::{Error, Result};
use crate::event::{self, EventSet};
use crate::model::{Edge, Graph};
use crate::par;
use crate::partition::{j3, PartitionSet};
use crate::rational::{self, Rational};

/// Denominator used when snapping float parameters to rationals.
pub const SNAP_DEN: u64 = 1_000_000;
pub const MAX_DIM: usize = 8;

pub const BUILTIN_FAMILIES: [&str; 6] = ["triangle", "k23_double", "k34_matched", "fig3", "path", "single_edge"];

/// A graph topology whose edge probabilities are read from a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFamily {
    pub name: String,
    pub vertices: Vec<String>,
    pub terminals: Vec<usize>,
    /// `(u, v, parameter index)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub dim: usize,
}

impl ParamFamily {
    pub fn new(name: &str, vertices: &[&str], terminals: &[&str], edges: &[(&str, &str, usize)]) -> Result<Self> {
        let vertices: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let idx = |n: &str| vertices.iter().position(|v| v == n).ok_or_else(|| Error::UnknownTerminal(n.to_string()));
        let terminals = terminals.iter().map(|t| idx(t)).collect::<Result<Vec<_>>>()?;
        let edges = edges.iter().map(|&(u, v, j)| Ok((idx(u)?, idx(v)?, j))).collect::<Result<Vec<_>>>()?;
        let dim = edges.iter().map(|e| e.2 + 1).max().unwrap_or(0);
        let f = Self { name: name.to_string(), vertices, terminals, edges, dim };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidModel(format!("family needs 1..={MAX_DIM} parameters, got {}", self.dim)));
        }
        if self.terminals.len() != 3 {
            return Err(Error::TerminalCount(self.terminals.len()));
        }
        if let Some(j) = (0..self.dim).find(|j| !self.edges.iter().any(|e| e.2 == *j)) {
            return Err(Error::InvalidModel(format!("parameter {j} drives no edge")));
        }
        // A bound graph must be valid.
        self.bind_exact(&vec![rational::zero(); self.dim]).map(|_| ())
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "triangle" => Self::new("triangle", &["a", "b", "c"], &["a", "b", "c"], &[("a", "b", 0), ("a", "c", 0), ("b", "c", 0)]),
            "k23_double" => {
                let mut e = Vec::new();
                for t in ["a", "b", "c"] {
                    for h in ["u", "v"] {
                        e.push((t, h, 0));
                    }
                }
                e.push(("u", "v", 1));
                e.push(("u", "v", 1));
                Self::new("k23_double", &["a", "b", "c", "u", "v"], &["a", "b", "c"], &e)
            }
            "k34_matched" | "fig3" => {
                let hubs = ["h0", "h1", "h2", "h3"];
                let mut e = Vec::new();
                for t in ["a", "b", "c"] {
                    for h in hubs {
                        e.push((t, h, 0));
                    }
                }
                e.push(("h0", "h1", 1));
                e.push(("h2", "h3", 1));
                Self::new("k34_matched", &["a", "b", "c", "h0", "h1", "h2", "h3"], &["a", "b", "c"], &e)
            }
            "path" => Self::new("path", &["a", "b", "c"], &["a", "b", "c"], &[("a", "c", 0), ("c", "b", 1)]),
            "single_edge" => Self::new("single_edge", &["a", "b", "c"], &["a", "b", "c"], &[("a", "b", 0)]),
            _ => Err(Error::Options(format!("unknown family {name:?}; built-ins: {}", BUILTIN_FAMILIES.join(", ")))),
        }
    }

    /// `{"name", "vertices", "terminals", "edges": [[u, v, param], ...]}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidModel(format!("family JSON: {m}"));
        let strs = |key: &str| -> Result<Vec<String>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(&format!("missing \"{key}\" array")))?
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad(&format!("\"{key}\" entries must be strings"))))
                .collect()
        };
        let vertices = strs("vertices")?;
        let terminals = strs("terminals")?;
        let mut edges = Vec::new();
        for e in v.get("edges").and_then(Value::as_array).ok_or_else(|| bad("missing \"edges\" array"))? {
            let a = e.as_array().filter(|a| a.len() == 3).ok_or_else(|| bad("each edge is [u, v, param]"))?;
            let (Some(x), Some(y), Some(j)) = (a[0].as_str(), a[1].as_str(), a[2].as_u64()) else {
                return Err(bad("each edge is [u, v, param]"));
            };
            edges.push((x.to_string(), y.to_string(), j as usize));
        }
        let name = v.get("name").and_then(Value::as_str).unwrap_or("custom");
        let vr: Vec<&str> = vertices.iter().map(String::as_str).collect();
        let tr: Vec<&str> = terminals.iter().map(String::as_str).collect();
        let er: Vec<(&str, &str, usize)> = edges.iter().map(|(x, y, j)| (x.as_str(), y.as_str(), *j)).collect();
        Self::new(name, &vr, &tr, &er)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "vertices": self.vertices,
            "terminals": self.terminals.iter().map(|&t| &self.vertices[t]).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&(u, v, j)| json!([self.vertices[u], self.vertices[v], j])).collect::<Vec<_>>(),
        })
    }

    pub fn bind_exact(&self, theta: &[Rational]) -> Result<Graph> {
        if theta.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: theta.len() });
        }
        if let Some(t) = theta.iter().find(|t| **t < rational::zero() || **t > rational::one()) {
            return Err(Error::BadProbability(rational::fmt(t), "parameter outside [0, 1]".into()));
        }
        let edges = self.edges.iter().map(|&(u, v, j)| Edge { u, v, p: theta[j].clone() }).collect();
        Graph::new(self.vertices.clone(), edges, self.terminals.clone())
    }

    /// Snaps each entry to a multiple of `1 / SNAP_DEN`.
    pub fn bind(&self, theta: &[f64]) -> Result<Graph> {
        self.bind_exact(&snap_theta(theta)?)
    }

    fn edge_probs(&self, theta: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|e| theta[e.2]).collect()
    }
}

fn snap_theta(theta: &[f64]) -> Result<Vec<Rational>> {
    theta
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::BadProbability(t.to_string(), "parameter outside [0, 1]".into()));
            }
            Ok(rational::snap(t, SNAP_DEN))
        })
        .collect()
}

/// The functionals that can be maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// `min(P(abc), P(a|b|c))`.
    MinTopBottom,
    /// `P(abc) - P(ac) P(bc)`.
    AbcMinusProduct,
}

impl Functional {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "min-top-bottom" => Ok(Self::MinTopBottom),
            "abc-minus-product" => Ok(Self::AbcMinusProduct),
            _ => Err(Error::Options(format!("unknown functional {s:?}; use min-top-bottom or abc-minus-product"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MinTopBottom => "min-top-bottom",
            Self::AbcMinusProduct => "abc-minus-product",
        }
    }

    pub fn eval_exact(&self, rho: &[Rational]) -> Rational {
        let (t, y, z, s) = (&rho[j3::ABC], &rho[j3::AC_B], &rho[j3::A_BC], &rho[j3::A_B_C]);
        match self {
            Self::MinTopBottom => t.clone().min(s.clone()),
            Self::AbcMinusProduct => t - (t + y) * (t + z),
        }
    }

    pub fn eval(&self, rho: &[f64]) -> f64 {
        let (t, y, z, s) = (rho[j3::ABC], rho[j3::AC_B], rho[j3::A_BC], rho[j3::A_B_C]);
        match self {
            Self::MinTopBottom => t.min(s),
            Self::AbcMinusProduct => t - (t + y) * (t + z),
        }
    }
}

/// Exact value at a snapped parameter point, with its float mirror.
#[derive(Debug, Clone)]
pub struct Objective {
    pub theta: Vec<Rational>,
    pub value: Rational,
    pub together: Rational,
    pub separate: Rational,
    pub value_f64: f64,
    pub rho: Vec<Rational>,
}

impl Objective {
    pub fn to_json(&self) -> Value {
        json!({
            "theta": self.theta.iter().map(rational::fmt).collect::<Vec<_>>(),
            "value": rational::fmt(&self.value),
            "value_float": rational::to_f64(&self.value),
            "float_mirror": self.value_f64,
            "abc": rational::fmt(&self.together),
            "a|b|c": rational::fmt(&self.separate),
            "abc_float": rational::to_f64(&self.together),
            "a|b|c_float": rational::to_f64(&self.separate),
        })
    }
}

/// Exact `functional` on the graph bound at the snapped `theta`.
pub fn evaluate(f: &ParamFamily, functional: Functional, theta: &[f64], opts: &EngineOptions) -> Result<Objective> {
    let snapped = snap_theta(theta)?;
    let g = f.bind_exact(&snapped)?;
    let rho = bond_distribution(&g, opts)?;
    let p = rho.probs();
    let floats: Vec<f64> = snapped.iter().map(rational::to_f64).collect();
    let mirror = bond_distribution_f64(&g, &f.edge_probs(&floats))?;
    Ok(Objective {
        theta: snapped,
        value: functional.eval_exact(p),
        together: p[j3::ABC].clone(),
        separate: p[j3::A_B_C].clone(),
        value_f64: functional.eval(&mirror),
        rho: p.to_vec(),
    })
}

pub fn objective(f: &ParamFamily, theta: &[f64], opts: &EngineOptions) -> Result<Objective> {
    evaluate(f, Functional::MinTopBottom, theta, opts)
}

#[derive(Debug, Clone)]
pub struct MaximizeOptions {
    pub starts: usize,
    /// Objective evaluations per start.
    pub budget: usize,
    pub seed: u64,
    pub workers: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { starts: 8, budget: 4000, seed: 1, workers: 1, initial_step: 0.25, min_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub start: usize,
    pub evals: usize,
    pub step: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Run {
    theta: Vec<f64>,
    value: f64,
    evals: usize,
    exhausted: bool,
    trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub family: String,
    pub functional: Functional,
    pub best_start: usize,
    /// Snapped optimum.
    pub theta: Vec<f64>,
    /// Float mirror at the snapped optimum.
    pub value: f64,
    pub exact: Objective,
    pub budget_exhausted: bool,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

impl OptResult {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": 1,
            "family": self.family,
            "functional": self.functional.name(),
            "best_start": self.best_start,
            "theta": self.theta,
            "value": self.value,
            "exact": self.exact.to_json(),
            "budget_exhausted": self.budget_exhausted,
            "evaluations": self.evaluations,
            "trace": self.trace.iter().map(|t| json!({"start": t.start, "evals": t.evals, "step": t.step, "value": t.value})).collect::<Vec<_>>(),
        })
    }
}

/// Coordinate pattern search with step halving, from one start.
fn pattern_search(dim: usize, x0: Vec<f64>, start: usize, opts: &MaximizeOptions, obj: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Run {
    let mut x = x0;
    let mut best = obj(&x);
    let mut evals = 1;
    let mut step = opts.initial_step;
    let mut trace = vec![TraceEntry { start, evals, step, value: best }];
    while step >= opts.min_step {
        if evals >= opts.budget {
            return Run { theta: x, value: best, evals, exhausted: true, trace };
        }
        let mut moved = false;
        for j in 0..dim {
            for dir in [1.0, -1.0] {
                if evals >= opts.budget {
                    break;
                }
                let mut y = x.clone();
                y[j] = (y[j] + dir * step).clamp(0.0, 1.0);
                if y[j] == x[j] {
                    continue;
                }
                let v = obj(&y);
                evals += 1;
                if v > best {
                    best = v;
                    x = y;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step /= 2.0;
            trace.push(TraceEntry { start, evals, step, value: best });
        }
    }
    Run { theta: x, value: best, evals, exhausted: false, trace }
}

fn start_point(dim: usize, start: usize, seed: u64) -> Vec<f64> {
    if start == 0 {
        return vec![0.5; dim];
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(start as u64);
    (0..dim).map(|_| r.gen::<f64>()).collect()
}

fn multistart(dim: usize, opts: &MaximizeOptions, obj: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<(usize, Run, usize)> {
    if opts.starts == 0 || opts.budget == 0 {
        return Err(Error::Options("maximize needs at least one start and a positive budget".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::Options(format!("parameter dimension {dim} exceeds {MAX_DIM}")));
    }
    let runs = par::run(opts.workers, par::split(opts.starts as u64, opts.starts as u64), |r| {
        r.map(|s| pattern_search(dim, start_point(dim, s as usize, opts.seed), s as usize, opts, obj)).collect::<Vec<_>>()
    });
    let runs: Vec<Run> = runs.into_iter().flatten().collect();
    let total = runs.iter().map(|r| r.evals).sum();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    Ok((best, runs[best].clone(), total))
}

fn float_objective<'a>(f: &'a ParamFamily, functional: Functional) -> Result<impl Fn(&[f64]) -> f64 + Sync + 'a> {
    let g = f.bind_exact(&vec![rational::zero(); f.dim])?;
    // Fails early if the float path cannot take this graph.
    bond_distribution_f64(&g, &vec![0.0; f.edges.len()])?;
    Ok(move |theta: &[f64]| match bond_distribution_f64(&g, &f.edge_probs(theta)) {
        Ok(rho) => functional.eval(&rho),
        Err(_) => f64::NEG_INFINITY,
    })
}

fn finish(f: &ParamFamily, functional: Functional, best_start: usize, run: Run, total: usize, trace: Vec<TraceEntry>, eng: &EngineOptions) -> Result<OptResult> {
    let exact = evaluate(f, functional, &run.theta, eng)?;
    Ok(OptResult {
        family: f.name.clone(),
        functional,
        best_start,
        theta: exact.theta.iter().map(rational::to_f64).collect(),
        value: exact.value_f64,
        exact,
        budget_exhausted: run.exhausted,
        evaluations: total,
        trace,
    })
}

/// Multi-start pattern search on the float mirror, then an exact
/// re-evaluation at the snapped optimum.
pub fn maximize_functional(f: &ParamFamily, functional: Functional, opts: &MaximizeOptions, eng: &EngineOptions) -> Result<OptResult> {
    let obj = float_objective(f, functional)?;
    let (best, run, total) = multistart(f.dim, opts, &obj)?;
    let trace = run.trace.clone();
    finish(f, functional, best, run, total, trace, eng)
}

pub fn maximize(f: &ParamFamily, opts: &MaximizeOptions, eng: &EngineOptions) -> Result<OptResult> {
    maximize_functional(f, Functional::MinTopBottom, opts, eng)
}

/// An event over the terminals `a, b, c`: a partition name such as `ab|c`
/// or an event expression such as `a~b && a!~c`.
pub fn constraint_event(expr: &str) -> Result<EventSet> {
    let ps = PartitionSet::new(3)?;
    if let Some(i) = j3::NAMES.iter().position(|n| *n == expr.trim()) {
        return Ok(EventSet::from_indices(ps.len(), [i]));
    }
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    event::event(&ps, &names, expr)
}

#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub delta: f64,
    pub result: OptResult,
    /// Exact probability of the constraint event at the optimum.
    pub constraint: Rational,
    /// Within `PENALTY_SLACK` of the bound; penalties leave a small overshoot.
    pub satisfied: bool,
    /// `P(ab|c) P(ac or bc)` at the optimum; `P(abc) - P(ac) P(bc)` never
    /// falls below it.
    pub remark_floor: Rational,
}

impl FrontierPoint {
    pub fn to_json(&self) -> Value {
        json!({
            "delta": self.delta,
            "value": rational::fmt(&self.result.exact.value),
            "value_float": rational::to_f64(&self.result.exact.value),
            "constraint": rational::fmt(&self.constraint),
            "constraint_float": rational::to_f64(&self.constraint),
            "satisfied": self.satisfied,
            "remark_floor": rational::fmt(&self.remark_floor),
            "remark_floor_float": rational::to_f64(&self.remark_floor),
            "theta": self.result.theta,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub family: String,
    pub functional: Functional,
    pub constraint: String,
    pub points: Vec<FrontierPoint>,
}

impl ProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": 1,
            "family": self.family,
            "functional": self.functional.name(),
            "constraint": self.constraint,
            "evidence_only": true,
            "frontier": self.points.iter().map(FrontierPoint::to_json).collect::<Vec<_>>(),
        })
    }
}

const PENALTIES: [f64; 4] = [10.0, 100.0, 1e3, 1e4];
pub const PENALTY_SLACK: f64 = 1e-3;

/// Maximizes `functional` subject to `P(event) <= delta` for each delta, by
/// a penalty method with increasing weights.
pub fn probe_conjecture(
    f: &ParamFamily,
    functional: Functional,
    constraint: &str,
    deltas: &[f64],
    opts: &MaximizeOptions,
    eng: &EngineOptions,
) -> Result<ProbeReport> {
    let ev = constraint_event(constraint)?;
    let g = f.bind_exact(&vec![rational::zero(); f.dim])?;
    bond_distribution_f64(&g, &vec![0.0; f.edges.len()])?;
    let prob = |rho: &[f64]| ev.iter().map(|i| rho[i]).sum::<f64>();
    let ps = PartitionSet::new(3)?;
    let ac_or_bc = event::together(&ps, &[0, 2]) | event::together(&ps, &[1, 2]);
    let mut points = Vec::new();
    for &delta in deltas {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Options(format!("delta {delta} outside [0, 1]")));
        }
        let mut best: Option<(usize, Run, usize)> = None;
        for &mu in &PENALTIES {
            let obj = |theta: &[f64]| match bond_distribution_f64(&g, &f.edge_probs(theta)) {
                Ok(rho) => functional.eval(&rho) - mu * (prob(&rho) - delta).max(0.0),
                Err(_) => f64::NEG_INFINITY,
            };
            best = Some(multistart(f.dim, opts, &obj)?);
            if delta >= 1.0 {
                break;
            }
        }
        let (start, run, total) = best.expect("at least one penalty");
        let trace = run.trace.clone();
        let result = finish(f, functional, start, run, total, trace, eng)?;
        let constraint: Rational = ev.iter().map(|i| &result.exact.rho[i]).sum();
        let union: Rational = ac_or_bc.iter().map(|i| &result.exact.rho[i]).sum();
        points.push(FrontierPoint {
            delta,
            satisfied: rational::to_f64(&constraint) <= delta + PENALTY_SLACK,
            remark_floor: &result.exact.rho[j3::AB_C] * union,
            constraint,
            result,
        });
    }
    Ok(ProbeReport { family: f.name.clone(), functional, constraint: constraint.to_string(), points })
}

#[cfg(test)]
mod tests;

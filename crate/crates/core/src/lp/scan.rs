//! Grid scans of the marginal LP over the simplex of `rho`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::{solve, verify_certificate, verify_witness, Certificate, MarginalLP, Outcome, Profile, GROUPS};
use crate::error::{Error, Result};
use crate::par;
use crate::partition::j3;
use crate::rational::{self, Rational};

pub const MAX_GRID: u32 = 200;

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Grid step is `1 / grid`.
    pub grid: u32,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { grid: 100, workers: 1 }
    }
}

/// One infeasible grid point and the certificate that rules it out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covered {
    pub point: [u32; 5],
    pub certificate: usize,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub grid: u32,
    /// Largest `min(rho(abc), rho(a|b|c))` over feasible grid points.
    pub bound: Rational,
    /// A feasible point attaining the bound, with its witness.
    pub feasible_point: Option<([u32; 5], Vec<(usize, Rational)>)>,
    /// Every grid point above the bound, each with its certificate.
    pub infeasible: Vec<Covered>,
    pub certificates: Vec<Certificate>,
    pub lp_solves: usize,
}

impl ScanReport {
    pub fn bound_f64(&self) -> f64 {
        rational::to_f64(&self.bound)
    }

    pub fn to_json(&self, with_points: bool) -> Value {
        let mut v = json!({
            "schema": 1,
            "grid": self.grid,
            "bound": rational::fmt(&self.bound),
            "bound_float": self.bound_f64(),
            "infeasible_points": self.infeasible.len(),
            "certificates": self.certificates.len(),
            "lp_solves": self.lp_solves,
            "feasible_point": self.feasible_point.as_ref().map(|(p, w)| json!({
                "rho": point_names(p, self.grid),
                "witness_support": w.len(),
            })),
        });
        if with_points {
            v["points"] = Value::Array(
                self.infeasible.iter().map(|c| json!({"rho": point_names(&c.point, self.grid), "certificate": c.certificate})).collect(),
            );
            v["certificate_list"] = Value::Array(self.certificates.iter().map(Certificate::to_json).collect());
        }
        v
    }
}

fn point_names(p: &[u32; 5], grid: u32) -> Value {
    let m: serde_json::Map<String, Value> =
        j3::NAMES.iter().zip(p).map(|(n, &k)| (n.to_string(), Value::String(rational::fmt(&rational::ratio(k as i64, grid as i64))))).collect();
    Value::Object(m)
}

pub(crate) fn point_rho(p: &[u32; 5], grid: u32) -> [Rational; 5] {
    p.map(|k| rational::ratio(k as i64, grid as i64))
}

/// Certificate as an integer quadratic form, for fast sign tests on grid points.
struct Form {
    q: [[BigInt; 5]; 5],
    small: Option<[[i128; 5]; 5]>,
}

impl Form {
    fn new(c: &Certificate) -> Self {
        let qf = c.quadratic_form();
        let den = rational::common_denominator(qf.iter().flatten());
        let q: [[BigInt; 5]; 5] = std::array::from_fn(|x| std::array::from_fn(|y| (&qf[x][y] * Rational::from_integer(den.clone())).to_integer()));
        let small = q.iter().flatten().all(|v| v.abs() < BigInt::from(1u64 << 60)).then(|| {
            std::array::from_fn(|x| std::array::from_fn(|y| q[x][y].to_i128().expect("checked")))
        });
        Self { q, small }
    }

    fn positive_at(&self, v: &[u32; 5]) -> bool {
        match &self.small {
            Some(s) => {
                let mut acc = 0i128;
                for x in 0..5 {
                    for y in 0..5 {
                        acc += s[x][y] * v[x] as i128 * v[y] as i128;
                    }
                }
                acc > 0
            }
            None => {
                let mut acc = BigInt::zero();
                for x in 0..5 {
                    for y in 0..5 {
                        acc += &self.q[x][y] * BigInt::from(v[x]) * BigInt::from(v[y]);
                    }
                }
                acc.is_positive()
            }
        }
    }
}

/// The certificate for the `b <-> c` image of the problem.
fn mirror(c: &Certificate) -> Certificate {
    let s = |x: usize| j3::SWAP_BC[x];
    // Groups 1 and 2 (S1, S2 pairs) trade places.
    let g_of = [0, 2, 1, 3];
    let mut dual = vec![Rational::zero(); c.dual.len()];
    for g in 0..GROUPS {
        for x in 0..5 {
            for y in 0..5 {
                dual[super::row(g_of[g], s(x), s(y))] = c.dual[super::row(g, x, y)].clone();
            }
        }
    }
    Certificate { dual }
}

pub(crate) fn level_points(grid: u32, level: u32) -> Vec<[u32; 5]> {
    let mut out = Vec::new();
    for t in level..=grid {
        for s in level..=grid - t {
            if t.min(s) != level {
                continue;
            }
            let r = grid - t - s;
            for x in 0..=r {
                for y in 0..=r - x {
                    out.push([t, x, y, r - x - y, s]);
                }
            }
        }
    }
    out
}

struct Cache {
    certs: Vec<Certificate>,
    forms: Vec<Form>,
}

impl Cache {
    fn find(&self, p: &[u32; 5]) -> Option<usize> {
        self.forms.iter().position(|f| f.positive_at(p))
    }

    fn push(&mut self, lp: &MarginalLP, c: Certificate) {
        // Only column conditions matter for reuse; they do not depend on rho.
        let probe = lp.clone();
        let m = mirror(&c);
        for cert in [c, m] {
            if self.certs.contains(&cert) {
                continue;
            }
            debug_assert!(columns_ok(&probe, &cert));
            self.forms.push(Form::new(&cert));
            self.certs.push(cert);
        }
    }
}

fn columns_ok(lp: &MarginalLP, c: &Certificate) -> bool {
    lp.profiles.iter().all(|p: &Profile| {
        let s: Rational = p.rows().iter().map(|&r| &c.dual[r]).sum();
        !s.is_positive()
    })
}

/// Walks levels of `min(rho(abc), rho(a|b|c))` downward from 1/2 and stops at
/// the first level holding a feasible grid point. Every point above it is
/// shown infeasible by a verified certificate.
pub fn scan(profiles: &[Profile], opts: &ScanOptions) -> Result<ScanReport> {
    if opts.grid == 0 || opts.grid > MAX_GRID {
        return Err(Error::CapExceeded { what: "grid denominator", got: opts.grid as usize, cap: MAX_GRID as usize });
    }
    let n = opts.grid;
    let base = MarginalLP { profiles: profiles.to_vec(), rho: point_rho(&[n, 0, 0, 0, 0], n), rhs: Vec::new() };
    let mut cache = Cache { certs: Vec::new(), forms: Vec::new() };
    let mut infeasible = Vec::new();
    let mut lp_solves = 0;
    for level in (0..=n / 2).rev() {
        let pts = level_points(n, level);
        // Cheap pass against the current cache, in parallel.
        let hits: Vec<Option<usize>> = par::map_reduce(
            opts.workers,
            par::split(pts.len() as u64, 64),
            |r| pts[r.start as usize..r.end as usize].iter().map(|p| cache.find(p)).collect::<Vec<_>>(),
            |mut a, b| {
                a.extend(b);
                a
            },
        )
        .unwrap_or_default();
        for (p, hit) in pts.iter().zip(hits) {
            let cert = match hit.or_else(|| cache.find(p)) {
                Some(c) => c,
                None => {
                    let lp = base.with_rho(&point_rho(p, n));
                    lp_solves += 1;
                    match solve(&lp) {
                        Outcome::Infeasible { certificate } => {
                            if !verify_certificate(&lp, &certificate) {
                                return Err(Error::Unsupported("solver returned an invalid certificate".into()));
                            }
                            cache.push(&lp, certificate);
                            cache.find(p).expect("new certificate covers its point")
                        }
                        Outcome::Feasible { witness } => {
                            if !verify_witness(&lp, &witness) {
                                return Err(Error::Unsupported("solver returned an invalid witness".into()));
                            }
                            return Ok(ScanReport {
                                grid: n,
                                bound: rational::ratio(level as i64, n as i64),
                                feasible_point: Some((*p, witness)),
                                infeasible,
                                certificates: cache.certs,
                                lp_solves,
                            });
                        }
                    }
                }
            };
            infeasible.push(Covered { point: *p, certificate: cert });
        }
    }
    Ok(ScanReport { grid: n, bound: rational::zero(), feasible_point: None, infeasible, certificates: cache.certs, lp_solves })
}

#[derive(Debug, Clone)]
pub struct SlicePoint {
    pub x: Rational,
    pub outcome: Outcome,
}

/// `rho(abc) = rho(a|b|c) = x` with the rest split evenly over the other three.
pub fn symmetric_rho(x: &Rational) -> Result<[Rational; 5]> {
    let rest = (rational::one() - x - x) / rational::int(3);
    if x.is_negative() || rest.is_negative() {
        return Err(Error::InvalidModel(format!("symmetric slice needs 0 <= x <= 1/2, got {}", rational::fmt(x))));
    }
    Ok([x.clone(), rest.clone(), rest.clone(), rest, x.clone()])
}

fn slice_lp(profiles: &[Profile], x: &Rational) -> Result<MarginalLP> {
    let rho = symmetric_rho(x)?;
    Ok(MarginalLP { profiles: profiles.to_vec(), rhs: super::rhs_of(&rho), rho })
}

pub fn symmetric_slice(profiles: &[Profile], xs: &[Rational]) -> Result<Vec<SlicePoint>> {
    xs.iter().map(|x| Ok(SlicePoint { x: x.clone(), outcome: solve(&slice_lp(profiles, x)?) })).collect()
}

/// Bracket `[feasible, infeasible]` around the feasibility threshold on the
/// symmetric slice, with proofs at both ends.
#[derive(Debug, Clone)]
pub struct Threshold {
    pub feasible: Rational,
    pub infeasible: Rational,
    pub witness: Vec<(usize, Rational)>,
    pub certificate: Certificate,
}

impl Threshold {
    pub fn to_json(&self) -> Value {
        json!({
            "feasible": rational::fmt(&self.feasible),
            "infeasible": rational::fmt(&self.infeasible),
            "feasible_float": rational::to_f64(&self.feasible),
            "infeasible_float": rational::to_f64(&self.infeasible),
        })
    }
}

/// Bisects the symmetric slice between a feasible and an infeasible end (in
/// either order) until they are closer than `1 / den`.
pub fn slice_threshold(profiles: &[Profile], feasible: Rational, infeasible: Rational, den: u64) -> Result<Threshold> {
    let at = |x: &Rational| -> Result<Outcome> { Ok(solve(&slice_lp(profiles, x)?)) };
    let (mut inside, mut outside) = (feasible, infeasible);
    let (mut o_in, mut o_out) = (at(&inside)?, at(&outside)?);
    if !o_in.is_feasible() || o_out.is_feasible() {
        return Err(Error::Options("slice threshold needs a feasible end and an infeasible end".into()));
    }
    let width = rational::ratio(1, den as i64);
    while (&outside - &inside).abs() >= width {
        let mid = (&inside + &outside) / rational::int(2);
        let o = at(&mid)?;
        if o.is_feasible() {
            inside = mid;
            o_in = o;
        } else {
            outside = mid;
            o_out = o;
        }
    }
    match (o_in, o_out) {
        (Outcome::Feasible { witness }, Outcome::Infeasible { certificate }) => Ok(Threshold { feasible: inside, infeasible: outside, witness, certificate }),
        _ => unreachable!("ends keep their status"),
    }
}

/// Points and certificates as stored by a scan, read back for re-checking.
#[derive(Debug, Clone)]
pub struct StoredScan {
    pub grid: u32,
    pub bound: Rational,
    pub infeasible: Vec<Covered>,
    pub certificates: Vec<Certificate>,
}

impl StoredScan {
    pub fn from_report(r: &ScanReport) -> Self {
        Self { grid: r.grid, bound: r.bound.clone(), infeasible: r.infeasible.clone(), certificates: r.certificates.clone() }
    }

    /// Reads the output of `ScanReport::to_json(true)`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidModel(format!("scan file: {m}"));
        let grid = v.get("grid").and_then(Value::as_u64).ok_or_else(|| bad("missing grid"))? as u32;
        if grid == 0 || grid > MAX_GRID {
            return Err(bad("grid out of range"));
        }
        let bound = rational::parse(v.get("bound").and_then(Value::as_str).ok_or_else(|| bad("missing bound"))?)?;
        let certificates = v
            .get("certificate_list")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing certificate_list"))?
            .iter()
            .map(Certificate::from_json)
            .collect::<Result<Vec<_>>>()?;
        let mut infeasible = Vec::new();
        for p in v.get("points").and_then(Value::as_array).ok_or_else(|| bad("missing points"))? {
            let c = p.get("certificate").and_then(Value::as_u64).ok_or_else(|| bad("point without certificate"))? as usize;
            let rho = p.get("rho").ok_or_else(|| bad("point without rho"))?;
            let mut point = [0u32; 5];
            for (i, name) in j3::NAMES.iter().enumerate() {
                let q = rational::parse(rho.get(*name).and_then(Value::as_str).ok_or_else(|| bad("rho entry missing"))?)?;
                let k = q * Rational::from_integer(grid.into());
                if !k.is_integer() || k.is_negative() {
                    return Err(bad("rho is not on the grid"));
                }
                point[i] = k.to_integer().to_u32().ok_or_else(|| bad("rho is not on the grid"))?;
            }
            if point.iter().sum::<u32>() != grid {
                return Err(bad("rho does not sum to one"));
            }
            infeasible.push(Covered { point, certificate: c });
        }
        Ok(Self { grid, bound, infeasible, certificates })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanCheck {
    pub points: usize,
    pub certificates: usize,
    /// Certificates failing the column condition.
    pub bad_certificates: Vec<usize>,
    /// Points where the named certificate is not positive.
    pub uncovered: Vec<[u32; 5]>,
    /// Grid points above the bound that the file does not list.
    pub missing: Vec<[u32; 5]>,
}

impl ScanCheck {
    pub fn pass(&self) -> bool {
        self.bad_certificates.is_empty() && self.uncovered.is_empty() && self.missing.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pass": self.pass(),
            "points": self.points,
            "certificates": self.certificates,
            "bad_certificates": self.bad_certificates,
            "uncovered": self.uncovered,
            "missing": self.missing,
        })
    }
}

/// Re-checks a stored scan against the columns alone: each certificate's
/// column condition once, then `y . b(rho) > 0` at each listed point, then
/// that every grid point above the bound is listed.
pub fn verify_stored(profiles: &[Profile], s: &StoredScan) -> ScanCheck {
    let lp = MarginalLP { profiles: profiles.to_vec(), rho: point_rho(&[s.grid, 0, 0, 0, 0], s.grid), rhs: Vec::new() };
    let good: Vec<bool> = s.certificates.iter().map(|c| c.dual.len() == super::ROWS && columns_ok(&lp, c)).collect();
    let bad_certificates = (0..good.len()).filter(|&i| !good[i]).collect();
    let uncovered = s
        .infeasible
        .iter()
        .filter(|c| {
            !(c.certificate < good.len() && good[c.certificate] && s.certificates[c.certificate].value_at(&point_rho(&c.point, s.grid)).is_positive())
        })
        .map(|c| c.point)
        .collect();
    let listed: std::collections::HashSet<[u32; 5]> = s.infeasible.iter().map(|c| c.point).collect();
    let mut missing = Vec::new();
    for level in 0..=s.grid / 2 {
        if rational::ratio(level as i64, s.grid as i64) <= s.bound {
            continue;
        }
        missing.extend(level_points(s.grid, level).into_iter().filter(|p| !listed.contains(p)));
    }
    ScanCheck { points: s.infeasible.len(), certificates: s.certificates.len(), bad_certificates, uncovered, missing }
}

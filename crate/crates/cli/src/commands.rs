use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use perclab::alpha3::{self, Functional, MaximizeOptions, ParamFamily};
use perclab::dist::PartitionDistribution;
use perclab::engine::{self, EngineOptions, KmaxQuery};
use perclab::inequalities::{self, Check};
use perclab::lp::{self, Certificate, MarginalLP, Outcome, Profile, ScanOptions, StoredScan};
use perclab::manifest::{sha256_hex, RunManifest};
use perclab::random::{self, RandomSpec};
use perclab::rational::{self, ratio, Rational};
use perclab::tuples::{enumerate_feasible, FeasibleSet, Slice};
use perclab::{swap, transforms, Graph, Model};
use serde_json::{json, Value};

use crate::{Cli, Cmd, Search};

/// Everything a subcommand produced, before anything is written.
pub struct Run {
    pub json: Value,
    /// Extra files and their contents.
    pub side: Vec<(PathBuf, Vec<u8>)>,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub violation: bool,
}

impl Run {
    fn new(json: Value) -> Self {
        Self { json, side: Vec::new(), inputs: Vec::new(), seed: None, violation: false }
    }

    fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }
}

pub fn name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Dist { .. } => "dist",
        Cmd::Transform { .. } => "transform",
        Cmd::SwapVerify { .. } => "swap-verify",
        Cmd::TupleEnum { .. } => "tuple-enum",
        Cmd::LpScan { .. } => "lp-scan",
        Cmd::Certify { .. } => "certify",
        Cmd::Optimize { .. } => "optimize",
        Cmd::Probe { .. } => "probe",
        Cmd::Check { .. } => "check",
        Cmd::Replay { .. } => "replay",
    }
}

pub fn render(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn read_json(p: &Path) -> Result<Value> {
    serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))
}

/// Line and column (1-based) of the first occurrence of `needle`.
fn locate(text: &str, needle: &str) -> Option<(usize, usize)> {
    let at = text.find(needle)?;
    let line = text[..at].matches('\n').count() + 1;
    let col = at - text[..at].rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, col))
}

fn load_model(p: &Path) -> Result<Model> {
    let text = read(p)?;
    Model::from_json_str(&text).map_err(|e| match &e {
        perclab::Error::BadProbability(s, _) => match locate(&text, &format!("\"{s}\"")) {
            Some((l, c)) => anyhow!(e).context(format!("{}:{l}:{c}", p.display())),
            None => anyhow!(e).context(p.display().to_string()),
        },
        _ => anyhow!(e).context(p.display().to_string()),
    })
}

fn load_bond(p: &Path) -> Result<Graph> {
    match load_model(p)? {
        Model::Bond(g) => Ok(g),
        m => bail!("{}: expected a bond model, got a {} model", p.display(), m.kind()),
    }
}

fn engine_opts(workers: usize) -> Result<EngineOptions> {
    Ok(EngineOptions::from_env()?.workers(workers))
}

fn load_family(s: &str) -> Result<ParamFamily> {
    if alpha3::BUILTIN_FAMILIES.contains(&s) {
        return Ok(ParamFamily::builtin(s)?);
    }
    let p = Path::new(s);
    if !p.exists() {
        bail!("{s:?} is neither a built-in family ({}) nor a file", alpha3::BUILTIN_FAMILIES.join(", "));
    }
    Ok(ParamFamily::from_json(&read_json(p)?)?)
}

fn is_file_family(s: &str) -> bool {
    !alpha3::BUILTIN_FAMILIES.contains(&s)
}

fn max_options(s: &Search, workers: usize) -> MaximizeOptions {
    MaximizeOptions { starts: s.starts, budget: s.budget, seed: s.seed, workers, ..MaximizeOptions::default() }
}

fn profiles(bits: Option<&Path>, workers: usize) -> Result<Vec<Profile>> {
    let f = match bits {
        Some(p) => FeasibleSet::read(p, Slice::full()).with_context(|| format!("reading {}", p.display()))?,
        None => enumerate_feasible(&Slice::full(), workers),
    };
    Ok(lp::aggregate_profiles(&f)?)
}

fn parse_rho_values(s: &str) -> Result<[Rational; 5]> {
    let v: Vec<Rational> = s.split(',').map(|x| rational::parse(x.trim())).collect::<perclab::Result<_>>()?;
    v.try_into().map_err(|v: Vec<Rational>| anyhow!("--rho-values needs 5 entries, got {}", v.len()))
}

fn rho_j3(rho: &PartitionDistribution) -> Result<[Rational; 5]> {
    if rho.k() != 3 {
        bail!("the marginal LP needs a 3-terminal distribution, got {} terminals", rho.k());
    }
    Ok(std::array::from_fn(|i| rho.probs()[i].clone()))
}

fn checks_json(cs: &[Check]) -> Value {
    Value::Array(cs.iter().map(Check::to_json).collect())
}

pub fn run(cli: &Cli) -> Result<Run> {
    let workers = cli.workers.unwrap_or_else(perclab::par::default_workers).max(1);
    match &cli.cmd {
        Cmd::Dist { model, mode, samples, seed } => {
            let m = load_model(model)?;
            if mode == "mc" {
                let mut opts = EngineOptions::monte_carlo(*samples, *seed).workers(workers);
                opts.cap = EngineOptions::from_env()?.cap;
                let est = engine::monte_carlo(&m, &opts)?;
                let mut v = est.dist.to_json();
                v["model_kind"] = m.kind().into();
                v["mode"] = "mc".into();
                v["samples"] = est.samples.into();
                v["seed"] = est.seed.into();
                v["counts"] = json!(est.counts);
                let mut r = Run::new(v).input(model);
                r.seed = Some(*seed);
                return Ok(r);
            }
            let d = engine::distribution(&m, &engine_opts(workers)?)?;
            let mut v = d.to_json();
            v["model_kind"] = m.kind().into();
            v["mode"] = "exact".into();
            Ok(Run::new(v).input(model))
        }
        Cmd::Transform { model, to, verify } => {
            let m = load_model(model)?;
            let (out, map_json) = match (&m, to.as_str()) {
                (Model::Bond(g), "site") => {
                    let (s, map) = transforms::bond_to_site(g);
                    let j = map.to_json(&s.vertices);
                    (Model::Site(s), j)
                }
                (Model::Hyper(h), "site") => {
                    let (s, map) = transforms::hyper_to_site(h);
                    let j = map.to_json(&s.vertices);
                    (Model::Site(s), j)
                }
                (Model::Site(s), "hyper") => {
                    let (h, map) = transforms::site_to_hyper(s);
                    let j = map.to_json(&h.vertices);
                    (Model::Hyper(h), j)
                }
                (Model::Bond(g), "hyper") => {
                    let (s, m1) = transforms::bond_to_site(g);
                    let (h, m2) = transforms::site_to_hyper(&s);
                    let mut j = serde_json::Map::new();
                    for (i, name) in m1.source_names.iter().enumerate() {
                        let k = s.terminals.iter().position(|&t| t == m1.targets[i]).expect("mapped terminal");
                        j.insert(name.clone(), h.vertices[m2.targets[k]].clone().into());
                    }
                    (Model::Hyper(h), Value::Object(j))
                }
                (m, t) => bail!("no transform from a {} model to {t}", m.kind()),
            };
            let mut v = json!({
                "schema": 1,
                "source_kind": m.kind(),
                "model": out.to_json(),
                "terminal_map": map_json,
            });
            let mut violation = false;
            if *verify {
                let opts = engine_opts(workers)?;
                let c = transforms::verify_simulation(&engine::distribution(&m, &opts)?, &engine::distribution(&out, &opts)?)?;
                violation = !c.equal;
                v["verify"] = c.to_json();
            }
            let mut r = Run::new(v).input(model);
            r.violation = violation;
            Ok(r)
        }
        Cmd::SwapVerify { model, schedules, table } => {
            let g = load_bond(model)?;
            let names: Vec<String> = if schedules.is_empty() {
                swap::BUILTIN_SCHEDULES.iter().map(|s| s.to_string()).collect()
            } else {
                schedules.clone()
            };
            let mut pass = true;
            let mut reports = Vec::new();
            for n in &names {
                let rep = swap::verify_builtin(&g, n, workers)?;
                pass &= rep.pass;
                reports.push(rep.to_json(*table));
            }
            let key = swap::verify_key_observation(&g, workers)?;
            let fin = swap::final_inequality_report(&g, workers)?;
            pass &= key.pass && fin.pass();
            let v = json!({
                "schema": 1,
                "pass": pass,
                "schedules": reports,
                "key_observation": key.to_json(),
                "final": fin.to_json(),
            });
            let mut r = Run::new(v).input(model);
            r.violation = !pass;
            Ok(r)
        }
        Cmd::TupleEnum { slice, bits } => {
            let sl = match slice {
                Some(s) => Slice::parse(s)?,
                None => Slice::full(),
            };
            let f = enumerate_feasible(&sl, workers);
            let mut v = f.summary();
            v["bits"] = bits.display().to_string().into();
            let mut r = Run::new(v);
            r.side.push((bits.clone(), f.to_bytes()));
            Ok(r)
        }
        Cmd::LpScan { bits, grid, certs, no_threshold } => {
            let ps = profiles(bits.as_deref(), workers)?;
            let rep = lp::scan(&ps, &ScanOptions { grid: *grid, workers })?;
            let mut v = rep.to_json(false);
            v["columns"] = ps.len().into();
            if !no_threshold {
                let upper = lp::slice_threshold(&ps, ratio(3, 10), ratio(2, 5), 10_000)?;
                let lower = lp::slice_threshold(&ps, ratio(3, 10), ratio(1, 4), 10_000)?;
                v["symmetric_slice"] = json!({"upper": upper.to_json(), "lower": lower.to_json()});
            }
            let mut r = Run::new(v);
            if let Some(b) = bits {
                r.inputs.push(b.clone());
            }
            if let Some(c) = certs {
                r.side.push((c.clone(), render(&rep.to_json(true)).into_bytes()));
            }
            Ok(r)
        }
        Cmd::Certify { bits, rho, rho_values, certificate, scan, save_certificate } => {
            let ps = profiles(bits.as_deref(), workers)?;
            let mut inputs: Vec<PathBuf> = bits.iter().cloned().collect();
            if let Some(s) = scan {
                let stored = StoredScan::from_json(&read_json(s)?)?;
                let chk = lp::verify_stored(&ps, &stored);
                let mut v = chk.to_json();
                v["schema"] = 1.into();
                v["grid"] = stored.grid.into();
                v["bound"] = rational::fmt(&stored.bound).into();
                v["bound_float"] = rational::to_f64(&stored.bound).into();
                inputs.push(s.clone());
                let mut r = Run::new(v);
                r.inputs = inputs;
                r.violation = !chk.pass();
                return Ok(r);
            }
            let point = match (rho, rho_values) {
                (Some(p), _) => {
                    inputs.push(p.clone());
                    rho_j3(&PartitionDistribution::from_json(&read_json(p)?)?)?
                }
                (None, Some(s)) => parse_rho_values(s)?,
                (None, None) => bail!("certify needs --rho, --rho-values or --scan"),
            };
            let lp = MarginalLP::new(ps, &PartitionDistribution::j3(point.clone())?)?;
            let mut v = json!({
                "schema": 1,
                "rho": point.iter().map(rational::fmt).collect::<Vec<_>>(),
                "rho_float": point.iter().map(rational::to_f64).collect::<Vec<_>>(),
            });
            let mut side = Vec::new();
            let violation = if let Some(c) = certificate {
                inputs.push(c.clone());
                let cert = Certificate::from_json(&read_json(c)?)?;
                let ok = lp::verify_certificate(&lp, &cert);
                v["certificate_valid"] = ok.into();
                v["value"] = rational::fmt(&cert.value_at(&point)).into();
                !ok
            } else {
                let out = lp::solve(&lp);
                let ok = match &out {
                    Outcome::Feasible { witness } => lp::verify_witness(&lp, witness),
                    Outcome::Infeasible { certificate } => lp::verify_certificate(&lp, certificate),
                };
                if !ok {
                    bail!("solver result failed exact verification");
                }
                v["result"] = out.to_json(&lp);
                v["verified"] = true.into();
                if let (Outcome::Infeasible { certificate }, Some(p)) = (&out, save_certificate) {
                    side.push((p.clone(), render(&certificate.to_json()).into_bytes()));
                }
                !out.is_feasible()
            };
            let mut r = Run::new(v);
            r.inputs = inputs;
            r.side = side;
            r.violation = violation;
            Ok(r)
        }
        Cmd::Optimize { family, search } => {
            let f = load_family(family)?;
            let res = alpha3::maximize(&f, &max_options(search, workers), &engine_opts(workers)?)?;
            let mut r = Run::new(res.to_json());
            if is_file_family(family) {
                r.inputs.push(family.into());
            }
            r.seed = Some(search.seed);
            Ok(r)
        }
        Cmd::Probe { family, functional, constraint, deltas, search } => {
            let f = load_family(family)?;
            let fun = Functional::parse(functional)?;
            let rep = alpha3::probe_conjecture(&f, fun, constraint, deltas, &max_options(search, workers), &engine_opts(workers)?)?;
            let mut r = Run::new(rep.to_json());
            if is_file_family(family) {
                r.inputs.push(family.into());
            }
            r.seed = Some(search.seed);
            Ok(r)
        }
        Cmd::Check { model, rho, random: n, seed, terminals } => {
            let opts = engine_opts(workers)?;
            if let Some(p) = rho {
                let d = PartitionDistribution::from_json(&read_json(p)?)?;
                let cs = dist_checks(&d)?;
                let ok = cs.iter().all(|c| c.satisfied);
                let mut r = Run::new(json!({"schema": 1, "pass": ok, "checks": checks_json(&cs)})).input(p);
                r.violation = !ok;
                return Ok(r);
            }
            if let Some(p) = model {
                let m = load_model(p)?;
                let cs = model_checks(&m, &opts)?;
                let ok = cs.iter().all(|c| c.satisfied);
                let mut r = Run::new(json!({"schema": 1, "pass": ok, "checks": checks_json(&cs)})).input(p);
                r.violation = !ok;
                return Ok(r);
            }
            let n = n.ok_or_else(|| anyhow!("check needs a model, --rho or --random"))?;
            let spec = RandomSpec { terminals: *terminals, ..RandomSpec::default() };
            let mut rng = random::rng(*seed);
            let mut failures = Vec::new();
            let mut count = 0usize;
            for i in 0..n {
                let g = random::graph(&mut rng, &spec);
                let m = Model::Bond(g);
                let cs = model_checks(&m, &opts)?;
                count += cs.len();
                let bad: Vec<&Check> = cs.iter().filter(|c| !c.satisfied).collect();
                if !bad.is_empty() {
                    failures.push(json!({
                        "index": i,
                        "model": m.to_json(),
                        "failed": bad.into_iter().map(Check::to_json).collect::<Vec<_>>(),
                    }));
                }
            }
            let ok = failures.is_empty();
            let v = json!({"schema": 1, "pass": ok, "graphs": n, "seed": seed, "terminals": terminals, "checks": count, "failures": failures});
            let mut r = Run::new(v);
            r.seed = Some(*seed);
            r.violation = !ok;
            Ok(r)
        }
        Cmd::Replay { manifest } => replay(manifest),
    }
}

/// The inequality suite that applies to a distribution of this arity.
fn dist_checks(d: &PartitionDistribution) -> Result<Vec<Check>> {
    Ok(match d.k() {
        3 => inequalities::evaluate_inequalities(d)?.checks,
        4 => vec![inequalities::four_terminal_pair_bound(d)?],
        k => bail!("no inequality suite for {k} terminals (3 or 4 supported)"),
    })
}

/// Distribution checks plus, for bond models, the cluster-size inequality
/// over all vertices at threshold max(1, n/3) seen from the first terminal.
fn model_checks(m: &Model, opts: &EngineOptions) -> Result<Vec<Check>> {
    let d = engine::distribution(m, opts)?;
    let mut cs = dist_checks(&d)?;
    if let Model::Bond(g) = m {
        let n = g.vertices.len();
        let q = KmaxQuery { set: (0..n).collect(), lambda: rational::int((n / 3).max(1) as i64), u: g.terminals.first().copied() };
        cs.extend(engine::hutchcroft_checks(g, &q, 1, opts)?);
    }
    Ok(cs)
}

fn replay(path: &Path) -> Result<Run> {
    let m = RunManifest::from_json_str(&read(path)?)?;
    let stale = m.stale_inputs()?;
    let cli = <Cli as clap::Parser>::try_parse_from(std::iter::once("perclab".to_string()).chain(m.args.iter().cloned()))
        .map_err(|e| anyhow!("manifest arguments do not parse: {e}"))?;
    if matches!(cli.cmd, Cmd::Replay { .. }) {
        bail!("refusing to replay a replay");
    }
    let again = run(&cli)?;
    let digest = sha256_hex(render(&again.json).as_bytes());
    let side: Vec<Value> = m
        .side_outputs
        .iter()
        .map(|s| {
            let got = again.side.iter().find(|(p, _)| p.display().to_string() == s.path).map(|(_, b)| sha256_hex(b));
            json!({"path": s.path, "match": got.as_deref() == Some(s.sha256.as_str())})
        })
        .collect();
    let same = digest == m.output_sha256 && side.iter().all(|s| s["match"] == true);
    let v = json!({
        "schema": 1,
        "subcommand": m.subcommand,
        "match": same,
        "stale_inputs": stale,
        "expected_sha256": m.output_sha256,
        "sha256": digest,
        "side_outputs": side,
    });
    let mut r = Run::new(v).input(path);
    r.inputs.extend(m.inputs.iter().map(|i| PathBuf::from(&i.path)));
    r.violation = !same;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_reports_line_and_column() {
        let text = "{\n  \"p\": \"1/x\"\n}";
        assert_eq!(locate(text, "\"1/x\""), Some((2, 8)));
        assert_eq!(locate(text, "zz"), None);
    }

    #[test]
    fn rho_values_parse() {
        let r = parse_rho_values("1/2, 1/8,1/8,1/8,1/8").unwrap();
        assert_eq!(r[0], ratio(1, 2));
        assert!(parse_rho_values("1/2,1/2").is_err());
    }
}

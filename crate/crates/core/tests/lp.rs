use std::sync::OnceLock;

use perclab::dist::PartitionDistribution;
use perclab::engine::{bond_distribution, EngineOptions};
use perclab::lp::*;
use perclab::random::{self, RandomSpec};
use perclab::rational::{self, ratio, Rational};
use perclab::tuples::{enumerate_feasible, FeasibleSet, Slice};
use rand::Rng;

fn feasible_set() -> &'static FeasibleSet {
    static F: OnceLock<FeasibleSet> = OnceLock::new();
    F.get_or_init(|| enumerate_feasible(&Slice::full(), perclab::par::default_workers()))
}

fn profiles() -> &'static [Profile] {
    static P: OnceLock<Vec<Profile>> = OnceLock::new();
    P.get_or_init(|| aggregate_profiles(feasible_set()).unwrap())
}

fn lp_at(rho: [Rational; 5]) -> MarginalLP {
    MarginalLP::new(profiles().to_vec(), &PartitionDistribution::j3(rho).unwrap()).unwrap()
}

#[test]
fn enumeration_counts() {
    let f = feasible_set();
    assert_eq!(f.count(), 1265);
    assert_eq!(f.counts_by_j1(), [25, 240, 240, 60, 700]);
    assert!(f.is_bc_symmetric());
    assert_eq!(profiles().len(), 1265);
}

#[test]
fn symmetric_quarter_is_infeasible() {
    let lp = lp_at(symmetric_rho(&ratio(1, 4)).unwrap());
    let Outcome::Infeasible { certificate } = solve(&lp) else { panic!("x = 1/4 must be infeasible") };
    assert!(verify_certificate(&lp, &certificate));
    // the same certificate, read back from JSON
    let back = Certificate::from_json(&serde_json::from_str(&certificate.to_json().to_string()).unwrap()).unwrap();
    assert!(verify_certificate(&lp, &back));
    let mut bad = back.clone();
    let j = bad.dual.iter().position(|y| *y < Rational::from_integer(0.into())).unwrap();
    bad.dual[j] = ratio(1000, 1);
    assert!(!verify_certificate(&lp, &bad));
}

#[test]
fn symmetric_slice_threshold() {
    let xs: Vec<Rational> = (0..=26).map(|k| ratio(k, 100)).collect();
    for p in symmetric_slice(profiles(), &xs).unwrap() {
        assert!(!p.outcome.is_feasible(), "x = {}", rational::fmt(&p.x));
    }
    let t = slice_threshold(profiles(), ratio(3, 10), ratio(2, 5), 10_000).unwrap();
    assert!(t.feasible >= ratio(368, 1000) && t.infeasible <= ratio(369, 1000), "{:?}", t.to_json());
    let lo = t.feasible.clone();
    assert!(verify_witness(&lp_at(symmetric_rho(&lo).unwrap()), &t.witness));
    assert!(verify_certificate(&lp_at(symmetric_rho(&t.infeasible).unwrap()), &t.certificate));
    let low = slice_threshold(profiles(), ratio(3, 10), ratio(1, 4), 10_000).unwrap();
    // the lower end of the feasible stretch sits at 2 - sqrt 3
    let edge = 2.0 - 3f64.sqrt();
    assert!(rational::to_f64(&low.infeasible) - 1e-4 <= edge && edge <= rational::to_f64(&low.feasible) + 1e-4);
}

#[test]
fn min_above_analytic_bound_with_symmetric_rest() {
    let m = ratio(376, 1000);
    let rest = (rational::one() - &m - &m) / rational::int(3);
    let lp = lp_at([m.clone(), rest.clone(), rest.clone(), rest, m]);
    let Outcome::Infeasible { certificate } = solve(&lp) else { panic!("must be infeasible") };
    assert!(verify_certificate(&lp, &certificate));
}

#[test]
fn asymmetric_rest_reaches_golden_bound() {
    // with no mass on ab|c and ac|b the LP allows min up to (3 - sqrt 5) / 2
    let lp = lp_at([ratio(38, 100), rational::zero(), rational::zero(), ratio(24, 100), ratio(38, 100)]);
    let Outcome::Feasible { witness } = solve(&lp) else { panic!("must be feasible") };
    assert!(verify_witness(&lp, &witness));
    let lp = lp_at([ratio(383, 1000), rational::zero(), rational::zero(), ratio(234, 1000), ratio(383, 1000)]);
    assert!(!solve(&lp).is_feasible());
}

#[test]
fn scan_bound_and_refinement() {
    let coarse = scan(profiles(), &ScanOptions { grid: 50, workers: 2 }).unwrap();
    let fine = scan(profiles(), &ScanOptions { grid: 100, workers: 2 }).unwrap();
    assert_eq!(fine.bound, ratio(38, 100));
    assert!(fine.bound <= &coarse.bound + ratio(1, 50));
    assert!(coarse.bound <= &fine.bound + ratio(1, 100));
    assert!(fine.bound_f64() >= 0.2906);
    for c in &fine.infeasible {
        let rho: [Rational; 5] = c.point.map(|k| ratio(k as i64, 100));
        assert!(fine.certificates[c.certificate].value_at(&rho) > rational::zero());
    }
    let (p, w) = fine.feasible_point.clone().unwrap();
    assert!(verify_witness(&lp_at(p.map(|k| ratio(k as i64, 100))), &w));
}

#[test]
fn derived_inequalities_follow_from_the_lp() {
    let mut r = random::rng(12);
    let mut samples = Vec::new();
    for _ in 0..25 {
        let g = random::graph(&mut r, &RandomSpec { elements: (2, 8), extra: (0, 3), ..RandomSpec::default() });
        samples.push((bond_distribution(&g, &EngineOptions::exact()).unwrap(), true));
    }
    for _ in 0..40 {
        let w: [i64; 5] = std::array::from_fn(|_| r.gen_range(0..20));
        let total: i64 = w.iter().sum::<i64>().max(1);
        let mut rho: [Rational; 5] = w.map(|k| ratio(k, total));
        if w.iter().all(|&k| k == 0) {
            rho[0] = rational::one();
        }
        samples.push((PartitionDistribution::j3(rho).unwrap(), false));
    }
    let rep = check_derived_inequalities(feasible_set(), &samples).unwrap();
    assert!(rep.pass(), "{}", rep.to_json());
    assert!(rep.samples.iter().any(|s| !s.lp_feasible));
}

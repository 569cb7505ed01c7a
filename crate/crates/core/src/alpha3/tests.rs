use super::*;
use crate::rational::ratio;

fn eng() -> EngineOptions {
    EngineOptions::exact()
}

fn quick() -> MaximizeOptions {
    MaximizeOptions { starts: 4, budget: 3000, seed: 7, workers: 2, ..MaximizeOptions::default() }
}

#[test]
fn bind_examples() {
    let t = ParamFamily::builtin("triangle").unwrap();
    let g = t.bind(&[0.5]).unwrap();
    assert!(g.edges.iter().all(|e| e.p == ratio(1, 2)));
    assert!(t.bind(&[0.0]).unwrap().edges.iter().all(|e| e.p == rational::zero()));
    assert!(t.bind(&[1.5]).is_err());
    assert!(t.bind(&[0.5, 0.5]).is_err());
    let k = ParamFamily::builtin("k23_double").unwrap();
    let g = k.bind(&[0.32537, 0.19231]).unwrap();
    assert_eq!(g.edges.len(), 8);
    assert_eq!(g.edges.iter().filter(|e| e.p == ratio(32537, 100000)).count(), 6);
    assert_eq!(g.edges.iter().filter(|e| e.p == ratio(19231, 100000)).count(), 2);
    assert_eq!(t.bind(&[1.0 / 3.0]).unwrap().edges[0].p, ratio(333333, 1_000_000));
}

#[test]
fn objective_examples() {
    let t = ParamFamily::builtin("triangle").unwrap();
    let o = objective(&t, &[0.3473], &eng()).unwrap();
    assert!((rational::to_f64(&o.together) - 0.278).abs() < 1e-3);
    assert!((rational::to_f64(&o.together) - rational::to_f64(&o.separate)).abs() < 1e-3);
    assert!((rational::to_f64(&o.value) - o.value_f64).abs() < 1e-12);
    let zero = objective(&t, &[0.0], &eng()).unwrap();
    assert_eq!(zero.value, rational::zero());
    assert_eq!(zero.separate, rational::one());
    let fig = objective(&ParamFamily::builtin("fig3").unwrap(), &[0.32537, 0.19231], &eng()).unwrap();
    assert!((rational::to_f64(&fig.value) - 0.29065).abs() < 5e-3, "{}", fig.to_json());
}

#[test]
fn triangle_optimum_solves_the_cubic() {
    let r = maximize(&ParamFamily::builtin("triangle").unwrap(), &quick(), &eng()).unwrap();
    let x = rational::to_f64(&r.exact.value);
    assert!((x * x * x - 24.0 * x * x + 3.0 * x + 1.0).abs() <= 1e-4, "x = {x}");
    assert!((0.277..=0.279).contains(&x));
    assert!(x <= r.value + 1e-9);
    assert!(!r.budget_exhausted);
}

#[test]
fn single_edge_never_joins_c() {
    let r = maximize(&ParamFamily::builtin("single_edge").unwrap(), &quick(), &eng()).unwrap();
    assert_eq!(r.exact.value, rational::zero());
}

#[test]
fn maximize_is_deterministic() {
    let f = ParamFamily::builtin("path").unwrap();
    let a = maximize(&f, &quick(), &eng()).unwrap();
    let b = maximize(&f, &MaximizeOptions { workers: 1, ..quick() }, &eng()).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.exact.value, b.exact.value);
}

#[test]
fn small_budget_is_reported() {
    let f = ParamFamily::builtin("triangle").unwrap();
    let r = maximize(&f, &MaximizeOptions { budget: 5, ..quick() }, &eng()).unwrap();
    assert!(r.budget_exhausted);
    assert!(maximize(&f, &MaximizeOptions { starts: 0, ..quick() }, &eng()).is_err());
}

#[test]
fn family_json_round_trip() {
    for name in ["triangle", "k23_double", "k34_matched", "path"] {
        let f = ParamFamily::builtin(name).unwrap();
        assert_eq!(ParamFamily::from_json(&f.to_json()).unwrap(), f);
    }
    let bad = serde_json::json!({"vertices": ["a", "b", "c"], "terminals": ["a", "b", "c"], "edges": [["a", "b", 1]]});
    assert!(ParamFamily::from_json(&bad).is_err());
    let missing = serde_json::json!({"vertices": ["a", "b"], "terminals": ["a", "b", "c"], "edges": [["a", "b", 0]]});
    assert!(ParamFamily::from_json(&missing).is_err());
}

#[test]
fn bc_symmetry_of_objective() {
    let f = ParamFamily::builtin("k23_double").unwrap();
    let o = objective(&f, &[0.3, 0.6], &eng()).unwrap();
    assert_eq!(o.rho[j3::AB_C], o.rho[j3::AC_B]);
}

#[test]
fn probe_on_a_cut_vertex_path() {
    // c separates a from b, so P(abc) = P(ac) P(bc) exactly
    let f = ParamFamily::builtin("path").unwrap();
    let rep = probe_conjecture(&f, Functional::AbcMinusProduct, "ab|c", &[1.0], &quick(), &eng()).unwrap();
    assert_eq!(rep.points[0].result.exact.value, rational::zero());
}

#[test]
fn probe_on_the_triangle() {
    let f = ParamFamily::builtin("triangle").unwrap();
    let rep = probe_conjecture(&f, Functional::AbcMinusProduct, "ab|c", &[0.01, 1.0], &quick(), &eng()).unwrap();
    let p = &rep.points[0];
    assert!(p.satisfied, "{}", p.to_json());
    assert!(p.result.exact.value >= p.remark_floor, "{}", p.to_json());
    assert!(rational::to_f64(&p.result.exact.value) > 0.01);
    let plain = maximize_functional(&f, Functional::AbcMinusProduct, &quick(), &eng()).unwrap();
    assert!((rep.points[1].result.value - plain.value).abs() < 1e-9);
    assert!(constraint_event("a~b && a!~c").unwrap() == constraint_event("ab|c").unwrap());
}

use super::*;
use crate::random::{self, RandomSpec};
use crate::rational::ratio;

fn path_abc() -> Graph {
    let h = ratio(1, 2);
    Graph::from_names(&["a", "b", "c"], &["a", "b", "c"], &[("a", "b", h.clone()), ("b", "c", h)]).unwrap()
}

fn triangle(p: Rational) -> Graph {
    Graph::from_names(&["a", "b", "c"], &["a", "b", "c"], &[("a", "b", p.clone()), ("a", "c", p.clone()), ("b", "c", p)]).unwrap()
}

fn k4() -> Graph {
    let h = ratio(1, 2);
    let names = ["a", "b", "c", "d"];
    let mut edges = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            edges.push((names[i], names[j], h.clone()));
        }
    }
    Graph::from_names(&names, &["a", "b", "c"], &edges).unwrap()
}

fn cfg(bits: u64, g: &Graph) -> Configuration {
    Configuration::new(bits, g.edges.len())
}

#[test]
fn components_examples() {
    let g = path_abc();
    assert_eq!(components(&g, cfg(0, &g)), vec![vec![0], vec![1], vec![2]]);
    assert_eq!(components(&g, cfg(0b11, &g)), vec![vec![0, 1, 2]; 3]);
    assert_eq!(components(&g, cfg(0b10, &g)), vec![vec![0], vec![1, 2], vec![1, 2]]);
}

#[test]
fn s_sets_on_path() {
    let g = path_abc();
    let t = s_sets(&g, cfg(0, &g)).unwrap();
    assert_eq!(t.s, [0b10, 0b11, 0b10]);
}

#[test]
fn s_sets_named_cases() {
    let g = k4();
    // edges: ab ac ad bc bd cd
    // abc: everything connected, S3 empty
    let all = s_sets(&g, cfg(0b111111, &g)).unwrap();
    assert_eq!(all.s[2], 0);
    // ac|b with only a-c open: S1 is every edge touching b or the a-c cluster
    let t = s_sets(&g, cfg(0b000010, &g)).unwrap();
    assert_eq!(t.s[0], 0b111111);
    // a|b|c all closed: S3 = edges touching b or c and not a
    let t = s_sets(&g, cfg(0, &g)).unwrap();
    assert_eq!(t.s[2], 0b111000);
}

#[test]
fn swap_identities() {
    let (a, b) = (Configuration::new(0b1010, 4), Configuration::new(0b0110, 4));
    assert_eq!(swap(a, b, 0b1111), a);
    assert_eq!(swap(a, b, 0), b);
    assert_eq!(swap(a, a, 0b0101), a);
    assert_eq!(swap(a, b, 0b0011).bits, 0b0110);
}

#[test]
fn swaps_reconstruct_the_pair() {
    let g = k4();
    let mut r = random::rng(1);
    for _ in 0..200 {
        let (c1, c2) = (cfg(rand::Rng::gen(&mut r), &g), cfg(rand::Rng::gen(&mut r), &g));
        let s = s_sets(&g, c1).unwrap().s[0];
        let (x, y) = (swap(c1, c2, s), swap(c2, c1, s));
        assert_eq!(swap(x, y, s), c1);
        assert_eq!(swap(y, x, s), c2);
    }
}

#[test]
fn fig1_schedule_examples() {
    let h = ratio(1, 2);
    let g = Graph::from_names(&["a", "m", "b"], &["a", "b"], &[("a", "m", h.clone()), ("m", "b", h)]).unwrap();
    let fig1 = PhaseSchedule::builtin("fig1").unwrap();
    let any = cfg(0b10, &g);
    assert_eq!(run_schedule(&g, &fig1, cfg(0b01, &g), any).unwrap(), 0b11);
    assert_eq!(run_schedule(&g, &fig1, cfg(0, &g), any).unwrap(), 0b01);
    let constant = PhaseSchedule::builtin("constant").unwrap();
    assert_eq!(run_schedule(&g, &constant, cfg(0, &g), any).unwrap(), 0b11);
    assert!(PhaseSchedule::builtin("nope").is_err());
}

struct Stuck;
impl SwapSchedule for Stuck {
    fn name(&self) -> &str {
        "stuck"
    }
    fn next(&self, _: &Graph, _: &Revealed) -> Option<(usize, bool)> {
        Some((0, true))
    }
}

struct Lazy;
impl SwapSchedule for Lazy {
    fn name(&self) -> &str {
        "lazy"
    }
    fn next(&self, _: &Graph, r: &Revealed) -> Option<(usize, bool)> {
        (r.assigned == 0).then_some((0, false))
    }
}

#[test]
fn bad_schedules_are_errors() {
    let g = path_abc();
    let c = cfg(0, &g);
    assert!(matches!(run_schedule(&g, &Stuck, c, c), Err(Error::Schedule(_))));
    assert!(matches!(run_schedule(&g, &Lazy, c, c), Err(Error::Schedule(_))));
    assert!(verify_tree_lemma(&g, &Lazy, 1).is_err());
}

#[test]
fn schedules_reproduce_closed_forms() {
    let mut r = random::rng(11);
    let spec = RandomSpec { elements: (1, 9), ..RandomSpec::default() };
    let scheds: Vec<PhaseSchedule> = ["s1", "s2", "s3"].iter().map(|n| PhaseSchedule::builtin(n).unwrap()).collect();
    for _ in 0..40 {
        let g = random::graph(&mut r, &spec);
        let m = g.edges.len();
        for c1 in 0..1u64 << m {
            let c2 = rand::Rng::gen::<u64>(&mut r) & full_mask(m);
            let t = s_sets(&g, cfg(c1, &g)).unwrap();
            for (i, s) in scheds.iter().enumerate() {
                assert_eq!(run_schedule(&g, s, cfg(c1, &g), cfg(c2, &g)).unwrap(), t.s[i], "{} on {:?}", s.name, g);
            }
        }
    }
}

#[test]
fn s_sets_ignore_edge_order() {
    let mut r = random::rng(5);
    for _ in 0..30 {
        let g = random::graph(&mut r, &RandomSpec::default());
        let m = g.edges.len();
        let mut rev = g.clone();
        rev.edges.reverse();
        let flip = |x: u64| (0..m).filter(|&i| x >> i & 1 == 1).fold(0u64, |acc, i| acc | 1 << (m - 1 - i));
        for c1 in 0..1u64 << m {
            let a = s_sets(&g, cfg(c1, &g)).unwrap();
            let b = s_sets(&rev, cfg(flip(c1), &rev)).unwrap();
            for i in 0..3 {
                assert_eq!(flip(b.s[i]), a.s[i]);
            }
        }
    }
}

#[test]
fn tree_lemma_examples() {
    let h = ratio(1, 2);
    let path = Graph::from_names(&["a", "m", "b"], &["a", "b"], &[("a", "m", h.clone()), ("m", "b", h)]).unwrap();
    let r = verify_builtin(&path, "fig1", 1).unwrap();
    assert!(r.pass);
    assert_eq!(r.pairs, 16);
    // uniform on 4 x 4 cells
    assert!(r.law.iter().all(|w| *w == r.law[0]));
    for name in ["s1", "s2", "s3", "constant", "fig1-second"] {
        let r = verify_builtin(&triangle(ratio(1, 3)), name, 2).unwrap();
        assert!(r.pass, "{name}");
        assert!(r.max_deviation.is_zero());
    }
    assert!(verify_builtin(&path, "s1", 1).is_err());
}

#[test]
fn key_observation_examples() {
    for g in [path_abc(), triangle(ratio(1, 2)), k4()] {
        let r = verify_key_observation(&g, 2).unwrap();
        assert!(r.pass, "{:?}", r.counterexample);
    }
}

#[test]
fn final_report_on_triangle() {
    let r = final_inequality_report(&triangle(ratio(1, 2)), 1).unwrap();
    assert!(r.pass());
    let eq = r.checks.iter().find(|c| c.name == "final").unwrap();
    assert_eq!(eq.lhs, ratio(3, 16));
    assert_eq!(eq.rhs, ratio(3, 8));
    let certain = final_inequality_report(&triangle(rational::one()), 1).unwrap();
    assert!(certain.pass());
    assert!(certain.joint.iter().all(|j| j.is_zero()));
}

#[test]
fn final_report_on_random_graphs() {
    let mut r = random::rng(21);
    let spec = RandomSpec { elements: (1, 6), ..RandomSpec::default() };
    for _ in 0..15 {
        let g = random::graph(&mut r, &spec);
        let rep = final_inequality_report(&g, 2).unwrap();
        assert!(rep.pass(), "{:?}", rep.checks);
    }
}

#[test]
fn pair_cap() {
    let edges: Vec<_> = (0..13).map(|_| ("a", "b", ratio(1, 2))).collect();
    let g = Graph::from_names(&["a", "b", "c"], &["a", "b", "c"], &edges).unwrap();
    assert!(matches!(verify_key_observation(&g, 1), Err(Error::CapExceeded { .. })));
}

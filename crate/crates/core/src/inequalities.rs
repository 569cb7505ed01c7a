//! Closed-form connectivity inequalities on three-terminal (and one
//! four-terminal) partition distributions.
//!
//! Notation: `t = P(abc)`, `x = P(ab|c)`, `y = P(ac|b)`, `z = P(a|bc)`,
//! `s = P(a|b|c)`.

use num_traits::Zero;
use serde::Serialize;

use crate::dist::PartitionDistribution;
use crate::error::{Error, Result};
use crate::event;
use crate::partition::j3::*;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: Rational,
    pub relation: Relation,
    pub rhs: Rational,
    /// Non-negative exactly when the check holds (zero for equalities).
    pub residual: Rational,
    pub satisfied: bool,
}

impl Check {
    pub fn new(name: &'static str, lhs: Rational, relation: Relation, rhs: Rational) -> Self {
        let (residual, satisfied) = match relation {
            Relation::Le => {
                let r = &rhs - &lhs;
                let ok = r >= Rational::zero();
                (r, ok)
            }
            Relation::Ge => {
                let r = &lhs - &rhs;
                let ok = r >= Rational::zero();
                (r, ok)
            }
            Relation::Eq => {
                let r = &lhs - &rhs;
                let ok = r.is_zero();
                (r, ok)
            }
        };
        Self { name, lhs, relation, rhs, residual, satisfied }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "lhs": rational::fmt(&self.lhs),
            "relation": self.relation,
            "rhs": rational::fmt(&self.rhs),
            "residual": rational::fmt(&self.residual),
            "residual_float": rational::to_f64(&self.residual),
            "satisfied": self.satisfied,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InequalityReport {
    pub checks: Vec<Check>,
}

impl InequalityReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "all_satisfied": self.all_satisfied(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn eq_final(rho: &[Rational]) -> Check {
    let (t, x, y, z, s) = (&rho[ABC], &rho[AB_C], &rho[AC_B], &rho[A_BC], &rho[A_B_C]);
    Check::new("final", (z + s) * (t + x + y), Relation::Le, x + y + z)
}

pub fn eq_computer(rho: &[Rational]) -> Check {
    let (t, x, y, z, s) = (&rho[ABC], &rho[AB_C], &rho[AC_B], &rho[A_BC], &rho[A_B_C]);
    Check::new("computer", (z + s) * (t + x + y), Relation::Le, x + y + z - x * x - y * y)
}

pub fn e2(rho: &[Rational]) -> Check {
    let (t, x, y, z, s) = (&rho[ABC], &rho[AB_C], &rho[AC_B], &rho[A_BC], &rho[A_B_C]);
    Check::new("e2", t * s, Relation::Ge, x * y + x * z + y * z)
}

/// `P(ab|c) P(ac ∪ bc) <= P(abc) - P(ac) P(bc)`; algebraically the same as `e2`.
pub fn remark_product_form(rho: &[Rational]) -> Check {
    let (t, x, y, z) = (&rho[ABC], &rho[AB_C], &rho[AC_B], &rho[A_BC]);
    Check::new("remark_product", x * (t + y + z), Relation::Le, t - (t + y) * (t + z))
}

/// Evaluates every three-terminal check. The two identities that hold when
/// `P(ab|c) = 0` are included only in that case.
pub fn evaluate_inequalities(rho: &PartitionDistribution) -> Result<InequalityReport> {
    if rho.k() != 3 {
        return Err(Error::Unsupported(format!("inequality suite needs 3 terminals, got {}", rho.k())));
    }
    let p = rho.probs();
    let mut checks = vec![eq_final(p), eq_computer(p), e2(p), remark_product_form(p)];
    if p[AB_C].is_zero() {
        let (t, y, z, s) = (&p[ABC], &p[AC_B], &p[A_BC], &p[A_B_C]);
        checks.push(Check::new("cut_product", s * t, Relation::Eq, y * z));
        checks.push(Check::new("cut_factor", t.clone(), Relation::Eq, (t + y) * (t + z)));
    }
    Ok(InequalityReport { checks })
}

/// Four-terminal instance `P(abcd) <= P(some pair together)^2`.
pub fn four_terminal_pair_bound(rho: &PartitionDistribution) -> Result<Check> {
    if rho.k() != 4 {
        return Err(Error::Unsupported(format!("needs 4 terminals, got {}", rho.k())));
    }
    let ps = rho.partition_set();
    let all = event::together(&ps, &[0, 1, 2, 3]);
    let mut pairs = crate::event::EventSet::empty(ps.len());
    for i in 0..4 {
        for j in i + 1..4 {
            pairs = pairs | event::together(&ps, &[i, j]);
        }
    }
    let lhs = crate::dist::event_probability(rho, &all)?;
    let u = crate::dist::event_probability(rho, &pairs)?;
    Ok(Check::new("four_terminal_pairs", lhs, Relation::Le, &u * &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn triangle_half() {
        let rho = PartitionDistribution::j3([ratio(1, 2), ratio(1, 8), ratio(1, 8), ratio(1, 8), ratio(1, 8)]).unwrap();
        let rep = evaluate_inequalities(&rho).unwrap();
        let f = rep.get("final").unwrap();
        assert_eq!(f.lhs, ratio(3, 16));
        assert_eq!(f.rhs, ratio(3, 8));
        assert!(f.satisfied);
        assert_eq!(rep.get("computer").unwrap().rhs, ratio(11, 32));
        assert!(rep.all_satisfied());
        assert!(rep.get("cut_product").is_none());
    }

    #[test]
    fn cut_vertex_identities() {
        // path a - c - b with P(a~c) = 1/3, P(c~b) = 1/5
        let (p, q) = (ratio(1, 3), ratio(1, 5));
        let one = ratio(1, 1);
        let rho = PartitionDistribution::j3([
            &p * &q,
            ratio(0, 1),
            &p * (&one - &q),
            (&one - &p) * &q,
            (&one - &p) * (&one - &q),
        ])
        .unwrap();
        let rep = evaluate_inequalities(&rho).unwrap();
        let cp = rep.get("cut_product").unwrap();
        assert_eq!(cp.lhs, ratio(8, 225));
        assert_eq!(cp.rhs, ratio(8, 225));
        let cf = rep.get("cut_factor").unwrap();
        assert_eq!(cf.lhs, ratio(1, 15));
        assert!(rep.all_satisfied());
    }

    #[test]
    fn symmetric_point_below_threshold_violates_e2() {
        let rho = PartitionDistribution::j3([ratio(1, 4), ratio(1, 6), ratio(1, 6), ratio(1, 6), ratio(1, 4)]).unwrap();
        let c = e2(rho.probs());
        assert_eq!(c.lhs, ratio(1, 16));
        assert_eq!(c.rhs, ratio(1, 12));
        assert!(!c.satisfied);
        // The product form is equivalent, so it must fail too.
        assert!(!remark_product_form(rho.probs()).satisfied);
    }

    #[test]
    fn rejects_wrong_arity() {
        let rho = PartitionDistribution::new(vec!["a".into(), "b".into()], vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        assert!(evaluate_inequalities(&rho).is_err());
    }
}

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::event::EventSet;
use crate::partition::PartitionSet;
use crate::rational::{self, Rational};

/// Exact probability law of the terminal partition, indexed canonically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionDistribution {
    terminals: Vec<String>,
    probs: Vec<Rational>,
}

impl PartitionDistribution {
    /// Validates non-negativity, the exact unit sum, and the length.
    pub fn new(terminals: Vec<String>, probs: Vec<Rational>) -> Result<Self> {
        let ps = PartitionSet::new(terminals.len())?;
        if probs.len() != ps.len() {
            return Err(Error::Dimension { expected: ps.len(), got: probs.len() });
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidModel("negative probability in distribution".into()));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidModel(format!("distribution sums to {}", rational::fmt(&total))));
        }
        Ok(Self { terminals, probs })
    }

    pub(crate) fn from_parts_unchecked(terminals: Vec<String>, probs: Vec<Rational>) -> Self {
        debug_assert!(Self::new(terminals.clone(), probs.clone()).is_ok());
        Self { terminals, probs }
    }

    /// Three-terminal distribution `a, b, c` in the order abc, ab|c, ac|b, a|bc, a|b|c.
    pub fn j3(probs: [Rational; 5]) -> Result<Self> {
        Self::new(vec!["a".into(), "b".into(), "c".into()], probs.to_vec())
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn get(&self, idx: usize) -> &Rational {
        &self.probs[idx]
    }

    pub fn partition_set(&self) -> PartitionSet {
        PartitionSet::new(self.k()).expect("validated at construction")
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(rational::to_f64).collect()
    }

    pub fn to_json(&self) -> Value {
        let ps = self.partition_set();
        json!({
            "schema": 1,
            "terminals": self.terminals,
            "partitions": (0..ps.len()).map(|i| ps.name(i, &self.terminals)).collect::<Vec<_>>(),
            "probs": self.probs.iter().map(rational::fmt).collect::<Vec<_>>(),
            "float": self.to_f64(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize, Serialize)]
        struct Raw {
            terminals: Vec<String>,
            #[serde(with = "rational::serde_vec")]
            probs: Vec<Rational>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        Self::new(raw.terminals, raw.probs)
    }
}

/// Sum of the distribution over the partitions in `e`.
pub fn event_probability(rho: &PartitionDistribution, e: &EventSet) -> Result<Rational> {
    if e.len() != rho.probs.len() {
        return Err(Error::Dimension { expected: rho.probs.len(), got: e.len() });
    }
    Ok(e.iter().fold(Rational::zero(), |acc, i| acc + &rho.probs[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::event;
    use crate::rational::ratio;

    fn triangle_half() -> PartitionDistribution {
        PartitionDistribution::j3([ratio(1, 2), ratio(1, 8), ratio(1, 8), ratio(1, 8), ratio(1, 8)]).unwrap()
    }

    #[test]
    fn event_probabilities() {
        let rho = triangle_half();
        let ps = rho.partition_set();
        let e = event(&ps, rho.terminals(), "a~b OR a~c").unwrap();
        assert_eq!(event_probability(&rho, &e).unwrap(), ratio(3, 4));
        assert_eq!(event_probability(&rho, &EventSet::full(5)).unwrap(), ratio(1, 1));
        assert_eq!(event_probability(&rho, &EventSet::empty(5)).unwrap(), ratio(0, 1));
        assert!(event_probability(&rho, &EventSet::empty(2)).is_err());
    }

    #[test]
    fn validation() {
        assert!(PartitionDistribution::j3([ratio(1, 2), ratio(1, 8), ratio(1, 8), ratio(1, 8), ratio(1, 7)]).is_err());
        assert!(PartitionDistribution::j3([ratio(3, 2), ratio(-1, 2), ratio(0, 1), ratio(0, 1), ratio(0, 1)]).is_err());
        assert!(PartitionDistribution::new(vec!["a".into()], vec![ratio(1, 2), ratio(1, 2)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rho = triangle_half();
        assert_eq!(PartitionDistribution::from_json(&rho.to_json()).unwrap(), rho);
    }
}

//! Terminal-partition laws of small random graphs: exact and sampled
//! distributions, model transforms, swap schedules, feasible-tuple
//! enumeration, exact LP certificates and parametric optimization.

pub mod alpha3;
pub mod dist;
pub mod dsu;
pub mod engine;
pub mod error;
pub mod event;
pub mod inequalities;
pub mod lp;
pub mod manifest;
pub mod model;
pub mod par;
pub mod partition;
pub mod random;
pub mod rational;
pub mod swap;
pub mod transforms;
pub mod tuples;

pub use dist::PartitionDistribution;
pub use error::{Error, Result};
pub use model::{Graph, HyperModel, Model, SiteModel};
pub use rational::Rational;

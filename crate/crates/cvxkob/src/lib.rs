//! Numerical toolkit for automorphisms and limit sets of bounded convex domains in C^d:
//! certified Kobayashi brackets, almost-geodesics, Wolff-Denjoy classification,
//! rescaling, and rank-one matrix group utilities.

pub mod automorphism_dynamics;
pub mod cli_harness;
pub mod config;
pub mod domain_geometry;
pub mod frankel_rescaling;
pub mod error;
pub mod kobayashi_metric;
pub mod linalg;
pub mod rank_one_lie;

pub use config::Tolerances;
pub use domain_geometry::{AffineMap, ConvexDomain, DomainKind, Membership};
pub use error::{Error, Result};

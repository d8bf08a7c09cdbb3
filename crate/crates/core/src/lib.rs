//! Biased convex order for finitely-atomic measures on the real line.
//!
//! The crate provides the order machinery (biased and strongly biased checks
//! around a point, irreducible convex order), constructive decompositions
//! into simple components, biased martingale coupling construction by linear
//! programming, the biased payoff envelope with its dual bounds, exact
//! compensated-Poisson martingale embeddings with closed-form integrands, and
//! the one-step American-option consistency check.

pub mod coupling;
pub mod decompose;
pub mod embedding;
pub mod envelope;
pub mod error;
pub mod lp;
pub mod market;
pub mod measure;
pub mod order;

pub use error::{Error, Result};
pub use measure::{make_measure, mixture, w1, BiasParams, DiscreteMeasure, PotentialCurve};
pub use order::{
    convex_order, irreducible_convex_order, is_beta_biased, is_strongly_beta_biased, max_bias,
    reflect, support_bound, OrderVerdict, TestFunction,
};

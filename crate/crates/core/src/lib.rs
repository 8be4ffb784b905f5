//! Finite-state toolkit for multi-agent arbitrage analysis on scenario-tree
//! markets: individual and collective arbitrage detection with certificates,
//! martingale-measure polytopes, per-agent minimax measures via convex
//! duality, and constructive search for risk exchanges that strictly improve
//! every agent's indirect utility.
//!
//! Everything model-level is exact rational arithmetic; the convex layer
//! works in floats but certifies its answers (KKT residuals, duality gaps,
//! and exact-rational re-verification where the data admits it).

pub mod arbitrage;
pub mod beneficial;
pub mod cara;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod minimax;
pub mod model;
pub mod optim;
pub mod preferences;
pub mod rational;
pub mod sweep;

pub use error::{Error, Result};
pub use rational::Rat;

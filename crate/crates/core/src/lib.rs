//! Multi-cascade influence maximization.
//!
//! Competing cascades spread over a directed graph under the independent
//! multi-cascade model: independent edge coin flips as in the classic
//! independent cascade model, with a per-node activation function that
//! decides which cascade wins when several arrive in the same round.
//!
//! The crate provides forward Monte-Carlo diffusion ([`cascades`]), exact
//! enumeration on tiny instances ([`oracle`]), reverse sandwich sampling of
//! RR-tuples with upper/lower coverage bounds ([`sampling`]), the Reverse
//! Sandwich seed selection pipeline ([`solver`]) and the NR-Greedy and
//! MaxInf baselines ([`baselines`]).
//!
//! With the default `parallel` feature, tuple generation, Monte-Carlo trials
//! and realization enumeration run on the ambient rayon pool. A pool with a
//! single thread, or building without the feature, takes the sequential path.

pub mod baselines;
pub mod cascades;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod validation;

pub use cascades::{
    ActivationRule, ActivationSpec, Cascade, CascadeConfig, DiffusionState, InfluenceEstimate,
};
pub use error::{Error, Result};
pub use graph::{DirectedGraph, EdgeId, NodeId, ProbabilityScheme};
pub use sampling::{EstimateKind, RRTuple, SeedSet, TupleCollection};
pub use solver::{Algorithm, SolverParams, SolverReport};

//! Performance-driven QUBO feature selection for recommender systems.
//!
//! The pipeline measures how a base recommender's ranking quality changes
//! when item features are masked ([`counterfactual`]), turns those deltas
//! into a QUBO coefficient matrix ([`qubo`]), and minimizes the resulting
//! energy with classical metaheuristics ([`solvers`]).

#![allow(clippy::needless_range_loop)]

pub mod counterfactual;
pub mod dataset;
pub mod par;
pub mod qubo;
pub mod recsys;
pub mod seed;
pub mod solvers;

pub use par::Execution;

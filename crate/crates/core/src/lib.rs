//! Game-theoretic alignment labels between visual and question tokens.
//!
//! The crate builds a ternary characteristic game over token coalitions,
//! computes pairwise Banzhaf or Shapley interaction matrices, merges tokens
//! with density-peaks clustering, and evaluates the distillation and answer
//! losses that consume those matrices.

pub mod alignment;
pub mod error;
pub mod game;
pub mod io;
pub mod matrix;
pub mod merge;
pub mod numeric;
pub mod revenue;
pub mod synth;
pub mod tokens;

pub use error::{Error, Result};
pub use game::{CharacteristicGame, Coalition, Estimator, InteractionMatrix, Method, PlayerUniverse};
pub use matrix::{Linear, Matrix};
pub use revenue::{ProjectionG, Similarity, TernaryRevenueConfig};
pub use tokens::{AnswerEmbedding, TokenSet};

//! Coalitions, memoized characteristic games, and pairwise interaction
//! indices (Banzhaf and Shapley), exact or sampled.

mod characteristic;
mod coalition;
mod interaction;

pub use characteristic::CharacteristicGame;
pub use coalition::{enumerate_subsets, Coalition, PlayerUniverse, Role, SubsetIter, MAX_EXACT_PLAYERS, MAX_PLAYERS};
pub use interaction::{
    banzhaf_interaction_exact, banzhaf_interaction_sampled, interaction_matrix, interaction_sampled,
    pair_interaction, shapley_interaction_exact, shapley_weight, Estimator, InteractionMatrix, Method,
    SampledEstimate,
};

//! The ternary revenue function over visual tokens, question tokens and a
//! fixed answer embedding, and the characteristic game built from it.
//!
//! For a visual token `v` and question token `q` the revenue is
//! `phi(v, q) + phi(A, G [v; q])`, where `G` projects the concatenation into
//! the answer space. Coalitions larger than a pair are scored by mean-pooling
//! each modality; a coalition missing either modality earns
//! [`TernaryRevenueConfig::empty_side_payoff`].

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CharacteristicGame, Coalition, PlayerUniverse};
use crate::matrix::{Linear, Matrix};
use crate::numeric::{dot, norm};
use crate::tokens::{AnswerEmbedding, TokenSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Cosine,
    Dot,
}

impl Similarity {
    pub fn apply(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Similarity::Cosine => cosine_similarity(a, b),
            Similarity::Dot => {
                check_dims(a, b)?;
                Ok(dot(a, b))
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Similarity::Cosine => "cosine",
            Similarity::Dot => "dot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TernaryRevenueConfig {
    pub similarity: Similarity,
    pub empty_side_payoff: f64,
    pub aggregation: Aggregation,
}

impl Default for TernaryRevenueConfig {
    fn default() -> Self {
        Self {
            similarity: Similarity::Cosine,
            empty_side_payoff: 0.0,
            aggregation: Aggregation::Mean,
        }
    }
}

/// Linear projection of a concatenated `[visual; question]` pair into the
/// answer space. Stored in the shared linear-layer JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProjectionG(Linear);

impl ProjectionG {
    pub fn new(linear: Linear) -> Self {
        Self(linear)
    }

    /// `[I | 0]`: copies the visual half into a `dim`-wide answer space.
    pub fn left_identity(dim: usize) -> Self {
        let w = Matrix::from_fn(dim, 2 * dim, |i, j| if i == j { 1.0 } else { 0.0 });
        Self(Linear::without_bias(w).expect("finite"))
    }

    /// `[I/2 | I/2]`: the midpoint of the visual and question vectors.
    pub fn averaging(dim: usize) -> Self {
        let w = Matrix::from_fn(dim, 2 * dim, |i, j| if i == j || i + dim == j { 0.5 } else { 0.0 });
        Self(Linear::without_bias(w).expect("finite"))
    }

    /// Gaussian weights scaled by `1/sqrt(fan_in)`, zero bias.
    pub fn seeded_random(answer_dim: usize, concat_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (concat_dim as f64).sqrt();
        let w = Matrix::from_fn(answer_dim, concat_dim, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        Self(Linear::without_bias(w).expect("finite"))
    }

    pub fn linear(&self) -> &Linear {
        &self.0
    }

    pub fn answer_dim(&self) -> usize {
        self.0.out_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.0.in_dim()
    }

    pub fn project(&self, v: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let mut concat = Vec::with_capacity(v.len() + q.len());
        concat.extend_from_slice(v);
        concat.extend_from_slice(q);
        self.0.apply(&concat)
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("similarity of {}- and {}-dim vectors", a.len(), b.len())));
    }
    Ok(())
}

/// `a.b / (|a| |b|)`, clamped to `[-1, 1]`. Zero-norm inputs are an error.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::degenerate("cosine similarity of a zero-norm vector"));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn pair_revenue(
    v: &[f64],
    q: &[f64],
    answer: &AnswerEmbedding,
    g: &ProjectionG,
    cfg: &TernaryRevenueConfig,
) -> Result<f64> {
    if v.len() + q.len() != g.input_dim() {
        return Err(Error::shape(format!(
            "projection expects a {}-wide concatenation, got {} + {}",
            g.input_dim(),
            v.len(),
            q.len()
        )));
    }
    if g.answer_dim() != answer.dim() {
        return Err(Error::shape(format!(
            "projection outputs {} dims, answer has {}",
            g.answer_dim(),
            answer.dim()
        )));
    }
    let alignment = cfg.similarity.apply(v, q)?;
    let projected = g.project(v, q)?;
    let answer_term = cfg.similarity.apply(answer.as_slice(), &projected)?;
    Ok(alignment + answer_term)
}

/// Revenue of an arbitrary coalition: mean-pool each modality, then score the
/// pooled pair. One-sided coalitions earn `cfg.empty_side_payoff`.
pub fn coalition_revenue(
    coalition: Coalition,
    universe: &PlayerUniverse,
    visual: &TokenSet,
    question: &TokenSet,
    answer: &AnswerEmbedding,
    g: &ProjectionG,
    cfg: &TernaryRevenueConfig,
) -> Result<f64> {
    if coalition.n() != universe.n_players() {
        return Err(Error::argument(format!(
            "coalition over {} players, universe has {}",
            coalition.n(),
            universe.n_players()
        )));
    }
    let nv = universe.n_visual();
    let v_members = coalition.members().filter(|&k| k < nv);
    let q_members = coalition.members().filter(|&k| k >= nv).map(|k| k - nv);
    let (Some(v_bar), Some(q_bar)) = (visual.mean_of(v_members), question.mean_of(q_members)) else {
        return Ok(cfg.empty_side_payoff);
    };
    pair_revenue(&v_bar, &q_bar, answer, g, cfg)
}

/// Memoized game over `visual.len() + question.len()` players whose payoff is
/// [`coalition_revenue`].
pub fn build_characteristic_game(
    visual: &TokenSet,
    question: &TokenSet,
    answer: &AnswerEmbedding,
    g: &ProjectionG,
    cfg: &TernaryRevenueConfig,
) -> Result<CharacteristicGame> {
    if visual.dim() != question.dim() {
        return Err(Error::shape(format!(
            "visual tokens are {}-dim, question tokens {}-dim; similarity needs equal widths",
            visual.dim(),
            question.dim()
        )));
    }
    if g.input_dim() != visual.dim() + question.dim() {
        return Err(Error::shape(format!(
            "projection expects {} inputs, tokens concatenate to {}",
            g.input_dim(),
            visual.dim() + question.dim()
        )));
    }
    if g.answer_dim() != answer.dim() {
        return Err(Error::shape(format!(
            "projection outputs {} dims, answer has {}",
            g.answer_dim(),
            answer.dim()
        )));
    }
    if !cfg.empty_side_payoff.is_finite() {
        return Err(Error::config("empty_side_payoff must be finite"));
    }
    let universe = PlayerUniverse::new(visual.len(), question.len())?;
    let inputs = Arc::new((visual.clone(), question.clone(), answer.clone(), g.clone(), *cfg));
    CharacteristicGame::new(universe.n_players(), move |c| {
        let (v, q, a, g, cfg) = &*inputs;
        coalition_revenue(c, &universe, v, q, a, g, cfg)
    })
}

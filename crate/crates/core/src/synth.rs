//! Synthetic token sets with a planted visual-to-question correspondence.
//!
//! All randomness comes from one ChaCha8 stream seeded with
//! `SyntheticSpec::seed`, so a spec always produces the same data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm;
use crate::revenue::ProjectionG;
use crate::tokens::{AnswerEmbedding, TokenSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planted {
    /// Visual token `i` is a noisy copy of question token `i`.
    #[default]
    Diagonal,
    /// Visual token `i` copies a randomly chosen question token.
    Random,
    /// Independent visual tokens.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_visual: usize,
    pub n_question: usize,
    pub dim: usize,
    pub noise_std: f64,
    pub planted: Planted,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_visual == 0 || self.n_question == 0 || self.dim == 0 {
            return Err(Error::config("synthetic token counts and dim must be at least 1"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std must be finite and >= 0, got {}", self.noise_std)));
        }
        if self.planted == Planted::Diagonal && self.n_visual != self.n_question {
            return Err(Error::config(format!(
                "diagonal planting needs equal counts, got {} visual and {} question",
                self.n_visual, self.n_question
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub visual: TokenSet,
    pub question: TokenSet,
    pub answer: AnswerEmbedding,
    pub g: ProjectionG,
    /// `alignment[i]` is the question token visual token `i` was drawn from.
    pub alignment: Option<Vec<usize>>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, std: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        })
        .collect()
}

fn unit(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = norm(&v);
    if n == 0.0 {
        return Err(Error::degenerate("drew a zero vector; choose another seed"));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

pub fn synth_generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim;

    let question: Vec<Vec<f64>> = (0..spec.n_question)
        .map(|_| unit(gaussian(&mut rng, dim, 1.0)))
        .collect::<Result<_>>()?;

    let alignment = match spec.planted {
        Planted::Diagonal => Some((0..spec.n_visual).collect::<Vec<_>>()),
        Planted::Random if spec.n_visual == spec.n_question => {
            let mut perm: Vec<usize> = (0..spec.n_question).collect();
            perm.shuffle(&mut rng);
            Some(perm)
        }
        Planted::Random => Some((0..spec.n_visual).map(|_| rng.random_range(0..spec.n_question)).collect()),
        Planted::None => None,
    };

    let visual: Vec<Vec<f64>> = match &alignment {
        Some(map) => map
            .iter()
            .map(|&j| {
                if spec.noise_std == 0.0 {
                    return Ok(question[j].clone());
                }
                let noise = gaussian(&mut rng, dim, spec.noise_std);
                unit(question[j].iter().zip(&noise).map(|(q, e)| q + e).collect())
            })
            .collect::<Result<_>>()?,
        None => (0..spec.n_visual)
            .map(|_| unit(gaussian(&mut rng, dim, 1.0)))
            .collect::<Result<_>>()?,
    };

    let question = TokenSet::new(dim, question)?;
    let visual = TokenSet::new(dim, visual)?;
    let mean = question.mean_of(0..question.len()).expect("non-empty");
    let answer = AnswerEmbedding::new(unit(mean)?)?;
    let g = ProjectionG::seeded_random(dim, 2 * dim, rng.random());

    Ok(SyntheticData {
        visual,
        question,
        answer,
        g,
        alignment,
    })
}

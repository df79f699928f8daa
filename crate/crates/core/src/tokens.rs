use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{all_finite, norm};

/// An ordered, non-empty set of equal-width embedding vectors.
///
/// JSON: `{"dim": D, "tokens": [[D floats], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TokenSetRepr", into = "TokenSetRepr")]
pub struct TokenSet {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TokenSetRepr {
    pub dim: usize,
    pub tokens: Vec<Vec<f64>>,
}

impl TokenSet {
    pub fn new(dim: usize, tokens: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::shape("token dimension must be at least 1"));
        }
        if tokens.is_empty() {
            return Err(Error::shape("token set is empty"));
        }
        let mut data = Vec::with_capacity(dim * tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.len() != dim {
                return Err(Error::shape(format!("token {i} has {} entries, expected {dim}", t.len())));
            }
            if !all_finite(t) {
                return Err(Error::NonFinite(format!("token {i} contains a non-finite entry")));
            }
            data.extend_from_slice(t);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::shape(format!(
                "{} values do not form a non-empty set of {dim}-wide tokens",
                data.len()
            )));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("token data contains a non-finite entry".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Mean of the tokens at `indices`, accumulated in index order.
    pub fn mean_of(&self, indices: impl IntoIterator<Item = usize>) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        let mut count = 0usize;
        for i in indices {
            for (a, x) in acc.iter_mut().zip(self.token(i)) {
                *a += x;
            }
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let inv = count as f64;
        acc.iter_mut().for_each(|a| *a /= inv);
        Some(acc)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.token(i));
        }
        Self { dim: self.dim, data }
    }
}

impl TryFrom<TokenSetRepr> for TokenSet {
    type Error = Error;

    fn try_from(repr: TokenSetRepr) -> Result<Self> {
        TokenSet::new(repr.dim, repr.tokens)
    }
}

impl From<TokenSet> for TokenSetRepr {
    fn from(t: TokenSet) -> Self {
        TokenSetRepr {
            dim: t.dim,
            tokens: t.to_rows(),
        }
    }
}

/// The answer representation: a single finite vector with non-zero norm.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerEmbedding {
    vector: Vec<f64>,
}

impl AnswerEmbedding {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::shape("answer embedding is empty"));
        }
        if !all_finite(&vector) {
            return Err(Error::NonFinite("answer embedding".into()));
        }
        if norm(&vector) == 0.0 {
            return Err(Error::degenerate("answer embedding has zero norm"));
        }
        Ok(Self { vector })
    }

    /// Accepts a token set holding exactly one token.
    pub fn from_token_set(set: &TokenSet) -> Result<Self> {
        if set.len() != 1 {
            return Err(Error::shape(format!(
                "answer file must hold exactly one token, found {}",
                set.len()
            )));
        }
        Self::new(set.token(0).to_vec())
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vector
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vector: self.vector.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn to_token_set(&self) -> TokenSet {
        TokenSet {
            dim: self.vector.len(),
            data: self.vector.clone(),
        }
    }
}

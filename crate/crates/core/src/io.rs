//! JSON file formats and atomic artifact writes.
//!
//! Embeddings: `{"dim": D, "tokens": [[D floats], ...]}`. Linear layers
//! (projection `G`, convolution kernels, attention projections):
//! `{"rows": R, "cols": C, "weights": [[...]], "bias": [...]}`.
//! Floats are written in shortest round-trip form, so every value reads back
//! bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Linear;
use crate::merge::ConvKernel;
use crate::revenue::ProjectionG;
use crate::tokens::{AnswerEmbedding, TokenSet};

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, format!("malformed JSON: {e}")))
}

#[derive(Deserialize)]
struct RawEmbeddings {
    dim: usize,
    tokens: Vec<Vec<f64>>,
}

/// Reads a token set, naming the offending row for ragged or non-finite data.
pub fn load_embeddings(path: &Path) -> Result<TokenSet> {
    let raw: RawEmbeddings = load_json(path)?;
    if raw.dim == 0 {
        return Err(parse_error(path, "dim must be at least 1"));
    }
    if raw.tokens.is_empty() {
        return Err(parse_error(path, "token list is empty"));
    }
    for (i, row) in raw.tokens.iter().enumerate() {
        if row.len() != raw.dim {
            return Err(parse_error(
                path,
                format!("ragged rows: row {i} has {} values, dim is {}", row.len(), raw.dim),
            ));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(parse_error(path, format!("non-finite value at row {i}, column {j}")));
        }
    }
    TokenSet::new(raw.dim, raw.tokens).map_err(|e| parse_error(path, e.to_string()))
}

/// Reads an answer file: an embedding file holding exactly one token.
pub fn load_answer(path: &Path) -> Result<AnswerEmbedding> {
    let set = load_embeddings(path)?;
    if set.len() != 1 {
        return Err(parse_error(
            path,
            format!("answer file must contain exactly one token, found {}", set.len()),
        ));
    }
    AnswerEmbedding::from_token_set(&set).map_err(|e| parse_error(path, e.to_string()))
}

pub fn load_linear(path: &Path) -> Result<Linear> {
    load_json(path)
}

pub fn load_projection(path: &Path) -> Result<ProjectionG> {
    load_linear(path).map(ProjectionG::new)
}

pub fn load_kernel(path: &Path) -> Result<ConvKernel> {
    ConvKernel::from_linear(&load_linear(path)?).map_err(|e| parse_error(path, e.to_string()))
}

/// Serialize `value` as pretty JSON and move it into place in one rename.
pub fn write_json_atomic<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = serde_json::to_string_pretty(value).map_err(|e| parse_error(path, e.to_string()))?;
    text.push('\n');
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct EmbeddingsOut<'a> {
    dim: usize,
    tokens: Vec<&'a [f64]>,
}

pub fn save_embeddings(path: &Path, tokens: &TokenSet) -> Result<()> {
    write_json_atomic(
        path,
        &EmbeddingsOut {
            dim: tokens.dim(),
            tokens: tokens.iter().collect(),
        },
    )
}

pub fn save_answer(path: &Path, answer: &AnswerEmbedding) -> Result<()> {
    save_embeddings(path, &answer.to_token_set())
}

//! Row-major dense matrices and affine layers with their JSON encodings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::all_finite;

/// A dense row-major `rows x cols` matrix of `f64`.
///
/// Serialized as `{"rows": R, "cols": C, "data": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// Index of the largest entry in each row, lowest column winning ties.
    pub fn row_argmax(&self) -> Vec<usize> {
        self.iter_rows()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        if repr.data.len() != repr.rows {
            return Err(Error::shape(format!(
                "declared {} rows, found {}",
                repr.rows,
                repr.data.len()
            )));
        }
        let m = Matrix::from_rows(&repr.data)?;
        if repr.rows > 0 && m.cols != repr.cols {
            return Err(Error::shape(format!(
                "declared {} cols, found {}",
                repr.cols, m.cols
            )));
        }
        Ok(Matrix {
            rows: repr.rows,
            cols: repr.cols,
            data: m.data,
        })
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.to_rows(),
        }
    }
}

/// An affine map `x -> W x + b` with `W` of shape `rows x cols`.
///
/// JSON: `{"rows": R, "cols": C, "weights": [[...]], "bias": [...]}`; a
/// missing `bias` reads as zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearRepr", into = "LinearRepr")]
pub struct Linear {
    weights: Matrix,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LinearRepr {
    rows: usize,
    cols: usize,
    weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
}

impl Linear {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape(format!(
                "bias has {} entries, weights have {} rows",
                bias.len(),
                weights.rows()
            )));
        }
        if !weights.is_finite() || !all_finite(&bias) {
            return Err(Error::NonFinite("linear layer parameters".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn without_bias(weights: Matrix) -> Result<Self> {
        let rows = weights.rows();
        Self::new(weights, vec![0.0; rows])
    }

    pub fn identity(dim: usize) -> Self {
        let weights = Matrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 });
        Self {
            weights,
            bias: vec![0.0; dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::shape(format!(
                "linear layer expects input width {}, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        Ok(self
            .weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(row, b)| crate::numeric::dot(row, x) + b)
            .collect())
    }
}

impl TryFrom<LinearRepr> for Linear {
    type Error = Error;

    fn try_from(repr: LinearRepr) -> Result<Self> {
        let weights = Matrix::try_from(MatrixRepr {
            rows: repr.rows,
            cols: repr.cols,
            data: repr.weights,
        })?;
        let bias = repr.bias.unwrap_or_else(|| vec![0.0; repr.rows]);
        Linear::new(weights, bias)
    }
}

impl From<Linear> for LinearRepr {
    fn from(l: Linear) -> Self {
        LinearRepr {
            rows: l.weights.rows,
            cols: l.weights.cols,
            weights: l.weights.to_rows(),
            bias: Some(l.bias),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_shape_is_checked() {
        let ok: Matrix = serde_json::from_str(r#"{"rows":2,"cols":2,"data":[[1,2],[3,4]]}"#).unwrap();
        assert_eq!(ok.get(1, 0), 3.0);
        let ragged = serde_json::from_str::<Matrix>(r#"{"rows":2,"cols":2,"data":[[1,2],[3]]}"#);
        assert!(ragged.is_err());
        let wrong_rows = serde_json::from_str::<Matrix>(r#"{"rows":3,"cols":2,"data":[[1,2],[3,4]]}"#);
        assert!(wrong_rows.is_err());
    }

    #[test]
    fn linear_without_bias_field_reads_zero_bias() {
        let l: Linear = serde_json::from_str(r#"{"rows":1,"cols":2,"weights":[[1,1]]}"#).unwrap();
        assert_eq!(l.bias(), &[0.0]);
        assert_eq!(l.apply(&[2.0, 3.0]).unwrap(), vec![5.0]);
        assert!(matches!(l.apply(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        let m = Matrix::from_rows(&[vec![1.0, 3.0, 3.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(m.row_argmax(), vec![1, 0]);
    }
}

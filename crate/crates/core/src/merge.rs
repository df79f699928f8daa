//! Token merging: temporal 1-D convolution, sparse token selection (DPC-KNN,
//! random, or contiguous temporal blocks), cluster averaging, and a
//! cross-attention pass from the sparse tokens back onto the enhanced ones.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Linear, Matrix};
use crate::numeric::{all_finite, dot, squared_distance};
use crate::tokens::TokenSet;

#[derive(Debug, Clone, PartialEq)]
enum Taps {
    Shared(Vec<f64>),
    // one row of taps per channel
    PerChannel(Matrix),
}

/// Odd-length convolution kernel applied along the token axis with zero
/// padding and stride 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    taps: Taps,
}

impl ConvKernel {
    pub fn shared(taps: Vec<f64>) -> Result<Self> {
        check_taps(taps.len())?;
        if !all_finite(&taps) {
            return Err(Error::NonFinite("convolution taps".into()));
        }
        Ok(Self {
            taps: Taps::Shared(taps),
        })
    }

    /// One row of taps per embedding channel.
    pub fn per_channel(taps: Matrix) -> Result<Self> {
        check_taps(taps.cols())?;
        if !taps.is_finite() {
            return Err(Error::NonFinite("convolution taps".into()));
        }
        Ok(Self {
            taps: Taps::PerChannel(taps),
        })
    }

    pub fn identity() -> Self {
        Self {
            taps: Taps::Shared(vec![1.0]),
        }
    }

    /// Reads a kernel stored in the linear-layer JSON format: a single row is
    /// shared across channels, otherwise one row per channel. Kernels carry no
    /// bias, so a non-zero one is rejected.
    pub fn from_linear(layer: &Linear) -> Result<Self> {
        if layer.bias().iter().any(|&b| b != 0.0) {
            return Err(Error::config("convolution kernels take no bias"));
        }
        if layer.out_dim() == 1 {
            Self::shared(layer.weights().row(0).to_vec())
        } else {
            Self::per_channel(layer.weights().clone())
        }
    }

    pub fn tap_count(&self) -> usize {
        match &self.taps {
            Taps::Shared(t) => t.len(),
            Taps::PerChannel(m) => m.cols(),
        }
    }

    fn tap(&self, channel: usize, m: usize) -> f64 {
        match &self.taps {
            Taps::Shared(t) => t[m],
            Taps::PerChannel(w) => w.get(channel, m),
        }
    }
}

fn check_taps(len: usize) -> Result<()> {
    if len.is_multiple_of(2) {
        return Err(Error::config(format!("convolution kernel needs an odd tap count, got {len}")));
    }
    Ok(())
}

/// `out[t][c] = sum_m taps[c][m] * in[t + m - half][c]`, zero outside the
/// sequence. Output length equals input length.
pub fn temporal_conv1d(tokens: &TokenSet, kernel: &ConvKernel) -> Result<TokenSet> {
    if let Taps::PerChannel(w) = &kernel.taps {
        if w.rows() != tokens.dim() {
            return Err(Error::shape(format!(
                "kernel has {} channel rows, tokens have {} channels",
                w.rows(),
                tokens.dim()
            )));
        }
    }
    let n = tokens.len() as isize;
    let dim = tokens.dim();
    let half = (kernel.tap_count() / 2) as isize;
    let mut out = Vec::with_capacity(tokens.as_flat().len());
    for t in 0..n {
        for c in 0..dim {
            let mut acc = 0.0;
            for m in 0..kernel.tap_count() {
                let src = t + m as isize - half;
                if (0..n).contains(&src) {
                    acc += kernel.tap(c, m) * tokens.token(src as usize)[c];
                }
            }
            out.push(acc);
        }
    }
    TokenSet::from_flat(dim, out)
}

/// How sparse tokens are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    DpcKnn,
    Random {
        seed: u64,
    },
    Temporal,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::DpcKnn => "dpcknn",
            Strategy::Random { .. } => "random",
            Strategy::Temporal => "temporal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub k_neighbors: usize,
    pub target_count: usize,
    pub strategy: Strategy,
}

impl MergeConfig {
    pub const DEFAULT_K: usize = 5;

    pub fn new(target_count: usize) -> Self {
        Self {
            k_neighbors: Self::DEFAULT_K,
            target_count,
            strategy: Strategy::DpcKnn,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.target_count == 0 || self.target_count > n {
            return Err(Error::argument(format!(
                "target count {} must lie in 1..={n}",
                self.target_count
            )));
        }
        if self.k_neighbors == 0 {
            return Err(Error::argument("k_neighbors must be at least 1"));
        }
        Ok(())
    }
}

/// Selected centers (ascending token indices), the center each token belongs
/// to, and, for DPC-KNN, each token's `rho * delta` score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub centers: Vec<usize>,
    pub labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
}

impl ClusterAssignment {
    pub fn members(&self, center: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == center)
            .map(|(i, _)| i)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::shape(format!(
                "assignment labels {} tokens, set has {n}",
                self.labels.len()
            )));
        }
        if self.centers.is_empty() || self.centers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("centers must be non-empty and strictly ascending"));
        }
        for &c in &self.centers {
            if c >= n || self.labels[c] != c {
                return Err(Error::argument(format!("center {c} is not labelled as its own cluster")));
            }
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.centers.binary_search(l).is_err() {
                return Err(Error::argument(format!("token {i} points at non-center {l}")));
            }
        }
        Ok(())
    }
}

fn pairwise_sq_distances(tokens: &TokenSet) -> Matrix {
    let n = tokens.len();
    let data: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| squared_distance(tokens.token(idx / n), tokens.token(idx % n)))
        .collect();
    Matrix::from_vec(n, n, data).expect("n x n")
}

/// Local density `exp(-mean squared distance to the k nearest neighbours)`.
pub fn knn_density(sq_dist: &Matrix, k: usize) -> Vec<f64> {
    let n = sq_dist.rows();
    let k = k.min(n.saturating_sub(1));
    (0..n)
        .map(|i| {
            if k == 0 {
                return 1.0;
            }
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq_dist.get(i, j)).collect();
            others.sort_by(f64::total_cmp);
            let mean = others[..k].iter().sum::<f64>() / k as f64;
            (-mean).exp()
        })
        .collect()
}

fn nearest_center(sq_dist: &Matrix, i: usize, centers: &[usize]) -> usize {
    // centers ascending, strict comparison keeps the lower index on ties
    let mut best = centers[0];
    for &c in &centers[1..] {
        if sq_dist.get(i, c) < sq_dist.get(i, best) {
            best = c;
        }
    }
    best
}

fn assign_to_centers(sq_dist: &Matrix, mut centers: Vec<usize>, scores: Vec<f64>) -> ClusterAssignment {
    centers.sort_unstable();
    let labels = (0..sq_dist.rows())
        .map(|i| {
            if centers.binary_search(&i).is_ok() {
                i
            } else {
                nearest_center(sq_dist, i, &centers)
            }
        })
        .collect();
    ClusterAssignment {
        centers,
        labels,
        scores,
    }
}

/// Density-peaks clustering with kNN density.
///
/// Tokens are ranked by density, ties going to the lower index. Each token's
/// separation `delta` is its distance to the nearest higher-ranked token (the
/// top token takes the largest pairwise distance). The `target_count` tokens
/// with the largest `rho * delta` become centers and every other token joins
/// its nearest center.
pub fn dpc_knn_cluster(tokens: &TokenSet, cfg: &MergeConfig) -> Result<ClusterAssignment> {
    let n = tokens.len();
    cfg.validate(n)?;
    let sq = pairwise_sq_distances(tokens);
    let rho = knn_density(&sq, cfg.k_neighbors);

    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));

    let mut delta = vec![0.0; n];
    let max_dist = sq.data().iter().copied().fold(0.0, f64::max).sqrt();
    delta[rank[0]] = max_dist;
    for pos in 1..n {
        let i = rank[pos];
        delta[i] = rank[..pos]
            .iter()
            .map(|&j| sq.get(i, j))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
    }

    let gamma: Vec<f64> = rho.iter().zip(&delta).map(|(r, d)| r * d).collect();
    let mut by_score: Vec<usize> = (0..n).collect();
    by_score.sort_by(|&a, &b| match gamma[b].total_cmp(&gamma[a]) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    by_score.truncate(cfg.target_count);
    Ok(assign_to_centers(&sq, by_score, gamma))
}

/// Seeded uniform choice of centers, nearest-center assignment.
pub fn random_cluster(tokens: &TokenSet, cfg: &MergeConfig, seed: u64) -> Result<ClusterAssignment> {
    let n = tokens.len();
    cfg.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = rand::seq::index::sample(&mut rng, n, cfg.target_count).into_vec();
    Ok(assign_to_centers(&pairwise_sq_distances(tokens), centers, Vec::new()))
}

/// Contiguous blocks `[b*n/T, (b+1)*n/T)`, each labelled by its first token.
pub fn temporal_cluster(tokens: &TokenSet, cfg: &MergeConfig) -> Result<ClusterAssignment> {
    let n = tokens.len();
    cfg.validate(n)?;
    let t = cfg.target_count;
    let centers: Vec<usize> = (0..t).map(|b| b * n / t).collect();
    let labels = (0..n)
        .map(|i| {
            let block = (0..t).rev().find(|&b| centers[b] <= i).expect("block 0 starts at 0");
            centers[block]
        })
        .collect();
    Ok(ClusterAssignment {
        centers,
        labels,
        scores: Vec::new(),
    })
}

pub fn cluster(tokens: &TokenSet, cfg: &MergeConfig) -> Result<ClusterAssignment> {
    match cfg.strategy {
        Strategy::DpcKnn => dpc_knn_cluster(tokens, cfg),
        Strategy::Random { seed } => random_cluster(tokens, cfg, seed),
        Strategy::Temporal => temporal_cluster(tokens, cfg),
    }
}

/// One token per center, the mean of its cluster, in ascending center order.
pub fn merge_tokens(tokens: &TokenSet, assignment: &ClusterAssignment) -> Result<TokenSet> {
    assignment.validate(tokens.len())?;
    let mut data = Vec::with_capacity(assignment.centers.len() * tokens.dim());
    for &c in &assignment.centers {
        data.extend(tokens.mean_of(assignment.members(c)).expect("center is its own member"));
    }
    TokenSet::from_flat(tokens.dim(), data)
}

/// Optional query/key/value projections for [`cross_attention_fuse_with`];
/// `None` means identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttentionProjections {
    #[serde(default)]
    pub query: Option<Linear>,
    #[serde(default)]
    pub key: Option<Linear>,
    #[serde(default)]
    pub value: Option<Linear>,
}

fn project_all(tokens: &TokenSet, layer: Option<&Linear>) -> Result<TokenSet> {
    match layer {
        None => Ok(tokens.clone()),
        Some(l) => {
            let mut data = Vec::with_capacity(tokens.len() * l.out_dim());
            for t in tokens.iter() {
                data.extend(l.apply(t)?);
            }
            TokenSet::from_flat(l.out_dim(), data)
        }
    }
}

pub fn default_attention_scale(dim: usize) -> f64 {
    1.0 / (dim as f64).sqrt()
}

/// Each sparse token attends over the enhanced tokens:
/// `softmax_j(scale * <s, e_j>)`-weighted sum of the `e_j`.
pub fn cross_attention_fuse(sparse: &TokenSet, enhanced: &TokenSet, scale: f64) -> Result<TokenSet> {
    cross_attention_fuse_with(sparse, enhanced, scale, &AttentionProjections::default())
}

pub fn cross_attention_fuse_with(
    sparse: &TokenSet,
    enhanced: &TokenSet,
    scale: f64,
    proj: &AttentionProjections,
) -> Result<TokenSet> {
    if enhanced.is_empty() {
        return Err(Error::argument("cross-attention over an empty token set"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::config(format!("attention scale must be positive, got {scale}")));
    }
    if sparse.dim() != enhanced.dim() {
        return Err(Error::shape(format!(
            "sparse tokens are {}-dim, enhanced tokens {}-dim",
            sparse.dim(),
            enhanced.dim()
        )));
    }
    let queries = project_all(sparse, proj.query.as_ref())?;
    let keys = project_all(enhanced, proj.key.as_ref())?;
    let values = project_all(enhanced, proj.value.as_ref())?;
    if queries.dim() != keys.dim() {
        return Err(Error::shape("query and key projections disagree on width"));
    }
    let mut out = Vec::with_capacity(sparse.len() * values.dim());
    let mut logits = vec![0.0; keys.len()];
    for q in queries.iter() {
        for (l, k) in logits.iter_mut().zip(keys.iter()) {
            *l = scale * dot(q, k);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = vec![0.0; values.dim()];
        for (w, v) in weights.iter().zip(values.iter()) {
            let w = w / total;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        out.extend(acc);
    }
    TokenSet::from_flat(values.dim(), out)
}

/// Every intermediate of [`merge_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutput {
    pub enhanced: TokenSet,
    pub assignment: ClusterAssignment,
    pub sparse: TokenSet,
    pub fused: TokenSet,
}

/// Convolve (when a kernel is given), cluster, average clusters, then fuse the
/// averages back with cross-attention at the default `1/sqrt(dim)` scale.
pub fn merge_pipeline(tokens: &TokenSet, kernel: Option<&ConvKernel>, cfg: &MergeConfig) -> Result<MergeOutput> {
    let enhanced = match kernel {
        Some(k) => temporal_conv1d(tokens, k)?,
        None => tokens.clone(),
    };
    let assignment = cluster(&enhanced, cfg)?;
    let sparse = merge_tokens(&enhanced, &assignment)?;
    let fused = cross_attention_fuse(&sparse, &enhanced, default_attention_scale(enhanced.dim()))?;
    Ok(MergeOutput {
        enhanced,
        assignment,
        sparse,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rows: &[&[f64]]) -> TokenSet {
        TokenSet::new(rows[0].len(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn points(xs: &[f64]) -> TokenSet {
        TokenSet::from_flat(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel_is_a_no_op() {
        let t = seq(&[&[1.0, 2.0], &[3.0, -4.0], &[0.5, 0.0]]);
        let k = ConvKernel::shared(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(temporal_conv1d(&t, &k).unwrap(), t);
        assert_eq!(temporal_conv1d(&t, &ConvKernel::identity()).unwrap(), t);
    }

    #[test]
    fn box_kernel_scales_boundaries() {
        let t = points(&[3.0, 3.0, 3.0, 3.0]);
        let k = ConvKernel::shared(vec![1.0 / 3.0; 3]).unwrap();
        let out = temporal_conv1d(&t, &k).unwrap();
        let got: Vec<f64> = out.as_flat().to_vec();
        assert!((got[0] - 2.0).abs() < 1e-12 && (got[3] - 2.0).abs() < 1e-12);
        assert!((got[1] - 3.0).abs() < 1e-12 && (got[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn leading_tap_shifts_right_with_zero_fill() {
        let t = points(&[1.0, 2.0, 3.0]);
        let k = ConvKernel::shared(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(temporal_conv1d(&t, &k).unwrap().as_flat(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn per_channel_kernels() {
        let t = seq(&[&[1.0, 10.0], &[2.0, 20.0], &[3.0, 30.0]]);
        let w = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let out = temporal_conv1d(&t, &ConvKernel::per_channel(w).unwrap()).unwrap();
        assert_eq!(out.to_rows(), vec![vec![1.0, 20.0], vec![2.0, 30.0], vec![3.0, 0.0]]);
        let three = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let err = temporal_conv1d(&t, &ConvKernel::per_channel(three).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn even_taps_are_rejected() {
        assert!(matches!(ConvKernel::shared(vec![0.5, 0.5]), Err(Error::Config(_))));
    }

    #[test]
    fn single_token_is_its_own_center() {
        let a = dpc_knn_cluster(&points(&[4.2]), &MergeConfig::new(1)).unwrap();
        assert_eq!(a.centers, vec![0]);
        assert_eq!(a.labels, vec![0]);
    }

    #[test]
    fn two_pairs_split_cleanly() {
        let cfg = MergeConfig {
            k_neighbors: 1,
            ..MergeConfig::new(2)
        };
        let a = dpc_knn_cluster(&points(&[0.0, 0.1, 10.0, 10.1]), &cfg).unwrap();
        // equal densities: rank 0,1,2,3; delta = 10.1, 0.1, 9.9, 0.1
        assert_eq!(a.centers, vec![0, 2]);
        assert_eq!(a.labels, vec![0, 0, 2, 2]);
        let rho = (-0.01f64).exp();
        assert!((a.scores[0] - rho * 10.1).abs() < 1e-12);
        assert!((a.scores[2] - rho * 9.9).abs() < 1e-12);
    }

    #[test]
    fn identical_tokens_break_ties_by_index() {
        let t = TokenSet::new(2, vec![vec![1.0, 1.0]; 5]).unwrap();
        for _ in 0..3 {
            let a = dpc_knn_cluster(&t, &MergeConfig::new(2)).unwrap();
            assert_eq!(a.centers, vec![0, 1]);
            assert_eq!(a.labels, vec![0, 1, 0, 0, 0]);
        }
    }

    #[test]
    fn target_beyond_token_count_is_an_error() {
        let err = dpc_knn_cluster(&points(&[0.0, 1.0]), &MergeConfig::new(3)).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
        assert!(dpc_knn_cluster(&points(&[0.0, 1.0]), &MergeConfig::new(0)).is_err());
    }

    #[test]
    fn k_is_clamped_for_small_inputs() {
        let cfg = MergeConfig {
            k_neighbors: 50,
            ..MergeConfig::new(1)
        };
        assert!(dpc_knn_cluster(&points(&[0.0, 1.0, 2.0]), &cfg).is_ok());
    }

    #[test]
    fn merged_tokens_are_cluster_means() {
        let t = points(&[0.0, 0.1, 10.0, 10.1]);
        let a = ClusterAssignment {
            centers: vec![0, 2],
            labels: vec![0, 0, 2, 2],
            scores: vec![],
        };
        let m = merge_tokens(&t, &a).unwrap();
        assert!((m.as_flat()[0] - 0.05).abs() < 1e-15);
        assert!((m.as_flat()[1] - 10.05).abs() < 1e-12);

        let singletons = ClusterAssignment {
            centers: vec![0, 1, 2, 3],
            labels: vec![0, 1, 2, 3],
            scores: vec![],
        };
        assert_eq!(merge_tokens(&t, &singletons).unwrap(), t);
    }

    #[test]
    fn merge_rejects_inconsistent_assignments() {
        let t = points(&[0.0, 1.0]);
        let bad = ClusterAssignment {
            centers: vec![0],
            labels: vec![0, 1],
            scores: vec![],
        };
        assert!(merge_tokens(&t, &bad).is_err());
    }

    #[test]
    fn attention_over_identical_tokens_returns_them() {
        let u = [0.3, -0.7, 2.0];
        let enhanced = seq(&[&u, &u, &u]);
        let sparse = seq(&[&[1.0, 0.0, 0.0], &[5.0, 5.0, 5.0]]);
        let out = cross_attention_fuse(&sparse, &enhanced, 0.5).unwrap();
        for t in out.iter() {
            for (a, b) in t.iter().zip(&u) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let single = seq(&[&[9.0, 8.0, 7.0]]);
        let out = cross_attention_fuse(&sparse, &single, 1.0).unwrap();
        assert!(out.iter().all(|t| t == [9.0, 8.0, 7.0]));
    }

    #[test]
    fn equal_logits_average_the_values() {
        // query orthogonal to both keys
        let enhanced = seq(&[&[0.0, 2.0], &[0.0, -4.0]]);
        let sparse = seq(&[&[1.0, 0.0]]);
        let out = cross_attention_fuse(&sparse, &enhanced, 1.0).unwrap();
        assert_eq!(out.as_flat(), &[0.0, -1.0]);
    }

    #[test]
    fn attention_rejects_bad_scale() {
        let t = points(&[1.0]);
        assert!(cross_attention_fuse(&t, &t, 0.0).is_err());
    }

    #[test]
    fn temporal_blocks_are_contiguous() {
        let t = points(&[0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let cfg = MergeConfig {
            strategy: Strategy::Temporal,
            ..MergeConfig::new(3)
        };
        let out = merge_pipeline(&t, None, &cfg).unwrap();
        assert_eq!(out.assignment.labels, vec![0, 0, 2, 2, 4, 4]);
        assert_eq!(out.sparse.as_flat(), &[1.0, 5.0, 9.0]);
        assert_eq!(out.fused.len(), 3);
    }

    #[test]
    fn random_strategy_is_seeded() {
        let t = points(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let cfg = MergeConfig {
            strategy: Strategy::Random { seed: 3 },
            ..MergeConfig::new(3)
        };
        let a = merge_pipeline(&t, None, &cfg).unwrap();
        let b = merge_pipeline(&t, None, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sparse.len(), 3);
    }

    #[test]
    fn degenerate_pipeline_keeps_values() {
        let t = seq(&[&[0.25, -1.5]]);
        let out = merge_pipeline(&t, Some(&ConvKernel::identity()), &MergeConfig::new(1)).unwrap();
        assert_eq!(out.sparse, t);
        assert_eq!(out.fused, t);

        let t = points(&[1.0, 5.0, -3.0]);
        let out = merge_pipeline(&t, None, &MergeConfig::new(3)).unwrap();
        assert_eq!(out.sparse, t);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::characteristic::CharacteristicGame;
use super::coalition::{enumerate_subsets, universe_mask, Coalition, PlayerUniverse, MAX_EXACT_PLAYERS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::ExactSum;

/// Which pairwise interaction index to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Banzhaf,
    Shapley,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Banzhaf => "banzhaf",
            Method::Shapley => "shapley",
        }
    }
}

/// Exhaustive enumeration or seeded Monte-Carlo sampling of coalitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Exact,
    Sampled { num_samples: usize, seed: u64 },
}

/// Bipartite interaction values between visual (rows) and question (columns)
/// players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub values: Matrix,
    pub method: Method,
    pub estimator: Estimator,
}

impl InteractionMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values.get(a, b)
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub num_samples: usize,
}

fn check_pair(game: &CharacteristicGame, i: usize, j: usize) -> Result<()> {
    let n = game.n_players();
    if i == j {
        return Err(Error::argument(format!("interaction needs two distinct players, got {i} twice")));
    }
    if i >= n || j >= n {
        return Err(Error::argument(format!("pair ({i}, {j}) outside a {n}-player game")));
    }
    Ok(())
}

fn check_exact(game: &CharacteristicGame) -> Result<()> {
    if game.n_players() > MAX_EXACT_PLAYERS {
        return Err(Error::Capacity {
            what: "exact interaction",
            limit: MAX_EXACT_PLAYERS,
            got: game.n_players(),
        });
    }
    Ok(())
}

/// `R(C+i+j) + R(C) - R(C+i) - R(C+j)`, grouped so that swapping `i` and `j`
/// gives the same bits.
#[inline]
fn bracket(game: &CharacteristicGame, c: u64, bi: u64, bj: u64) -> Result<f64> {
    let both = game.value_bits(c | bi | bj)?;
    let none = game.value_bits(c)?;
    let only_i = game.value_bits(c | bi)?;
    let only_j = game.value_bits(c | bj)?;
    Ok((both + none) - (only_i + only_j))
}

/// Exact Banzhaf interaction of `{i, j}`: the bracket averaged over all
/// `2^(n-2)` coalitions of the remaining players.
pub fn banzhaf_interaction_exact(game: &CharacteristicGame, i: usize, j: usize) -> Result<f64> {
    check_pair(game, i, j)?;
    check_exact(game)?;
    let n = game.n_players();
    let excluded = Coalition::from_members(&[i, j], n)?;
    let mut acc = ExactSum::new();
    for c in enumerate_subsets(excluded, n)? {
        acc.add(bracket(game, c.bits(), 1 << i, 1 << j)?);
    }
    // power-of-two weight, so this scaling is exact
    Ok(acc.value() * 2f64.powi(-(n as i32 - 2)))
}

/// Shapley weight `|C|! (n-|C|-2)! / (n-1)!` for a coalition of `size`.
pub fn shapley_weight(n: usize, size: usize) -> f64 {
    debug_assert!(n >= 2 && size <= n - 2);
    1.0 / ((n - 1) as f64 * binomial(n - 2, size))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut out = 1.0;
    for t in 0..k {
        out = out * (n - t) as f64 / (t + 1) as f64;
    }
    out.round()
}

/// Exact Shapley interaction of `{i, j}`.
///
/// Brackets are summed per coalition size, then the size classes are
/// combined with their positional weights.
pub fn shapley_interaction_exact(game: &CharacteristicGame, i: usize, j: usize) -> Result<f64> {
    check_pair(game, i, j)?;
    check_exact(game)?;
    let n = game.n_players();
    let excluded = Coalition::from_members(&[i, j], n)?;
    let mut by_size = vec![ExactSum::new(); n - 1];
    for c in enumerate_subsets(excluded, n)? {
        by_size[c.len()].add(bracket(game, c.bits(), 1 << i, 1 << j)?);
    }
    Ok(by_size
        .iter()
        .enumerate()
        .map(|(size, acc)| shapley_weight(n, size) * acc.value())
        .collect::<ExactSum>()
        .value())
}

fn pair_stream(i: usize, j: usize) -> u64 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    ((lo as u64) << 32) | hi as u64
}

fn pair_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair_stream(i, j));
    rng
}

/// Monte-Carlo estimate of an interaction index.
///
/// Banzhaf draws each remaining player into `C` independently with
/// probability 1/2. Shapley draws a size uniformly from `0..=n-2` and then a
/// uniform coalition of that size. The random stream depends only on `seed`
/// and the unordered pair, so `(i, j)` and `(j, i)` agree.
pub fn interaction_sampled(
    game: &CharacteristicGame,
    method: Method,
    i: usize,
    j: usize,
    num_samples: usize,
    seed: u64,
) -> Result<SampledEstimate> {
    check_pair(game, i, j)?;
    if num_samples == 0 {
        return Err(Error::argument("num_samples must be at least 1"));
    }
    let n = game.n_players();
    let free = universe_mask(n) & !(1u64 << i) & !(1u64 << j);
    let free_players: Vec<usize> = Coalition::from_bits(free, n)?.members().collect();
    let mut rng = pair_rng(seed, i, j);
    let mut pool = free_players.clone();

    let mut sum = ExactSum::new();
    // Welford running variance
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..num_samples {
        let c = match method {
            Method::Banzhaf => rng.random::<u64>() & free,
            Method::Shapley => {
                let size = rng.random_range(0..=free_players.len());
                let mut bits = 0u64;
                for k in 0..size {
                    let pick = rng.random_range(k..pool.len());
                    pool.swap(k, pick);
                    bits |= 1 << pool[k];
                }
                bits
            }
        };
        let x = bracket(game, c, 1 << i, 1 << j)?;
        sum.add(x);
        let delta = x - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (x - mean);
    }
    let variance = if num_samples > 1 {
        m2 / (num_samples - 1) as f64
    } else {
        0.0
    };
    Ok(SampledEstimate {
        mean: sum.value() / num_samples as f64,
        std_error: (variance / num_samples as f64).sqrt(),
        num_samples,
    })
}

/// Sampled Banzhaf interaction; an unbiased estimate of
/// [`banzhaf_interaction_exact`].
pub fn banzhaf_interaction_sampled(
    game: &CharacteristicGame,
    i: usize,
    j: usize,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    interaction_sampled(game, Method::Banzhaf, i, j, num_samples, seed).map(|e| e.mean)
}

pub fn pair_interaction(
    game: &CharacteristicGame,
    method: Method,
    estimator: Estimator,
    i: usize,
    j: usize,
) -> Result<f64> {
    match (method, estimator) {
        (Method::Banzhaf, Estimator::Exact) => banzhaf_interaction_exact(game, i, j),
        (Method::Shapley, Estimator::Exact) => shapley_interaction_exact(game, i, j),
        (_, Estimator::Sampled { num_samples, seed }) => {
            interaction_sampled(game, method, i, j, num_samples, seed).map(|e| e.mean)
        }
    }
}

/// Interaction index for every (visual, question) pair of the universe.
///
/// Entries are computed in parallel; each one is a deterministic function of
/// the game and the pair, so the result does not depend on thread count.
pub fn interaction_matrix(
    game: &CharacteristicGame,
    universe: &PlayerUniverse,
    method: Method,
    estimator: Estimator,
) -> Result<InteractionMatrix> {
    if universe.n_players() != game.n_players() {
        return Err(Error::shape(format!(
            "universe has {} players, game has {}",
            universe.n_players(),
            game.n_players()
        )));
    }
    if universe.n_visual() == 0 || universe.n_question() == 0 {
        return Err(Error::argument("interaction matrix needs at least one visual and one question player"));
    }
    match estimator {
        Estimator::Exact => {
            check_exact(game)?;
            game.tabulate()?;
        }
        Estimator::Sampled { num_samples: 0, .. } => {
            return Err(Error::argument("num_samples must be at least 1"));
        }
        Estimator::Sampled { .. } => {}
    }
    let (rows, cols) = (universe.n_visual(), universe.n_question());
    let data = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / cols, idx % cols);
            pair_interaction(game, method, estimator, universe.visual(a), universe.question(b))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InteractionMatrix {
        values: Matrix::from_vec(rows, cols, data)?,
        method,
        estimator,
    })
}

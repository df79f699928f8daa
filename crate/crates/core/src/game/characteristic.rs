use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;

use super::coalition::{universe_mask, Coalition, MAX_EXACT_PLAYERS, MAX_PLAYERS};
use crate::error::{Error, Result};

type Evaluator = dyn Fn(Coalition) -> Result<f64> + Send + Sync;

// A quiet NaN payload; evaluated payoffs are finite so it never collides.
const UNSET: u64 = 0x7ff8_0000_dead_beef;

enum Memo {
    Dense(Vec<AtomicU64>),
    Sparse(DashMap<u64, f64>),
}

/// A cooperative game: a pure payoff function over coalitions plus a memo.
///
/// Universes up to [`MAX_EXACT_PLAYERS`] use a dense table indexed by the
/// coalition bitmask; larger ones fall back to a concurrent hash map. Racing
/// threads may both evaluate the same coalition, which is harmless because
/// the evaluator is pure.
pub struct CharacteristicGame {
    n_players: usize,
    evaluator: Box<Evaluator>,
    memo: Memo,
    evaluations: AtomicUsize,
}

impl fmt::Debug for CharacteristicGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharacteristicGame")
            .field("n_players", &self.n_players)
            .field("evaluations", &self.evaluations())
            .finish_non_exhaustive()
    }
}

impl CharacteristicGame {
    pub fn new<F>(n_players: usize, evaluator: F) -> Result<Self>
    where
        F: Fn(Coalition) -> Result<f64> + Send + Sync + 'static,
    {
        if n_players > MAX_PLAYERS {
            return Err(Error::Capacity {
                what: "a characteristic game",
                limit: MAX_PLAYERS,
                got: n_players,
            });
        }
        let memo = if n_players <= MAX_EXACT_PLAYERS {
            Memo::Dense((0..1usize << n_players).map(|_| AtomicU64::new(UNSET)).collect())
        } else {
            Memo::Sparse(DashMap::new())
        };
        Ok(Self {
            n_players,
            evaluator: Box::new(evaluator),
            memo,
            evaluations: AtomicUsize::new(0),
        })
    }

    /// A game given by its full payoff table, indexed by coalition bitmask.
    pub fn from_table(n_players: usize, table: Vec<f64>) -> Result<Self> {
        if n_players > MAX_EXACT_PLAYERS {
            return Err(Error::Capacity {
                what: "a tabulated game",
                limit: MAX_EXACT_PLAYERS,
                got: n_players,
            });
        }
        if table.len() != 1 << n_players {
            return Err(Error::shape(format!(
                "payoff table for {n_players} players needs {} entries, got {}",
                1usize << n_players,
                table.len()
            )));
        }
        let table = Arc::new(table);
        Self::new(n_players, move |c| Ok(table[c.bits() as usize]))
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    /// Number of times the underlying evaluator has been called.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn value(&self, coalition: Coalition) -> Result<f64> {
        if coalition.n() != self.n_players {
            return Err(Error::argument(format!(
                "coalition over {} players passed to a {}-player game",
                coalition.n(),
                self.n_players
            )));
        }
        self.value_bits(coalition.bits())
    }

    /// Payoff of the coalition with the given bitmask; the mask must lie in
    /// the universe.
    pub(crate) fn value_bits(&self, bits: u64) -> Result<f64> {
        debug_assert_eq!(bits & !universe_mask(self.n_players), 0);
        match &self.memo {
            Memo::Dense(cells) => {
                let cell = &cells[bits as usize];
                let cached = cell.load(Ordering::Relaxed);
                if cached != UNSET {
                    return Ok(f64::from_bits(cached));
                }
                let v = self.evaluate(bits)?;
                cell.store(v.to_bits(), Ordering::Relaxed);
                Ok(v)
            }
            Memo::Sparse(map) => {
                if let Some(v) = map.get(&bits) {
                    return Ok(*v);
                }
                let v = self.evaluate(bits)?;
                map.insert(bits, v);
                Ok(v)
            }
        }
    }

    fn evaluate(&self, bits: u64) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let coalition = Coalition::from_bits(bits, self.n_players)?;
        let v = (self.evaluator)(coalition)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("payoff of coalition {coalition:?} is {v}")));
        }
        Ok(v)
    }

    /// Evaluate every coalition once, in parallel.
    ///
    /// On failure the error for the lowest failing bitmask is returned, so the
    /// outcome does not depend on scheduling.
    pub fn tabulate(&self) -> Result<()> {
        if self.n_players > MAX_EXACT_PLAYERS {
            return Err(Error::Capacity {
                what: "exact payoff tabulation",
                limit: MAX_EXACT_PLAYERS,
                got: self.n_players,
            });
        }
        let first_err = (0..1u64 << self.n_players)
            .into_par_iter()
            .filter_map(|bits| self.value_bits(bits).err().map(|e| (bits, e)))
            .min_by_key(|(bits, _)| *bits);
        match first_err {
            Some((_, e)) => Err(e),
            None => Ok(()),
        }
    }
}

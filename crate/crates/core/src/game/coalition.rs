use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest player count for which exhaustive coalition enumeration is allowed.
pub const MAX_EXACT_PLAYERS: usize = 24;

/// Largest player count a [`Coalition`] bitmask can represent.
pub const MAX_PLAYERS: usize = 64;

/// A subset of an `n`-player universe, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coalition {
    bits: u64,
    n: u32,
}

impl Coalition {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "coalition universe of {n} players");
        Self { bits: 0, n: n as u32 }
    }

    pub fn full(n: usize) -> Self {
        Self {
            bits: universe_mask(n),
            ..Self::empty(n)
        }
    }

    pub fn from_bits(bits: u64, n: usize) -> Result<Self> {
        if n > MAX_PLAYERS {
            return Err(Error::Capacity {
                what: "a coalition bitmask",
                limit: MAX_PLAYERS,
                got: n,
            });
        }
        if bits & !universe_mask(n) != 0 {
            return Err(Error::argument(format!(
                "coalition bits {bits:#x} fall outside a {n}-player universe"
            )));
        }
        Ok(Self { bits, n: n as u32 })
    }

    pub fn from_members(members: &[usize], n: usize) -> Result<Self> {
        let mut c = Self::from_bits(0, n)?;
        for &k in members {
            if k >= n {
                return Err(Error::argument(format!("player {k} outside a {n}-player universe")));
            }
            c = c.with(k);
        }
        Ok(c)
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn contains(self, player: usize) -> bool {
        player < 64 && (self.bits >> player) & 1 == 1
    }

    pub fn with(self, player: usize) -> Self {
        debug_assert!(player < self.n());
        Self {
            bits: self.bits | 1 << player,
            ..self
        }
    }

    pub fn without(self, player: usize) -> Self {
        Self {
            bits: self.bits & !(1 << player),
            ..self
        }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            bits: self.bits | other.bits,
            ..self
        }
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & universe_mask(self.n()),
            ..self
        }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(k)
        })
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

pub(crate) fn universe_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Iterator over every subset of a fixed bitmask, in ascending numeric order.
#[derive(Debug, Clone)]
pub struct SubsetIter {
    free: u64,
    next: Option<u64>,
    n: u32,
}

impl Iterator for SubsetIter {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let current = self.next?;
        self.next = if current == self.free {
            None
        } else {
            // increment inside the free positions only
            Some(((current | !self.free).wrapping_add(1)) & self.free)
        };
        Some(Coalition {
            bits: current,
            n: self.n,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self.next {
            None => (0, Some(0)),
            Some(_) => {
                let total = 1usize << self.free.count_ones();
                (1, Some(total))
            }
        }
    }
}

/// Every subset of the `n`-player universe that avoids `excluded`.
///
/// Yields `2^(n - |excluded|)` coalitions in ascending bitmask order.
pub fn enumerate_subsets(excluded: Coalition, n: usize) -> Result<SubsetIter> {
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::Capacity {
            what: "exhaustive coalition enumeration",
            limit: MAX_EXACT_PLAYERS,
            got: n,
        });
    }
    let universe = universe_mask(n);
    if excluded.bits & !universe != 0 {
        return Err(Error::argument("excluded players lie outside the universe"));
    }
    Ok(SubsetIter {
        free: universe & !excluded.bits,
        next: Some(0),
        n: n as u32,
    })
}

/// Role of a player in the ternary game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Visual,
    Question,
}

/// The player universe: visual tokens first, then question tokens.
///
/// The answer embedding is held as fixed context of the revenue function and
/// is never a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerUniverse {
    n_visual: usize,
    n_question: usize,
}

impl PlayerUniverse {
    pub fn new(n_visual: usize, n_question: usize) -> Result<Self> {
        if n_visual + n_question > MAX_PLAYERS {
            return Err(Error::Capacity {
                what: "a player universe",
                limit: MAX_PLAYERS,
                got: n_visual + n_question,
            });
        }
        Ok(Self {
            n_visual,
            n_question,
        })
    }

    pub fn n_players(&self) -> usize {
        self.n_visual + self.n_question
    }

    pub fn n_visual(&self) -> usize {
        self.n_visual
    }

    pub fn n_question(&self) -> usize {
        self.n_question
    }

    pub fn visual(&self, a: usize) -> usize {
        debug_assert!(a < self.n_visual);
        a
    }

    pub fn question(&self, b: usize) -> usize {
        debug_assert!(b < self.n_question);
        self.n_visual + b
    }

    pub fn role(&self, player: usize) -> Option<Role> {
        if player < self.n_visual {
            Some(Role::Visual)
        } else if player < self.n_players() {
            Some(Role::Question)
        } else {
            None
        }
    }

    pub fn visual_mask(&self) -> u64 {
        universe_mask(self.n_visual)
    }

    pub fn question_mask(&self) -> u64 {
        universe_mask(self.n_players()) & !self.visual_mask()
    }
}

//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tg_align_core::{CharacteristicGame, TokenSet};

pub fn random_table_game(n: usize, seed: u64) -> CharacteristicGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
    CharacteristicGame::from_table(n, table).expect("n within exact cap")
}

pub fn random_tokens(count: usize, dim: usize, seed: u64) -> TokenSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..count * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    TokenSet::from_flat(dim, data).expect("non-empty")
}

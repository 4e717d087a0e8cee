//! Deterministic seed derivation.
//!
//! All random streams in a run descend from one 64-bit master seed through
//! the splitmix64 finalizer. The mixing constants are fixed; changing them
//! changes every derived stream and breaks replay of old outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 step (increment then avalanche). Bijective on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for realization `realization` of grid point `grid_index`.
///
/// For a fixed master seed the map `(grid_index, realization) -> seed` is
/// injective: the pair is packed into one word before a bijective mix.
pub fn derive_seed(master_seed: u64, grid_index: u32, realization: u32) -> u64 {
    let packed = (u64::from(grid_index) << 32) | u64::from(realization);
    splitmix64(splitmix64(master_seed) ^ packed)
}

/// The generator used for every stream in the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 generator seeded with 0,
        // where state advances by the golden gamma before each mix.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(
            splitmix64(0x9E37_79B9_7F4A_7C15),
            0x6E78_9E6A_A1B9_65F4
        );
    }

    #[test]
    fn neighbouring_realizations_differ() {
        for s in [0u64, 1, 42, u64::MAX] {
            assert_ne!(derive_seed(s, 0, 0), derive_seed(s, 0, 1));
            assert_ne!(derive_seed(s, 0, 1), derive_seed(s, 1, 0));
        }
    }

    #[test]
    fn golden_seed() {
        assert_eq!(derive_seed(42, 3, 7), GOLDEN_42_3_7);
    }

    const GOLDEN_42_3_7: u64 = 0xF66E_D6BD_79CA_4F06;

    #[test]
    fn injective_on_small_grid() {
        let mut seen = std::collections::HashSet::new();
        for g in 0..64 {
            for r in 0..64 {
                assert!(seen.insert(derive_seed(7, g, r)));
            }
        }
    }
}

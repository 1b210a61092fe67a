//! Derivation of independent RNG streams from a master seed.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `path` under `master` (e.g. `[setup, block]`).
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(master.wrapping_add(GOLDEN)), |acc, &p| {
            splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN)))
        })
}

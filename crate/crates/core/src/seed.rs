//! Deterministic seed derivation.

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for component `label` of run `run` under `root`.
///
/// The label is folded in byte by byte, so distinct labels give unrelated
/// streams.
pub fn seed_tree(root: u64, run: u64, label: &str) -> u64 {
    let mut h = splitmix(root);
    h = splitmix(h ^ run);
    for b in label.bytes() {
        h = splitmix(h ^ b as u64);
    }
    splitmix(h ^ label.len() as u64)
}

//! Small shared helpers: 1-based cyclic indexing, binomials, seed streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `Mod(b, a)`: the representative of `b` modulo `a` in `{1, ..., a}`, so
/// that `Mod(a, a) = a`.
pub fn mod1(b: i64, a: usize) -> usize {
    let a = a as i64;
    let r = b.rem_euclid(a);
    if r == 0 {
        a as usize
    } else {
        r as usize
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a path of labels into an independent child seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(root), |acc, &x| splitmix(acc ^ splitmix(x)))
}

/// A deterministic RNG for the stream labelled `path` under `root`.
pub fn stream(root: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}

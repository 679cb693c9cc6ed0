//! Small shared helpers: 3-vectors, seeded RNG streams, hashing.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Vec3 = [f64; 3];

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn norm3(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub3(a, b))
}

pub fn clamp3(a: Vec3, lo: f64, hi: f64) -> Vec3 {
    [a[0].clamp(lo, hi), a[1].clamp(lo, hi), a[2].clamp(lo, hi)]
}

pub fn finite3(a: Vec3) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// SplitMix64 step; the workhorse behind seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a stream tag, and an index.
/// Distinct (tag, index) pairs give statistically independent streams, so
/// retry loops and per-episode seeding stay reproducible.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = master;
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

/// Deterministic RNG used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal draws via Box-Muller.
pub fn randn_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand::Rng;
    (0..n)
        .map(|_| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

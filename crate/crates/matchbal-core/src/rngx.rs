//! Seeded randomness: root-seed splitting plus the handful of
//! distributions the simulator draws from. Everything here consumes a
//! caller-supplied generator so that streams stay reproducible.

#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Deterministic stream used throughout the crate.
pub type SeedRng = ChaCha12Rng;

/// Build a generator from a bare 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Derive a stage-specific seed from a root seed, so that every pipeline
/// stage gets an independent stream while staying a pure function of the
/// root.
pub fn split_seed(root: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in stage.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(root ^ h)
}

/// SplitMix64 finalizer; also used to derive per-tree and per-match seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal via Box-Muller. Always consumes exactly two uniforms.
pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

pub fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * std_normal(rng)
}

/// Poisson sample by Knuth's product-of-uniforms method; the rates used
/// by the simulator stay small so the O(lambda) cost is irrelevant.
pub fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
        if k >= 100_000 {
            return k; // unreachable for sane rates
        }
    }
}

pub fn bernoulli<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

pub fn binomial<R: Rng>(rng: &mut R, n: u32, p: f64) -> u32 {
    (0..n).filter(|_| bernoulli(rng, p)).count() as u32
}

/// Fisher-Yates shuffle.
pub fn shuffle<R: Rng, T>(rng: &mut R, xs: &mut [T]) {
    for i in (1..xs.len()).rev() {
        let j = rng.gen_range(0..=i);
        xs.swap(i, j);
    }
}

/// Index into `weights` proportional to weight. Non-positive weights are
/// treated as zero; if all weights vanish the draw is uniform.
pub fn weighted_choice<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    debug_assert!(!weights.is_empty());
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w.max(0.0);
        if target < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_seed_is_stage_dependent() {
        assert_ne!(split_seed(7, "simulate"), split_seed(7, "train"));
        assert_eq!(split_seed(7, "simulate"), split_seed(7, "simulate"));
    }

    #[test]
    fn poisson_mean_matches_rate() {
        let mut rng = rng_from_seed(11);
        let n = 200_000;
        let sum: u64 = (0..n).map(|_| u64::from(poisson(&mut rng, 2.0))).sum();
        let mean = sum as f64 / n as f64;
        // 3 sigma of the sample mean for lambda = 2
        assert!((mean - 2.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt());
    }

    #[test]
    fn std_normal_moments() {
        let mut rng = rng_from_seed(3);
        let n = 200_000;
        let xs: alloc::vec::Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn weighted_choice_respects_weights() {
        let mut rng = rng_from_seed(5);
        let weights = [0.0, 3.0, 1.0];
        let mut counts = [0usize; 3];
        for _ in 0..40_000 {
            counts[weighted_choice(&mut rng, &weights)] += 1;
        }
        assert_eq!(counts[0], 0);
        let ratio = counts[1] as f64 / counts[2] as f64;
        assert!((ratio - 3.0).abs() < 0.3, "ratio {ratio}");
    }
}

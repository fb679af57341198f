//! Deterministic point sets and the seeded random stream.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; each
//! generator documents the order in which it draws from the stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Point `index` of the `dim`-dimensional Halton sequence in `[0,1)^dim`,
/// skipping the origin.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton dimension {dim} unsupported");
    (0..dim)
        .map(|d| radical_inverse(index as u64 + 1, PRIMES[d]))
        .collect()
}

/// `count` quasi-random points in `[0, 2π)^dim`.
pub fn torus_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            halton(i, dim)
                .into_iter()
                .map(|u| u * std::f64::consts::TAU)
                .collect()
        })
        .collect()
}

/// `count` quasi-random points in the cube inscribed in the ball of the
/// given radius, so every point satisfies `|x| <= radius`.
pub fn ball_points(count: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
    let half = radius / (dim as f64).sqrt();
    (0..count)
        .map(|i| {
            halton(i, dim)
                .into_iter()
                .map(|u| (2.0 * u - 1.0) * half)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(0, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(1, 2), vec![0.25, 2.0 / 3.0]);
    }

    #[test]
    fn ball_points_inside() {
        for p in ball_points(200, 6, 0.9) {
            let r: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(r <= 0.9);
        }
    }
}

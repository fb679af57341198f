//! Closed-form constants.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Volume of the unit round sphere `S^n`: `2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_volume(n: usize) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma((n as f64 + 1.0) / 2.0)
}

/// Critical Sobolev exponent `p = 2n/(n−2)`.
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Upper bound `n(n−2) ω_n^{2/n}` for the invariant.
pub fn yamabe_bound(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf - 2.0) * sphere_volume(n).powf(2.0 / nf)
}

/// `Y(S^n, g_round) = n(n−1) ω_n^{2/n}`.
pub fn sphere_yamabe(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) * sphere_volume(n).powf(2.0 / nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_volumes() {
        // statrs' Lanczos gamma is good to a few ulps at half-integers
        assert!((sphere_volume(1) / (2.0 * PI) - 1.0).abs() < 1e-14);
        assert!((sphere_volume(2) / (4.0 * PI) - 1.0).abs() < 1e-14);
        assert!((sphere_volume(6) - 16.0 * PI.powi(3) / 15.0).abs() < 1e-12);
    }
}

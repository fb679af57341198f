//! Small dense matrix routines over [`Scalar`] (plain reals or jets).
//!
//! Matrices are row-major `Vec<S>` of length `n*n`; entry `(i, j)` sits at
//! `i*n + j`. For a (1,1)-tensor `A^i_j`, row `i` is the upper index.

use crate::error::{Error, Result};
use crate::jet::Scalar;

/// Fixed Padé degree for [`expm`].
pub const PADE_DEGREE: usize = 6;

pub fn identity_like<S: Scalar>(proto: &S, n: usize) -> Vec<S> {
    (0..n * n)
        .map(|k| proto.lift_const(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect()
}

pub fn mat_mul<S: Scalar>(a: &[S], b: &[S], n: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = a[i * n].clone() * b[j].clone();
            for k in 1..n {
                acc = acc + a[i * n + k].clone() * b[k * n + j].clone();
            }
            out.push(acc);
        }
    }
    out
}

pub fn transpose<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    (0..n * n).map(|k| a[(k % n) * n + k / n].clone()).collect()
}

pub fn mat_add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn mat_scale<S: Scalar>(a: &[S], c: f64) -> Vec<S> {
    a.iter().map(|x| x.scaled(c)).collect()
}

/// Gauss–Jordan inverse with partial pivoting on the leading values.
pub fn inverse<S: Scalar>(a: &[S], n: usize) -> Result<Vec<S>> {
    let mut m = a.to_vec();
    let mut inv = identity_like(&a[0], n);
    let scale = a.iter().map(|x| x.val().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .val()
                    .abs()
                    .total_cmp(&m[s * n + col].val().abs())
            })
            .unwrap();
        if m[pivot * n + col].val().abs() <= 1e-14 * scale {
            return Err(Error::LinearAlgebra(format!(
                "singular {n}x{n} matrix (pivot {:e} in column {col})",
                m[pivot * n + col].val()
            )));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = m[col * n + col].clone();
        for k in 0..n {
            m[col * n + k] = m[col * n + k].clone() / p.clone();
            inv[col * n + k] = inv[col * n + k].clone() / p.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col].clone();
            if f.is_exact_zero() {
                continue;
            }
            for k in 0..n {
                m[r * n + k] = m[r * n + k].clone() - f.clone() * m[col * n + k].clone();
                inv[r * n + k] = inv[r * n + k].clone() - f.clone() * inv[col * n + k].clone();
            }
        }
    }
    Ok(inv)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree [`PADE_DEGREE`].
pub fn expm<S: Scalar>(a: &[S], n: usize) -> Result<Vec<S>> {
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].val().abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = mat_scale(a, 0.5f64.powi(squarings));
    let q = PADE_DEGREE;
    let mut coeff = 1.0;
    let ident = identity_like(&a[0], n);
    let mut num = ident.clone();
    let mut den = ident.clone();
    let mut power = ident;
    for k in 1..=q {
        coeff *= (q - k + 1) as f64 / (k * (2 * q - k + 1)) as f64;
        power = mat_mul(&power, &scaled, n);
        num = mat_add(&num, &mat_scale(&power, coeff));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        den = mat_add(&den, &mat_scale(&power, sign * coeff));
    }
    let mut out = mat_mul(&inverse(&den, n)?, &num, n);
    for _ in 0..squarings {
        out = mat_mul(&out, &out, n);
    }
    Ok(out)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

pub fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap();
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
        }
    }
    det
}

/// Max-abs (entrywise) norm.
pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn values<S: Scalar>(a: &[S]) -> Vec<f64> {
    a.iter().map(Scalar::val).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn inverse_roundtrip() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let inv = inverse(&a, 3).unwrap();
        let prod = mat_mul(&a, &inv, 3);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * 3 + j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(inverse(&a, 2), Err(Error::LinearAlgebra(_))));
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.9f64;
        let a = vec![0.0, -t, t, 0.0];
        let e = expm(&a, 2).unwrap();
        assert!((e[0] - t.cos()).abs() < 1e-14);
        assert!((e[1] + t.sin()).abs() < 1e-14);
        assert!((e[2] - t.sin()).abs() < 1e-14);
        // large argument exercises squaring
        let big = vec![0.0, -7.0, 7.0, 0.0];
        let e = expm(&big, 2).unwrap();
        assert!((e[0] - 7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn expm_jet_derivative() {
        // d/dt exp(t B) at t = s equals B exp(s B)
        let s = 0.3;
        let b = [0.2, -1.0, 0.7, 0.1];
        let t = Jet::variable(1, 2, 0, s);
        let a: Vec<Jet> = b.iter().map(|&v| t.scale(v)).collect();
        let e = expm(&a, 2).unwrap();
        let ev: Vec<f64> = b.iter().map(|v| v * s).collect();
        let e0 = expm(&ev, 2).unwrap();
        let be = mat_mul(&b, &e0, 2);
        for k in 0..4 {
            assert!((e[k].value() - e0[k]).abs() < 1e-14);
            assert!((e[k].d1(0) - be[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_and_determinant() {
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-15);
        assert!((determinant(&a, 2) - 8.0).abs() < 1e-14);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}

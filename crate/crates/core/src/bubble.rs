//! The concentrating profile `u_α(x) = (α/(|x|²+α²))^{(n−2)/2}` on `ℝⁿ`:
//! its PDE under both sign conventions, its Rayleigh quotient, the small-α
//! integral rates and the constant `c(n)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::{integrate, integrate_half_line};
use crate::special::{critical_exponent, sphere_volume, sphere_yamabe};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleProfile {
    pub n: usize,
    pub alpha: f64,
}

impl BubbleProfile {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Dimension(format!("bubble needs n >= 3, got {n}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(BubbleProfile { n, alpha })
    }

    fn exponent(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.alpha / (r * r + self.alpha * self.alpha)).powf(self.exponent())
    }

    /// `u'(r)` in closed form.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let s = r * r + self.alpha * self.alpha;
        -(self.n as f64 - 2.0) * r * self.value(r) / s
    }

    /// The profile as a jet in the radial variable.
    pub fn radial_jet(&self, r: f64) -> Jet {
        let rj = Jet::variable(1, 2, 0, r);
        let a = self.alpha;
        let s = (&rj * &rj).add_const(a * a);
        s.recip().scale(a).powf(self.exponent())
    }

    /// `Δu = −(u'' + (n−1)u'/r)` (nonnegative-spectrum convention).
    pub fn laplacian(&self, r: f64) -> f64 {
        let j = self.radial_jet(r);
        -(j.d2(0, 0) + (self.n as f64 - 1.0) * j.d1(0) / r)
    }
}

/// Residuals of `Δu ± n(n−2)u^{p−1} = 0`, each relative to the size of the
/// nonlinear term `n(n−2)u^{p−1}` at the same radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdeResiduals {
    pub plus: f64,
    pub minus: f64,
}

impl PdeResiduals {
    /// `Some(+1)` / `Some(−1)` when exactly one convention holds within `tol`.
    pub fn winning_sign(&self, tol: f64) -> Option<i8> {
        match (self.plus <= tol, self.minus <= tol) {
            (true, false) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        }
    }
}

pub fn bubble_pde_residual(n: usize, alpha: f64, radii: &[f64]) -> Result<PdeResiduals> {
    let b = BubbleProfile::new(n, alpha)?;
    let p = critical_exponent(n);
    let c = (n * (n - 2)) as f64;
    let mut out = PdeResiduals { plus: 0.0, minus: 0.0 };
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be > 0, got {r}")));
        }
        let lap = b.laplacian(r);
        let nl = c * b.value(r).powf(p - 1.0);
        out.plus = out.plus.max((lap + nl).abs() / nl);
        out.minus = out.minus.max((lap - nl).abs() / nl);
    }
    Ok(out)
}

/// `count` radii evenly spaced in `(0, r_max)`, excluding both ends.
pub fn sample_radii(count: usize, r_max: f64) -> Vec<f64> {
    (1..=count).map(|i| r_max * i as f64 / (count + 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayleighReport {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// Relative bound on the neglected tail beyond the quadrature radius.
    pub tail_bound: f64,
    pub target: f64,
}

impl RayleighReport {
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn relative_error(&self) -> f64 {
        (self.value() - self.target).abs() / self.target
    }

    pub fn alpha_spread(&self) -> f64 {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / self.target
    }
}

fn rayleigh_at(n: usize, alpha: f64, radius: f64, tol: f64) -> Result<(f64, f64)> {
    let b = BubbleProfile::new(n, alpha)?;
    let nf = n as f64;
    let p = critical_exponent(n);
    let area = sphere_volume(n - 1);
    // r = α tan θ on [0, atan(R/α)]
    let theta_max = (radius / alpha).atan();
    let radial = |f: &dyn Fn(f64) -> f64| {
        integrate(
            |t: f64| {
                let r = alpha * t.tan();
                let c = t.cos();
                f(r) * r.powi(n as i32 - 1) * alpha / (c * c)
            },
            0.0,
            theta_max,
            0.0,
            tol * 1e-3,
        )
    };
    let grad = area * radial(&|r| b.radial_derivative(r).powi(2))?.value;
    let mass = area * radial(&|r| b.value(r).powf(p))?.value;
    // |u'|² ≤ (n−2)² α^{n−2} r^{2−2n} and u^p ≤ α^n r^{−2n} for r ≥ R
    let grad_tail = area * (nf - 2.0) * alpha.powf(nf - 2.0) * radius.powf(2.0 - nf);
    let mass_tail = area * alpha.powf(nf) * radius.powf(-nf) / nf;
    let tail = (grad_tail / grad).max(mass_tail / mass);
    let q = 4.0 * (nf - 1.0) / (nf - 2.0) * grad / mass.powf(2.0 / p);
    Ok((q, tail))
}

/// Rayleigh quotient of the profile by radial quadrature on `[0, R·α]`,
/// evaluated for every `α` in `alphas` (scale invariance makes them agree).
/// Errors when the analytic tail bound exceeds `tol`.
pub fn bubble_rayleigh(n: usize, radius_over_alpha: f64, tol: f64, alphas: &[f64]) -> Result<RayleighReport> {
    if n < 5 {
        return Err(Error::Dimension(format!("Rayleigh quotient needs n >= 5, got {n}")));
    }
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("no alpha values".into()));
    }
    let mut values = Vec::with_capacity(alphas.len());
    let mut tail_bound: f64 = 0.0;
    for &a in alphas {
        let (q, tail) = rayleigh_at(n, a, radius_over_alpha * a, tol)?;
        if tail > tol {
            return Err(Error::Quadrature(format!(
                "tail bound {tail:e} exceeds tolerance {tol:e}; enlarge the radius"
            )));
        }
        tail_bound = tail_bound.max(tail);
        values.push(q);
    }
    Ok(RayleighReport {
        n,
        alphas: alphas.to_vec(),
        values,
        tail_bound,
        target: sphere_yamabe(n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRegime {
    /// `n > k + 4`: `α^{k+2}`.
    Power,
    /// `n = k + 4`: `α^{k+2} ln(1/α)`.
    Logarithmic,
    /// `n < k + 4`: `α^{n−2}`.
    Saturated,
}

pub fn rate_regime(n: usize, k: i32) -> RateRegime {
    let n = n as i32;
    match n.cmp(&(k + 4)) {
        std::cmp::Ordering::Greater => RateRegime::Power,
        std::cmp::Ordering::Equal => RateRegime::Logarithmic,
        std::cmp::Ordering::Less => RateRegime::Saturated,
    }
}

pub fn predicted_rate(n: usize, k: i32) -> f64 {
    match rate_regime(n, k) {
        RateRegime::Power | RateRegime::Logarithmic => (k + 2) as f64,
        RateRegime::Saturated => n as f64 - 2.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub n: usize,
    pub k: i32,
    pub epsilon: f64,
    pub alphas: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Least-squares slope of `log I` against `log α`.
    pub slope: f64,
    /// Slopes between consecutive α values (largest α first).
    pub local_slopes: Vec<f64>,
    pub regime: RateRegime,
    pub predicted: f64,
}

impl RateReport {
    pub fn local_slopes_monotone(&self) -> bool {
        let w = &self.local_slopes;
        w.windows(2).all(|p| p[1] >= p[0]) || w.windows(2).all(|p| p[1] <= p[0])
    }
}

/// `I(α) = ∫_0^ε r^k u_α² r^{n−1} dr` for each α and the fitted exponent.
pub fn lemma_u_rate(n: usize, k: i32, alphas: &[f64], epsilon: f64) -> Result<RateReport> {
    if (k as i64) <= -(n as i64) {
        return Err(Error::InvalidArgument(format!("need k > −n, got k = {k}")));
    }
    if alphas.len() < 4 || alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "alphas must be strictly decreasing with at least 4 values".into(),
        ));
    }
    let mut integrals = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let b = BubbleProfile::new(n, a)?;
        let q = integrate(
            |t: f64| {
                let r = a * t.tan();
                let c = t.cos();
                r.powi(k + n as i32 - 1) * b.value(r).powi(2) * a / (c * c)
            },
            0.0,
            (epsilon / a).atan(),
            0.0,
            1e-12,
        )?;
        integrals.push(q.value);
    }
    let xs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let local_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(RateReport {
        n,
        k,
        epsilon,
        alphas: alphas.to_vec(),
        integrals,
        slope: sxy / sxx,
        local_slopes,
        regime: rate_regime(n, k),
        predicted: predicted_rate(n, k),
    })
}

/// `count` values `start, start·ratio, …`.
pub fn geometric_alphas(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start * ratio.powi(i as i32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CnCheck {
    pub n: usize,
    pub quadrature: f64,
    pub closed_form: f64,
    pub relative_difference: f64,
}

/// `c(n) = (m²−2m−1)((m−1)!)² / ((m−1)(m−2)(2m−3)!)`, `n = 2m`.
pub fn cn_closed_form(n: usize) -> Result<f64> {
    if n < 6 || n % 2 == 1 {
        return Err(Error::Dimension(format!("c(n) needs even n >= 6, got {n}")));
    }
    let m = n / 2;
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mf = m as f64;
    Ok((mf * mf - 2.0 * mf - 1.0) * fact(m - 1).powi(2)
        / ((mf - 1.0) * (mf - 2.0) * fact(2 * m - 3)))
}

/// Quadrature of
/// `∫_0^∞ [(2n²−9n+2)σ⁴ − 2(3n+2)σ² − (3n+2)] σ^{n−1}/(σ²+1)^n dσ`
/// next to the closed form.
pub fn cn_check(n: usize) -> Result<CnCheck> {
    let closed_form = cn_closed_form(n)?;
    let nf = n as f64;
    let (a4, a2, a0) = (2.0 * nf * nf - 9.0 * nf + 2.0, -2.0 * (3.0 * nf + 2.0), -(3.0 * nf + 2.0));
    let q = integrate_half_line(
        |s: f64| {
            let s2 = s * s;
            (a4 * s2 * s2 + a2 * s2 + a0) * s.powi(n as i32 - 1) / (s2 + 1.0).powi(n as i32)
        },
        1e-14,
        1e-12,
    )?;
    Ok(CnCheck {
        n,
        quadrature: q.value,
        closed_form,
        relative_difference: (q.value - closed_form).abs() / closed_form.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_closed_form_derivative() {
        let b = BubbleProfile::new(6, 0.7).unwrap();
        for r in [0.1, 1.0, 3.0] {
            let j = b.radial_jet(r);
            assert!((j.value() - b.value(r)).abs() < 1e-15);
            assert!((j.d1(0) - b.radial_derivative(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_c6() {
        assert!((cn_closed_form(6).unwrap() - 8.0 / 12.0).abs() < 1e-15);
        assert!(cn_closed_form(7).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(rate_regime(6, 0), RateRegime::Power);
        assert_eq!(rate_regime(6, 2), RateRegime::Logarithmic);
        assert_eq!(rate_regime(6, 3), RateRegime::Saturated);
        assert_eq!(predicted_rate(6, 3), 4.0);
    }
}

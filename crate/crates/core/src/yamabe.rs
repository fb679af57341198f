//! Conformal transformation laws, the functionals `Q_g` and `Q_{g,J}`, their
//! discrete minimization on a periodic grid, the first eigenvalue of
//! `L_{g,J} = 4Δ_g + S_J`, the Kazdan–Warner operator and the prescribing
//! trichotomy.
//!
//! The grid Laplacian is in divergence form,
//! `Δ_h u = −(1/w) Σ_i D_i(w g^{ij} D_j u)` with `w = √det g` and `D_i` an
//! antisymmetric circulant difference along axis `i`, so `4Δ_h + S_J` is
//! exactly the gradient of the discrete energy and self-adjoint for the
//! `w`-weighted inner product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::curvature_pack;
use crate::error::{Error, Result};
use crate::field::FieldExpr;
use crate::grid::{pairwise_sum, TorusGrid};
use crate::linalg;
use crate::manifold::{make_conformal, ChartedManifold};
use crate::special::{critical_exponent, yamabe_bound};

/// Floor applied to candidate minimizers to keep them positive.
pub const POSITIVITY_FLOOR: f64 = 1e-10;
pub const ARMIJO: f64 = 1e-4;
pub const MAX_HALVINGS: usize = 60;
/// Cap on shifted inverse-power iterations.
pub const EIGEN_MAX_ITER: usize = 200;
/// Largest Krylov basis kept by the eigensolver.
pub const EIGEN_MAX_BASIS: usize = 60;
pub const CG_MAX_ITER: usize = 5000;
pub const NYQUIST_FILTER_POWER: usize = 8;

// ---------------------------------------------------------------------------
// pointwise laws

/// `Δ_g u = −g^{ij}(∂_i∂_j u − Γ^k_ij ∂_k u)` (nonnegative spectrum).
pub fn laplacian(m: &ChartedManifold, u: &FieldExpr, x: &[f64]) -> Result<f64> {
    let p = curvature_pack(m, x)?;
    let n = m.dim;
    let uj = u.eval_at(x, 2);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut h = uj.d2(i, j);
            for k in 0..n {
                h -= p.gamma[(k * n + i) * n + j] * uj.d1(k);
            }
            acc += p.g_inv[i * n + j] * h;
        }
    }
    Ok(-acc)
}

/// Residuals of the three transformation laws under `g̃ = u^{p−2} g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConformalResiduals {
    /// `|4(n−1)/(n−2) Δu + R u − R̃ u^{p−1}|`
    pub scalar: f64,
    /// `|4/(n−2) Δu + R* u − R̃* u^{p−1}|`
    pub star_scalar: f64,
    /// `|4Δu + S_J u − S̃_J u^{p−1}|`
    pub s_j: f64,
}

pub fn residual_conformal_laws(
    m: &ChartedManifold,
    u: &FieldExpr,
    x: &[f64],
) -> Result<ConformalResiduals> {
    let n = m.dim as f64;
    let uv = u.value_at(x);
    if !(uv > 0.0) {
        return Err(Error::Positivity(format!("u = {uv} <= 0 at {x:?}")));
    }
    let base = curvature_pack(m, x)?;
    let tilde = curvature_pack(&make_conformal(m, u.clone())?, x)?;
    let lap = laplacian(m, u, x)?;
    let up = uv.powf(critical_exponent(m.dim) - 1.0);
    Ok(ConformalResiduals {
        scalar: (4.0 * (n - 1.0) / (n - 2.0) * lap + base.scalar * uv - tilde.scalar * up).abs(),
        star_scalar: (4.0 / (n - 2.0) * lap + base.star_scalar * uv - tilde.star_scalar * up)
            .abs(),
        s_j: (4.0 * lap + base.s_j * uv - tilde.s_j * up).abs(),
    })
}

// ---------------------------------------------------------------------------
// discrete fields and geometry

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Fourth-order central differences.
    Fd4,
    /// Trigonometric-interpolation (Fourier) differentiation.
    Spectral,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd4" => Ok(Backend::Fd4),
            "spectral" => Ok(Backend::Spectral),
            other => Err(Error::InvalidArgument(format!("unknown backend {other:?}"))),
        }
    }
}

/// Circulant first-derivative coefficients: `(Du)_k = Σ_o d[o] u_{k+o}`.
pub fn difference_coefficients(backend: Backend, m: usize) -> Vec<f64> {
    let h = std::f64::consts::TAU / m as f64;
    let mut d = vec![0.0; m];
    match backend {
        Backend::Fd4 => {
            for (o, c) in [(1usize, 8.0), (2, -1.0)] {
                d[o % m] += c / (12.0 * h);
                d[(m - o % m) % m] -= c / (12.0 * h);
            }
        }
        Backend::Spectral => {
            for o in 1..=m / 2 {
                let x = o as f64 * h / 2.0;
                let sign = if o % 2 == 0 { 1.0 } else { -1.0 };
                let v = if m % 2 == 0 {
                    if 2 * o == m {
                        0.0
                    } else {
                        -0.5 * sign / x.tan()
                    }
                } else {
                    -0.5 * sign / x.sin()
                };
                d[o] = v;
                d[m - o] = -v;
            }
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteField {
    pub dim: usize,
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.dim, self.resolution)
    }

    pub fn constant(dim: usize, resolution: usize, c: f64) -> Self {
        DiscreteField {
            dim,
            resolution,
            values: vec![c; resolution.pow(dim as u32)],
        }
    }

    pub fn from_expr(dim: usize, resolution: usize, f: &FieldExpr) -> Self {
        let grid = TorusGrid::new(dim, resolution);
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f.value_at(&grid.point(i)))
            .collect();
        DiscreteField {
            dim,
            resolution,
            values,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid().cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn same_shape(&self, o: &DiscreteField) -> Result<()> {
        if self.dim != o.dim || self.resolution != o.resolution {
            return Err(Error::Dimension("grid shapes differ".into()));
        }
        Ok(())
    }
}

/// Metric data of a torus manifold sampled on a grid, plus the difference
/// operator. Fields depending on fewer axes are stored on a sub-grid.
#[derive(Clone, Debug)]
pub struct DiscreteGeometry {
    pub grid: TorusGrid,
    pub backend: Backend,
    pub label: String,
    sub: Vec<u32>,
    ginv: Vec<f64>,
    w: Vec<f64>,
    s_j: Vec<f64>,
    scalar: Vec<f64>,
    diagonal: bool,
    stencil: Vec<(usize, f64)>,
}

impl DiscreteGeometry {
    pub fn new(m: &ChartedManifold, resolution: usize, backend: Backend) -> Result<Self> {
        if !m.is_torus() {
            return Err(Error::UnsupportedQuadrature(format!(
                "{} is not a torus chart",
                m.label
            )));
        }
        if resolution < 3 {
            return Err(Error::InvalidArgument("grid resolution must be >= 3".into()));
        }
        let n = m.dim;
        let grid = TorusGrid::new(n, resolution);
        let mask = m.depends_on();
        let axes: Vec<usize> = (0..n).filter(|&a| mask[a]).collect();
        let sub_len = resolution.pow(axes.len() as u32);
        let h = grid.spacing();
        let samples = (0..sub_len)
            .into_par_iter()
            .map(|s| {
                let mut x = vec![0.0; n];
                let mut r = s;
                for &a in axes.iter().rev() {
                    x[a] = (r % resolution) as f64 * h;
                    r /= resolution;
                }
                let p = curvature_pack(m, &x)?;
                let det = linalg::determinant(&p.g, n);
                if !(det > 0.0) {
                    return Err(Error::Positivity(format!("det g = {det} at {x:?}")));
                }
                Ok((p.g_inv, det.sqrt(), p.s_j, p.scalar))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ginv = Vec::with_capacity(sub_len * n * n);
        let mut sub_w = Vec::with_capacity(sub_len);
        let mut s_j = Vec::with_capacity(sub_len);
        let mut scalar = Vec::with_capacity(sub_len);
        for (gi, w, s, r) in samples {
            ginv.extend(gi);
            sub_w.push(w);
            s_j.push(s);
            scalar.push(r);
        }
        let sub: Vec<u32> = (0..grid.len())
            .map(|idx| {
                let mi = grid.multi_index(idx);
                axes.iter().fold(0usize, |acc, &a| acc * resolution + mi[a]) as u32
            })
            .collect();
        let w = sub.iter().map(|&s| sub_w[s as usize]).collect();
        let diagonal = (0..sub_len).all(|s| {
            (0..n * n).all(|k| k / n == k % n || ginv[s * n * n + k] == 0.0)
        });
        let stencil = difference_coefficients(backend, resolution)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Ok(DiscreteGeometry {
            grid,
            backend,
            label: m.label.clone(),
            sub,
            ginv,
            w,
            s_j,
            scalar,
            diagonal,
            stencil,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `S_J` at every node.
    pub fn s_j(&self) -> Vec<f64> {
        self.sub.iter().map(|&s| self.s_j[s as usize]).collect()
    }

    pub fn s_j_min(&self) -> f64 {
        self.s_j.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume element `√det g` at every node.
    pub fn volume_density(&self) -> &[f64] {
        &self.w
    }

    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.w) * self.grid.cell_volume()
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::Dimension(format!(
                "field has {} values, grid has {}",
                u.len(),
                self.len()
            )));
        }
        Ok(())
    }

    pub fn derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let m = self.grid.resolution;
        let stride = self.grid.stride(axis);
        (0..u.len())
            .into_par_iter()
            .map(|idx| {
                let k = (idx / stride) % m;
                let base = idx - k * stride;
                self.stencil
                    .iter()
                    .map(|&(o, c)| c * u[base + ((k + o) % m) * stride])
                    .sum()
            })
            .collect()
    }

    /// `((2 − S₊ − S₋)/4)^NYQUIST_FILTER_POWER` along `axis`: 1 on the
    /// period-2 mode, `O((kh)^16)` on resolved ones.
    fn nyquist_filter(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let m = self.grid.resolution;
        let stride = self.grid.stride(axis);
        let mut v = u.to_vec();
        for _ in 0..NYQUIST_FILTER_POWER {
            v = (0..v.len())
                .into_par_iter()
                .map(|idx| {
                    let k = (idx / stride) % m;
                    let base = idx - k * stride;
                    let up = v[base + ((k + 1) % m) * stride];
                    let down = v[base + ((k + m - 1) % m) * stride];
                    (2.0 * v[idx] - up - down) / 4.0
                })
                .collect();
        }
        v
    }

    /// Centered stencils (spectral included) annihilate functions of period
    /// two along an axis when the resolution is even; this weight restores
    /// their energy `(π/h)² g^{ii}`.
    fn nyquist_weight(&self) -> Option<f64> {
        (self.grid.resolution % 2 == 0).then(|| (std::f64::consts::PI / self.grid.spacing()).powi(2))
    }

    fn g_inv_diag(&self, idx: usize, i: usize) -> f64 {
        let n = self.dim();
        self.ginv[self.sub[idx] as usize * n * n + i * n + i]
    }

    fn gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|a| self.derivative(u, a)).collect()
    }

    /// `w g^{ij} D_j u` for each `i`.
    fn fluxes(&self, du: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..self.len())
                    .into_par_iter()
                    .map(|idx| {
                        let gi = &self.ginv[self.sub[idx] as usize * n * n + i * n..][..n];
                        let s = if self.diagonal {
                            gi[i] * du[i][idx]
                        } else {
                            (0..n).map(|j| gi[j] * du[j][idx]).sum()
                        };
                        self.w[idx] * s
                    })
                    .collect()
            })
            .collect()
    }

    /// Grid Laplacian `Δ_h u` (nonnegative spectrum).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let flux = self.fluxes(&self.gradients(u));
        let mut div = vec![0.0; self.len()];
        for (i, f) in flux.iter().enumerate() {
            let d = self.derivative(f, i);
            div.par_iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
        if let Some(kappa2) = self.nyquist_weight() {
            for i in 0..self.dim() {
                let fu = self.nyquist_filter(u, i);
                let weighted: Vec<f64> = (0..fu.len())
                    .into_par_iter()
                    .map(|idx| self.w[idx] * kappa2 * self.g_inv_diag(idx, i) * fu[idx])
                    .collect();
                let back = self.nyquist_filter(&weighted, i);
                div.par_iter_mut().zip(back).for_each(|(a, b)| *a -= b);
            }
        }
        div.par_iter_mut()
            .zip(&self.w)
            .for_each(|(a, w)| *a = -*a / w);
        div
    }

    /// `Σ cell·w·a·b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..a.len())
            .into_par_iter()
            .map(|i| self.w[i] * a[i] * b[i])
            .collect();
        pairwise_sum(&terms) * self.grid.cell_volume()
    }

    pub fn norm_p(&self, u: &[f64], p: f64) -> f64 {
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| self.w[i] * u[i].abs().powf(p))
            .collect();
        (pairwise_sum(&terms) * self.grid.cell_volume()).powf(1.0 / p)
    }

    /// `∫ |du|²_g dV`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        let n = self.dim();
        let du = self.gradients(u);
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|idx| {
                let gi = &self.ginv[self.sub[idx] as usize * n * n..][..n * n];
                let mut s = 0.0;
                for i in 0..n {
                    if self.diagonal {
                        s += gi[i * n + i] * du[i][idx] * du[i][idx];
                    } else {
                        for j in 0..n {
                            s += gi[i * n + j] * du[i][idx] * du[j][idx];
                        }
                    }
                }
                self.w[idx] * s
            })
            .collect();
        let mut total = pairwise_sum(&terms);
        if let Some(kappa2) = self.nyquist_weight() {
            for i in 0..n {
                let fu = self.nyquist_filter(u, i);
                let t: Vec<f64> = (0..fu.len())
                    .into_par_iter()
                    .map(|idx| self.w[idx] * kappa2 * self.g_inv_diag(idx, i) * fu[idx] * fu[idx])
                    .collect();
                total += pairwise_sum(&t);
            }
        }
        total * self.grid.cell_volume()
    }

    fn potential(&self, u: &[f64], table: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| self.w[i] * table[self.sub[i] as usize] * u[i] * u[i])
            .collect();
        pairwise_sum(&terms) * self.grid.cell_volume()
    }

    fn p(&self) -> f64 {
        critical_exponent(self.dim())
    }

    fn denominator(&self, u: &[f64]) -> Result<f64> {
        let norm = self.norm_p(u, self.p());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Division(format!("‖u‖_p = {norm}")));
        }
        Ok(norm * norm)
    }

    /// `Q_{g,J}(u) = ∫(4|du|² + S_J u²) dV / ‖u‖_p²`.
    pub fn qj(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let den = self.denominator(u)?;
        Ok((4.0 * self.dirichlet(u) + self.potential(u, &self.s_j)) / den)
    }

    /// `Q_g(u) = ∫(4(n−1)/(n−2)|du|² + R_g u²) dV / ‖u‖_p²`.
    pub fn q(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let n = self.dim() as f64;
        let den = self.denominator(u)?;
        Ok((4.0 * (n - 1.0) / (n - 2.0) * self.dirichlet(u) + self.potential(u, &self.scalar)) / den)
    }

    /// `L_{g,J} u = 4Δ_h u + S_J u`.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.laplacian(u);
        (0..u.len())
            .into_par_iter()
            .map(|i| 4.0 * lap[i] + self.s_j[self.sub[i] as usize] * u[i])
            .collect()
    }

    /// Weighted-`L²` gradient of `Q_{g,J}` and the value:
    /// `(2/‖u‖²_p)(L u − Q ‖u‖_p^{2−p} |u|^{p−2} u)`.
    pub fn qj_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(u)?;
        let p = self.p();
        let lu = self.apply_l(u);
        let norm = self.norm_p(u, p);
        if !(norm > 0.0) {
            return Err(Error::Division("‖u‖_p = 0".into()));
        }
        let q = self.inner(&lu, u) / (norm * norm);
        let c = q * norm.powf(2.0 - p);
        let scale = 2.0 / (norm * norm);
        let g = (0..u.len())
            .into_par_iter()
            .map(|i| scale * (lu[i] - c * u[i].abs().powf(p - 2.0) * u[i]))
            .collect();
        Ok((q, g))
    }

    /// `‖L u − c u^{p−1}‖_{L²} / ‖u‖_p` with `c = Q(u) ‖u‖_p^{2−p}`.
    pub fn el_residual(&self, u: &[f64]) -> Result<f64> {
        let (_, g) = self.qj_gradient(u)?;
        let norm = self.norm_p(u, self.p());
        Ok(self.inner(&g, &g).sqrt() * norm * norm / 2.0 / norm)
    }
}

pub fn q_functional(m: &ChartedManifold, u: &DiscreteField, backend: Backend) -> Result<f64> {
    DiscreteGeometry::new(m, u.resolution, backend)?.q(&u.values)
}

pub fn qj_functional(m: &ChartedManifold, u: &DiscreteField, backend: Backend) -> Result<f64> {
    DiscreteGeometry::new(m, u.resolution, backend)?.qj(&u.values)
}

// ---------------------------------------------------------------------------
// minimization

/// Number of correction pairs kept by the quasi-Newton model.
pub const LBFGS_MEMORY: usize = 8;

/// Two-loop recursion in the weighted inner product.
fn lbfgs_direction(
    geom: &DiscreteGeometry,
    g: &[f64],
    memory: &std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
) -> Vec<f64> {
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, sy) in memory.iter().rev() {
        let a = geom.inner(s, &r) / sy;
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= a * yi);
        alphas.push(a);
    }
    if let Some((_, y, sy)) = memory.back() {
        let gamma = sy / geom.inner(y, y);
        r.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, sy), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = geom.inner(y, &r) / sy;
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    pub resolution: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub backend: Backend,
    pub compute_lambda1: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            resolution: 6,
            max_iter: 2000,
            tol: 1e-6,
            backend: Backend::Spectral,
            compute_lambda1: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct YamabeRun {
    pub label: String,
    pub resolution: usize,
    pub backend: Backend,
    pub value_history: Vec<f64>,
    pub final_value: f64,
    pub minimizer: DiscreteField,
    pub minimizer_norm_p: f64,
    pub el_residual: f64,
    pub lambda1: Option<f64>,
    pub bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: String,
    /// Number of node updates clamped to the positivity floor.
    pub clamp_count: usize,
}

impl YamabeRun {
    /// Largest increase between consecutive history entries (≤ 0 if monotone).
    pub fn max_increase(&self) -> f64 {
        self.value_history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn normalize(geom: &DiscreteGeometry, u: &mut [f64]) -> Result<()> {
    let norm = geom.norm_p(u, critical_exponent(geom.dim()));
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Division(format!("cannot normalize: ‖u‖_p = {norm}")));
    }
    u.iter_mut().for_each(|v| *v /= norm);
    Ok(())
}

/// Descent for `Q_{g,J}` on positive grid functions with `‖u‖_p = 1`.
///
/// Search directions come from a limited-memory BFGS model of the weighted
/// gradient (steepest descent whenever the model fails to give a descent
/// direction or a step was clamped). Every trial point is clamped to the
/// positivity floor and renormalized; a trial is accepted under the Armijo
/// condition, otherwise the step is halved.
pub fn minimize_qj_geometry(
    geom: &DiscreteGeometry,
    opts: &MinimizeOptions,
    initial: Option<&DiscreteField>,
) -> Result<YamabeRun> {
    let n = geom.dim();
    let mut u = match initial {
        Some(f) => {
            geom.check(&f.values)?;
            if f.min() <= 0.0 {
                return Err(Error::Positivity("initial field must be positive".into()));
            }
            f.values.clone()
        }
        None => vec![1.0; geom.len()],
    };
    normalize(geom, &mut u)?;
    let (mut q, mut g) = geom.qj_gradient(&u)?;
    let mut history = vec![q];
    let mut memory: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut clamp_count = 0usize;
    let mut converged = false;
    let mut stop_reason = "iteration cap reached".to_string();
    let mut iterations = 0;
    let mut el = geom.inner(&g, &g).sqrt() / 2.0;
    for it in 0..opts.max_iter {
        if el < opts.tol {
            converged = true;
            stop_reason = "Euler–Lagrange residual below tolerance".into();
            break;
        }
        iterations = it + 1;
        let mut d = lbfgs_direction(geom, &g, &memory);
        let mut slope = geom.inner(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -geom.inner(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut clamps = 0;
            let mut trial: Vec<f64> = u
                .iter()
                .zip(&d)
                .map(|(a, b)| {
                    let v = a + step * b;
                    if v < POSITIVITY_FLOOR {
                        clamps += 1;
                        POSITIVITY_FLOOR
                    } else {
                        v
                    }
                })
                .collect();
            normalize(geom, &mut trial)?;
            let qt = geom.qj(&trial)?;
            if !qt.is_finite() {
                return Err(Error::Optimization {
                    reason: "non-finite functional value".into(),
                    iterations: it,
                    history,
                });
            }
            if qt <= q + ARMIJO * step * slope {
                accepted = Some((trial, clamps));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, clamps)) = accepted else {
            if !memory.is_empty() {
                // retry from steepest descent before giving up
                memory.clear();
                continue;
            }
            stop_reason = "line search stalled (no Armijo decrease)".into();
            break;
        };
        clamp_count += clamps;
        let (qn, gn) = geom.qj_gradient(&trial)?;
        if clamps > 0 {
            memory.clear();
        } else {
            let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = geom.inner(&s, &y);
            if sy > 1e-14 * geom.inner(&s, &s).sqrt() * geom.inner(&y, &y).sqrt() {
                if memory.len() == LBFGS_MEMORY {
                    memory.pop_front();
                }
                memory.push_back((s, y, sy));
            }
        }
        u = trial;
        q = qn;
        g = gn;
        history.push(q);
        el = geom.inner(&g, &g).sqrt() / 2.0;
    }
    if !converged && el < opts.tol {
        converged = true;
        stop_reason = "Euler–Lagrange residual below tolerance".into();
    }
    let lambda1 = if opts.compute_lambda1 {
        Some(first_eigenvalue_geometry(geom)?.lambda1)
    } else {
        None
    };
    let minimizer_norm_p = geom.norm_p(&u, critical_exponent(n));
    Ok(YamabeRun {
        label: geom.label.clone(),
        resolution: geom.grid.resolution,
        backend: geom.backend,
        final_value: q,
        value_history: history,
        minimizer: DiscreteField {
            dim: n,
            resolution: geom.grid.resolution,
            values: u,
        },
        minimizer_norm_p,
        el_residual: el,
        lambda1,
        bound: yamabe_bound(n),
        iterations,
        converged,
        stop_reason,
        clamp_count,
    })
}

pub fn minimize_qj(m: &ChartedManifold, opts: &MinimizeOptions) -> Result<YamabeRun> {
    if opts.resolution < 4 {
        return Err(Error::InvalidArgument("resolution must be >= 4".into()));
    }
    let geom = DiscreteGeometry::new(m, opts.resolution, opts.backend)?;
    minimize_qj_geometry(&geom, opts, None)
}

// ---------------------------------------------------------------------------
// first eigenvalue

#[derive(Clone, Debug, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    pub shift: f64,
    pub iterations: usize,
    /// `‖L φ − λ φ‖ / ‖φ‖` in the weighted norm.
    pub residual: f64,
}

/// Conjugate gradients for `(L − σ) y = b`, self-adjoint positive definite
/// in the weighted inner product.
fn solve_shifted(geom: &DiscreteGeometry, sigma: f64, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    let apply = |v: &[f64]| -> Vec<f64> {
        let lv = geom.apply_l(v);
        lv.iter().zip(v).map(|(a, b)| a - sigma * b).collect()
    };
    let mut x = x0.to_vec();
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let mut p = r.clone();
    let mut rr = geom.inner(&r, &r);
    let bb = geom.inner(b, b).max(f64::MIN_POSITIVE);
    for _ in 0..CG_MAX_ITER {
        if rr <= 1e-28 * bb {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / geom.inner(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&ap).for_each(|(a, b)| *a -= alpha * b);
        let rr_new = geom.inner(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.iter_mut().zip(&r).for_each(|(a, b)| *a = b + beta * *a);
    }
    if rr <= 1e-20 * bb {
        return Ok(x);
    }
    Err(Error::Eigen(format!(
        "inner CG solve stalled at relative residual {:e}",
        (rr / bb).sqrt()
    )))
}

/// Smallest eigenvalue of `4Δ_h + S_J`: shifted inverse iteration from the
/// all-ones vector with shift `min S_J − 1`, accelerated by Rayleigh–Ritz
/// extraction on the accumulated iterates (shift-invert Lanczos with full
/// reorthogonalization). Needed because central differences decouple the
/// grid into sublattices whose lowest modes are nearly degenerate, which
/// stalls the plain power iteration.
pub fn first_eigenvalue_geometry(geom: &DiscreteGeometry) -> Result<EigenResult> {
    let sigma = geom.s_j_min() - 1.0;
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let nv = geom.inner(v, v).sqrt();
        v.iter_mut().for_each(|a| *a /= nv);
        nv
    };
    let mut first = vec![1.0; geom.len()];
    normalize(&mut first);
    let mut basis: Vec<Vec<f64>> = vec![first];
    let mut l_basis: Vec<Vec<f64>> = vec![geom.apply_l(&basis[0])];
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITER {
        let k = basis.len();
        let h = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            0.5 * (geom.inner(&basis[i], &l_basis[j]) + geom.inner(&basis[j], &l_basis[i]))
        });
        let eig = nalgebra::SymmetricEigen::new(h);
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty basis");
        let y = eig.eigenvectors.column(imin);
        let mut x = vec![0.0; geom.len()];
        let mut lx = vec![0.0; geom.len()];
        for c in 0..k {
            x.iter_mut().zip(&basis[c]).for_each(|(a, b)| *a += y[c] * b);
            lx.iter_mut().zip(&l_basis[c]).for_each(|(a, b)| *a += y[c] * b);
        }
        let r: Vec<f64> = lx.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
        residual = geom.inner(&r, &r).sqrt() / geom.inner(&x, &x).sqrt();
        lambda = theta;
        if residual < 1e-9 {
            return Ok(EigenResult {
                lambda1: lambda,
                shift: sigma,
                iterations: it,
                residual,
            });
        }
        // next direction: (L − σ)⁻¹ applied to the newest basis vector
        let last = basis.last().expect("nonempty basis").clone();
        let mut z = solve_shifted(geom, sigma, &last, &last)?;
        for _ in 0..2 {
            for v in &basis {
                let c = geom.inner(&z, v);
                z.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        if normalize(&mut z) < 1e-12 || k >= EIGEN_MAX_BASIS {
            break;
        }
        l_basis.push(geom.apply_l(&z));
        basis.push(z);
    }
    if residual < 1e-7 {
        return Ok(EigenResult {
            lambda1: lambda,
            shift: sigma,
            iterations: basis.len(),
            residual,
        });
    }
    Err(Error::Eigen(format!(
        "no convergence (λ ≈ {lambda}, residual {residual:e}, basis {})",
        basis.len()
    )))
}

pub fn first_eigenvalue(m: &ChartedManifold, resolution: usize, backend: Backend) -> Result<EigenResult> {
    first_eigenvalue_geometry(&DiscreteGeometry::new(m, resolution, backend)?)
}

// ---------------------------------------------------------------------------
// prescribing curvature

/// `T(u) = u^{−a}(α Δ_h u + k u)`.
pub fn kw_operator(
    geom: &DiscreteGeometry,
    u: &DiscreteField,
    a: f64,
    alpha: f64,
    k: &DiscreteField,
) -> Result<DiscreteField> {
    u.same_shape(k)?;
    geom.check(&u.values)?;
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!(
            "u must be positive (min {})",
            u.min()
        )));
    }
    let lap = geom.laplacian(&u.values);
    let values = (0..u.values.len())
        .map(|i| u.values[i].powf(-a) * (alpha * lap[i] + k.values[i] * u.values[i]))
        .collect();
    Ok(DiscreteField {
        dim: u.dim,
        resolution: u.resolution,
        values,
    })
}

/// Whether `K` can be the `S_J`-curvature of a metric in a conformal class
/// whose invariant has sign `y_sign`.
pub fn prescribable(k: &[f64], y_sign: i32) -> bool {
    let min = k.iter().copied().fold(f64::INFINITY, f64::min);
    let max = k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match y_sign.signum() {
        -1 => min < 0.0,
        0 => (min < 0.0 && max > 0.0) || k.iter().all(|v| v.abs() <= 1e-12),
        _ => max > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::make_flat_torus;

    #[test]
    fn spectral_derivative_of_sine() {
        for m in [8usize, 9] {
            let d = difference_coefficients(Backend::Spectral, m);
            let h = std::f64::consts::TAU / m as f64;
            for k in 0..m {
                let v: f64 = (0..m).map(|o| d[o] * (((k + o) % m) as f64 * h * 2.0).sin()).sum();
                assert!((v - 2.0 * (k as f64 * h * 2.0).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |m: usize| {
            let d = difference_coefficients(Backend::Fd4, m);
            let h = std::f64::consts::TAU / m as f64;
            let v: f64 = (0..m).map(|o| d[o] * (o as f64 * h).sin()).sum();
            (v - 1.0).abs()
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn flat_laplacian_of_cosine() {
        let m = make_flat_torus(2).unwrap();
        let u = FieldExpr::cos_bump(2, 0, 0.0, 1.0);
        let v = laplacian(&m, &u, &[0.4, 0.1]).unwrap();
        assert!((v - 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn trichotomy() {
        assert!(prescribable(&[-1.0; 4], -1));
        assert!(prescribable(&[0.0; 4], 0));
        assert!(!prescribable(&[-3.0; 4], 1));
        assert!(prescribable(&[-1.0, 2.0], 0));
        assert!(!prescribable(&[1.0, 2.0], 0));
    }
}

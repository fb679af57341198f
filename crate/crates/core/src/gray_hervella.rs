//! Gray–Hervella class membership by residuals of the defining conditions.
//!
//! All residuals are evaluated in a `g`-orthonormal, `J`-adapted frame, so
//! norms are plain Euclidean norms of frame components. Conditions quadratic
//! in a vector (nearly Kähler, `G₁`) are polarized over `e_i` and
//! `e_i + e_j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{curvature_pack, idx3, CurvaturePack};
use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, TorusGrid};
use crate::linalg;
use crate::manifold::ChartedManifold;

pub const DEFAULT_TOL: f64 = 1e-8;
/// Per-axis resolution of the trapezoid rule for `∫ S_J dV`.
pub const DEFAULT_QUADRATURE_RESOLUTION: usize = 4;

/// Pointwise residuals; each is a norm, hence nonnegative.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// `|∇ω|`
    pub kahler: f64,
    /// `max_X |∇_Xω(X, ·)|`
    pub w1: f64,
    /// `|dω|`
    pub w2: f64,
    /// `|δω|`
    pub delta_omega: f64,
    /// `|N_J|`
    pub nijenhuis: f64,
    /// `|∇ω − W₄ template|`
    pub w4: f64,
    /// `max |𝔖_{XYZ}{∇_Zω(X,Y) − ∇_{JZ}ω(JX,Y)}|`
    pub cyclic: f64,
    /// `max_X |∇_Xω(X,·) − ∇_{JX}ω(JX,·)|`
    pub g1: f64,
}

impl Residuals {
    fn max_with(&mut self, o: &Residuals) {
        self.kahler = self.kahler.max(o.kahler);
        self.w1 = self.w1.max(o.w1);
        self.w2 = self.w2.max(o.w2);
        self.delta_omega = self.delta_omega.max(o.delta_omega);
        self.nijenhuis = self.nijenhuis.max(o.nijenhuis);
        self.w4 = self.w4.max(o.w4);
        self.cyclic = self.cyclic.max(o.cyclic);
        self.g1 = self.g1.max(o.g1);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    pub kahler: bool,
    pub nearly_kahler: bool,
    pub almost_kahler: bool,
    pub balanced: bool,
    pub w4: bool,
    pub w2_plus_w3: bool,
    pub hermitian: bool,
    pub g1: bool,
}

impl Verdicts {
    fn from(r: &Residuals, tol: f64) -> Self {
        Verdicts {
            kahler: r.kahler < tol,
            nearly_kahler: r.w1 < tol,
            almost_kahler: r.w2 < tol,
            balanced: r.delta_omega < tol && r.nijenhuis < tol,
            w4: r.w4 < tol,
            w2_plus_w3: r.delta_omega < tol && r.cyclic < tol,
            hermitian: r.nijenhuis < tol,
            g1: r.g1 < tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub label: String,
    pub tol: f64,
    pub points_sampled: usize,
    /// Maximum of each residual over the sampled points.
    pub residuals: Residuals,
    pub verdicts: Verdicts,
    pub s_j_min: f64,
    pub s_j_max: f64,
    /// `∫ S_J dV` by the trapezoid rule; `None` off the torus.
    pub integral_s_j: Option<f64>,
    pub quadrature_resolution: Option<usize>,
}

/// Frame components of `∇ω`, of `J` and of `δω` at one point.
struct FrameData {
    n: usize,
    alpha: Vec<f64>,
    jf: Vec<f64>,
    delta: Vec<f64>,
}

impl FrameData {
    fn new(p: &CurvaturePack) -> Result<Self> {
        let n = p.n;
        let order: Vec<usize> = (0..n).collect();
        let e = p.adapted_frame(&order)?;
        let mut alpha = vec![0.0; n * n * n];
        // contract one slot at a time
        let mut t1 = vec![0.0; n * n * n];
        for a in 0..n {
            for q in 0..n {
                for r in 0..n {
                    t1[idx3(n, a, q, r)] = (0..n).map(|s| e[a][s] * p.nabla_omega[idx3(n, s, q, r)]).sum();
                }
            }
        }
        let mut t2 = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for r in 0..n {
                    t2[idx3(n, a, b, r)] = (0..n).map(|q| e[b][q] * t1[idx3(n, a, q, r)]).sum();
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    alpha[idx3(n, a, b, c)] = (0..n).map(|r| e[c][r] * t2[idx3(n, a, b, r)]).sum();
                }
            }
        }
        // jf[a*n+b] = g(e_a, J e_b)
        let mut jf = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut v = 0.0;
                for s in 0..n {
                    for t in 0..n {
                        let je: f64 = (0..n).map(|u| p.j[t * n + u] * e[b][u]).sum();
                        v += e[a][s] * p.g[s * n + t] * je;
                    }
                }
                jf[a * n + b] = v;
            }
        }
        let delta = (0..n)
            .map(|c| (0..n).map(|r| e[c][r] * p.delta_omega[r]).sum())
            .collect();
        Ok(FrameData { n, alpha, jf, delta })
    }

    fn alpha_at(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    s += x[a] * y[b] * z[c] * self.alpha[idx3(n, a, b, c)];
                }
            }
        }
        s
    }

    fn j_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|a| (0..n).map(|b| self.jf[a * n + b] * x[b]).sum()).collect()
    }

    fn polarization_set(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            out.push(v);
            for j in i + 1..n {
                let mut w = vec![0.0; n];
                w[i] = 1.0;
                w[j] = 1.0;
                out.push(w);
            }
        }
        out
    }

    fn unit(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[i] = 1.0;
        v
    }

    fn residuals(&self, nijenhuis: f64) -> Residuals {
        let n = self.n;
        let nf = n as f64;
        let basis: Vec<Vec<f64>> = (0..n).map(|i| self.unit(i)).collect();
        let jb: Vec<Vec<f64>> = basis.iter().map(|v| self.j_apply(v)).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();

        let kahler = norm(&self.alpha);

        let mut w1: f64 = 0.0;
        let mut g1: f64 = 0.0;
        for x in self.polarization_set() {
            let jx = self.j_apply(&x);
            let v: Vec<f64> = basis.iter().map(|y| self.alpha_at(&x, &x, y)).collect();
            let u: Vec<f64> = basis.iter().map(|y| self.alpha_at(&jx, &jx, y)).collect();
            w1 = w1.max(norm(&v));
            let d: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
            g1 = g1.max(norm(&d));
        }

        let mut d_omega = vec![0.0; n * n * n];
        let mut w4 = vec![0.0; n * n * n];
        let mut cyc: f64 = 0.0;
        let delta_j: Vec<f64> = (0..n).map(|c| (0..n).map(|a| self.delta[a] * self.jf[a * n + c]).sum()).collect();
        let f = |x: usize, y: usize, z: usize| -> f64 {
            self.alpha[idx3(n, z, x, y)] - self.alpha_at(&jb[z], &jb[x], &basis[y])
        };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let al = &self.alpha;
                    d_omega[idx3(n, a, b, c)] =
                        al[idx3(n, a, b, c)] + al[idx3(n, b, c, a)] + al[idx3(n, c, a, b)];
                    let g_ab = if a == b { 1.0 } else { 0.0 };
                    let g_ac = if a == c { 1.0 } else { 0.0 };
                    // g(X, JY) = jf[x][y] in an orthonormal frame
                    let template = -1.0 / (nf - 2.0)
                        * (g_ab * self.delta[c] - g_ac * self.delta[b] - self.jf[a * n + b] * delta_j[c]
                            + self.jf[a * n + c] * delta_j[b]);
                    w4[idx3(n, a, b, c)] = al[idx3(n, a, b, c)] - template;
                    let s = f(a, b, c) + f(b, c, a) + f(c, a, b);
                    cyc = cyc.max(s.abs());
                }
            }
        }
        Residuals {
            kahler,
            w1,
            w2: norm(&d_omega),
            delta_omega: norm(&self.delta),
            nijenhuis,
            w4: if n > 2 { norm(&w4) } else { 0.0 },
            cyclic: cyc,
            g1,
        }
    }
}

/// Residuals of every Table-1 condition at one point.
pub fn point_residuals(m: &ChartedManifold, x: &[f64]) -> Result<(Residuals, f64)> {
    let p = curvature_pack(m, x)?;
    let fd = FrameData::new(&p)?;
    Ok((fd.residuals(p.nijenhuis_norm()), p.s_j))
}

/// `∫ S_J dV_g` by the trapezoid rule on a uniform torus grid.
pub fn integrate_s_j(m: &ChartedManifold, resolution: usize) -> Result<f64> {
    if !m.is_torus() {
        return Err(Error::UnsupportedQuadrature(format!(
            "{} is not a torus chart; no global quadrature",
            m.label
        )));
    }
    let grid = TorusGrid::new(m.dim, resolution);
    let vals = grid.tabulate(&m.depends_on(), |x| {
        let p = curvature_pack(m, x)?;
        Ok(p.s_j * linalg::determinant(&p.g, m.dim).sqrt())
    })?;
    Ok(pairwise_sum(&vals) * grid.cell_volume())
}

pub fn classify(m: &ChartedManifold, num_points: usize, tol: f64) -> Result<ClassReport> {
    classify_with(m, num_points, tol, DEFAULT_QUADRATURE_RESOLUTION)
}

pub fn classify_with(
    m: &ChartedManifold,
    num_points: usize,
    tol: f64,
    quadrature_resolution: usize,
) -> Result<ClassReport> {
    if num_points == 0 {
        return Err(Error::InvalidArgument("num_points must be >= 1".into()));
    }
    let points = m.sample_points(num_points);
    let per_point = points
        .par_iter()
        .map(|x| point_residuals(m, x))
        .collect::<Result<Vec<_>>>()?;
    let mut residuals = Residuals::default();
    let mut s_j_min = f64::INFINITY;
    let mut s_j_max = f64::NEG_INFINITY;
    for (r, s) in &per_point {
        residuals.max_with(r);
        s_j_min = s_j_min.min(*s);
        s_j_max = s_j_max.max(*s);
    }
    let (integral_s_j, quadrature_resolution) = if m.is_torus() {
        (Some(integrate_s_j(m, quadrature_resolution)?), Some(quadrature_resolution))
    } else {
        (None, None)
    };
    Ok(ClassReport {
        label: m.label.clone(),
        tol,
        points_sampled: num_points,
        verdicts: Verdicts::from(&residuals, tol),
        residuals,
        s_j_min,
        s_j_max,
        integral_s_j,
        quadrature_resolution,
    })
}

/// Consistency of the report with the integral sign theorems.
pub fn sign_crosscheck(report: &ClassReport, m: &ChartedManifold) -> Result<Vec<Diagnostic>> {
    let integral = match (m.is_torus(), report.integral_s_j) {
        (true, Some(v)) => v,
        _ => {
            return Err(Error::UnsupportedQuadrature(format!(
                "sign cross-check skipped for {}: no global quadrature on this chart",
                m.label
            )))
        }
    };
    let tol = report.tol;
    let mut out = Vec::new();
    if report.verdicts.g1 && integral < -tol {
        out.push(Diagnostic::warn(format!(
            "G1 class but ∫S_J dV = {integral:e} < 0"
        )));
    }
    if report.verdicts.w2_plus_w3 && integral > tol {
        out.push(Diagnostic::warn(format!(
            "W2⊕W3 class but ∫S_J dV = {integral:e} > 0"
        )));
    }
    if report.verdicts.w2_plus_w3 && report.s_j_max > tol {
        out.push(Diagnostic::warn(format!(
            "W2⊕W3 class but S_J = {:e} > 0 at a sampled point",
            report.s_j_max
        )));
    }
    if out.is_empty() {
        out.push(Diagnostic::info(format!(
            "sign cross-check consistent (∫S_J dV = {integral:e})"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::make_flat_torus;

    #[test]
    fn flat_torus_is_kahler() {
        let m = make_flat_torus(6).unwrap();
        let r = classify(&m, 10, DEFAULT_TOL).unwrap();
        assert!(r.verdicts.kahler && r.verdicts.hermitian && r.verdicts.g1);
        assert!(r.residuals.kahler <= 1e-12);
        assert_eq!(r.integral_s_j, Some(0.0));
    }
}

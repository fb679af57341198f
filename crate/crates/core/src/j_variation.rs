//! Compatible deformations of `J`, the path `J(t) = J e^{−tJK}`, the
//! `J`-Ricci form and its type decomposition, and the first variation of
//! the invariant along the path.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{curvature_pack, CurvaturePack};
use crate::error::{Error, Result};
use crate::field::FieldExpr;
use crate::grid::pairwise_sum;
use crate::jet::Scalar;
use crate::linalg;
use crate::manifold::{random_trig, ChartedManifold, Structure};
use crate::sampling::seeded_rng;
use crate::yamabe::{minimize_qj_geometry, DiscreteField, DiscreteGeometry, MinimizeOptions, YamabeRun};

/// Pointwise invariant tolerance for deformations and paths.
pub const DEFORMATION_TOL: f64 = 1e-10;
/// Threshold on `‖(Ric*)^skew‖_g` below which `J` is declared critical.
pub const CRITICAL_TOL: f64 = 1e-8;

/// `P(skew_g A)` with `skew_g A = (A − g⁻¹Aᵀg)/2` and `P(B) = (B + JBJ)/2`.
pub(crate) fn project_pointwise<S: Scalar>(a: &[S], g: &[S], j: &[S], n: usize) -> Result<Vec<S>> {
    let g_inv = linalg::inverse(g, n)?;
    let adj = linalg::mat_mul(&linalg::mat_mul(&g_inv, &linalg::transpose(a, n), n), g, n);
    let skew: Vec<S> = a
        .iter()
        .zip(&adj)
        .map(|(x, y)| (x.clone() - y.clone()).scaled(0.5))
        .collect();
    let jsj = linalg::mat_mul(&linalg::mat_mul(j, &skew, n), j, n);
    Ok(skew
        .iter()
        .zip(&jsj)
        .map(|(x, y)| (x.clone() + y.clone()).scaled(0.5))
        .collect())
}

/// A compatible deformation `K`, stored as the raw field `A` it projects
/// from; `K = P(skew_g A)` is formed pointwise from `g` and `J`.
#[derive(Clone, Debug)]
pub struct CompatibleDeformation {
    pub base: ChartedManifold,
    pub raw: Vec<FieldExpr>,
}

/// Residuals of the two defining constraints of a deformation at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeformationResiduals {
    /// `max |KJ + JK|`
    pub anticommutation: f64,
    /// `max |g(K·,·) + g(·,K·)|`
    pub g_skew: f64,
}

impl DeformationResiduals {
    pub fn max(&self) -> f64 {
        self.anticommutation.max(self.g_skew)
    }
}

pub fn project_deformation(raw: Vec<FieldExpr>, m: &ChartedManifold) -> Result<CompatibleDeformation> {
    if raw.len() != m.dim * m.dim {
        return Err(Error::Dimension(format!(
            "deformation needs {} entries, got {}",
            m.dim * m.dim,
            raw.len()
        )));
    }
    Ok(CompatibleDeformation {
        base: m.clone(),
        raw,
    })
}

/// Random raw field for a deformation: independent trigonometric entries.
pub fn random_raw_field(n: usize, seed: u64, amplitude: f64) -> Vec<FieldExpr> {
    let mut rng = seeded_rng(seed);
    (0..n * n)
        .map(|_| random_trig(&mut rng, n, 2, 1, None).scaled(amplitude))
        .collect()
}

/// Constraint residuals of an arbitrary `(1,1)` matrix `k` against `(g, J)`.
pub fn constraint_residuals(k: &[f64], g: &[f64], j: &[f64], n: usize) -> DeformationResiduals {
    let kj = linalg::mat_mul(k, j, n);
    let jk = linalg::mat_mul(j, k, n);
    let anti: Vec<f64> = kj.iter().zip(&jk).map(|(a, b)| a + b).collect();
    // g(KX, Y) = (Kᵀ g)_{xy}
    let kflat = linalg::mat_mul(&linalg::transpose(k, n), g, n);
    let skew: Vec<f64> = (0..n * n)
        .map(|idx| kflat[idx] + kflat[(idx % n) * n + idx / n])
        .collect();
    DeformationResiduals {
        anticommutation: linalg::max_abs(&anti),
        g_skew: linalg::max_abs(&skew),
    }
}

impl CompatibleDeformation {
    pub fn dim(&self) -> usize {
        self.base.dim
    }

    /// `K^i_j` at `x`.
    pub fn at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.base.fields(x, 0)?;
        let a: Vec<f64> = self.raw.iter().map(|e| e.value_at(x)).collect();
        project_pointwise(&a, &f.g_values(), &f.j_values(), self.dim())
    }

    pub fn residuals(&self, x: &[f64]) -> Result<DeformationResiduals> {
        let f = self.base.fields(x, 0)?;
        Ok(constraint_residuals(&self.at(x)?, &f.g_values(), &f.j_values(), self.dim()))
    }

    /// `K♭(X, Y) = g(KX, Y)`, i.e. `K♭_ij = K^a_i g_aj`.
    pub fn flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let f = self.base.fields(x, 0)?;
        let k = self.at(x)?;
        Ok(linalg::mat_mul(&linalg::transpose(&k, n), &f.g_values(), n))
    }

    pub fn depends_on(&self) -> Vec<bool> {
        let n = self.dim();
        let mut mask = self.base.depends_on();
        for e in &self.raw {
            for (m, d) in mask.iter_mut().zip(e.depends_on(n)) {
                *m |= d;
            }
        }
        mask
    }

    /// `K(A₁ + A₂)` from the raw fields of two deformations on the same base.
    pub fn superpose(&self, other: &CompatibleDeformation) -> Result<CompatibleDeformation> {
        let raw = self
            .raw
            .iter()
            .zip(&other.raw)
            .map(|(a, b)| a.clone().plus(b.clone()))
            .collect();
        project_deformation(raw, &self.base)
    }

    pub fn scaled(&self, c: f64) -> CompatibleDeformation {
        CompatibleDeformation {
            base: self.base.clone(),
            raw: self.raw.iter().map(|a| a.clone().scaled(c)).collect(),
        }
    }
}

/// `t ↦ J(t) = J e^{−tJK}` with the metric held fixed.
#[derive(Clone, Debug)]
pub struct JPath {
    pub deformation: CompatibleDeformation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathResiduals {
    pub t: f64,
    /// `max |J(t)² + I|`
    pub j_squared: f64,
    /// `max |J(t)ᵀ g J(t) − g|`
    pub compatibility: f64,
}

impl JPath {
    pub fn new(deformation: CompatibleDeformation) -> Self {
        JPath { deformation }
    }

    pub fn manifold_at(&self, t: f64) -> ChartedManifold {
        let base = &self.deformation.base;
        ChartedManifold::new(
            base.dim,
            Structure::Deformed {
                base: Box::new(base.structure.clone()),
                raw: self.deformation.raw.clone(),
                t,
            },
            base.domain.clone(),
            format!("{} deformed(t={t})", base.label),
        )
    }

    pub fn j_at(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.manifold_at(t).fields(x, 0)?.j_values())
    }

    pub fn residuals(&self, t: f64, x: &[f64]) -> Result<PathResiduals> {
        let r = self.manifold_at(t).check_invariants(x)?;
        Ok(PathResiduals {
            t,
            j_squared: r.j_squared_residual,
            compatibility: r.compatibility_residual,
        })
    }

    /// `max |(J(h) − J(−h))/2h − K|` at `x`.
    pub fn derivative_residual(&self, x: &[f64], h: f64) -> Result<f64> {
        let jp = self.j_at(h, x)?;
        let jm = self.j_at(-h, x)?;
        let k = self.deformation.at(x)?;
        Ok(jp
            .iter()
            .zip(&jm)
            .zip(&k)
            .map(|((a, b), c)| ((a - b) / (2.0 * h) - c).abs())
            .fold(0.0, f64::max))
    }
}

// ---------------------------------------------------------------------------
// J-Ricci form

/// Type decomposition of a covariant 2-tensor: `A = A' + A''` with
/// `A'(JX, JY) = −A'(X, Y)` and `A''(JX, JY) = A''(X, Y)`.
pub fn type_decomposition(a: &[f64], j: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    // A(JX, JY) for basis vectors = (Jᵀ A J)_{xy}
    let ajj = linalg::mat_mul(&linalg::mat_mul(&linalg::transpose(j, n), a, n), j, n);
    let a20: Vec<f64> = a.iter().zip(&ajj).map(|(x, y)| 0.5 * (x - y)).collect();
    let a11: Vec<f64> = a.iter().zip(&ajj).map(|(x, y)| 0.5 * (x + y)).collect();
    (a20, a11)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoDecomposition {
    /// `max_ab |(ρ^J)^{2,0+0,2}(e_a, e_b) − (Ric*)^skew(Je_b, e_a)|`
    pub residual: f64,
    /// `max |(ρ^J)^{2,0+0,2}|`
    pub lhs_max: f64,
    /// Defect of the two type relations and of `A = A' + A''`.
    pub decomposition_residual: f64,
}

pub fn rho_decomposition(p: &CurvaturePack) -> RhoDecomposition {
    let n = p.n;
    let j = &p.j;
    let (r20, r11) = type_decomposition(&p.rho_j, j, n);
    let jt = linalg::transpose(j, n);
    // (Ric*)^skew(Je_b, e_a) = Σ_c J^c_b S_ca
    let mut residual: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let rhs: f64 = (0..n).map(|c| j[c * n + b] * p.star_ric_skew[c * n + a]).sum();
            residual = residual.max((r20[a * n + b] - rhs).abs());
        }
    }
    let twist = |t: &[f64]| linalg::mat_mul(&linalg::mat_mul(&jt, t, n), j, n);
    let t20 = twist(&r20);
    let t11 = twist(&r11);
    let mut dec: f64 = 0.0;
    for k in 0..n * n {
        dec = dec
            .max((t20[k] + r20[k]).abs())
            .max((t11[k] - r11[k]).abs())
            .max((r20[k] + r11[k] - p.rho_j[k]).abs());
    }
    RhoDecomposition {
        residual,
        lhs_max: linalg::max_abs(&r20),
        decomposition_residual: dec,
    }
}

pub fn rho_decomposition_residual(m: &ChartedManifold, x: &[f64]) -> Result<RhoDecomposition> {
    Ok(rho_decomposition(&curvature_pack(m, x)?))
}

/// `−2⟨K♭, ρ^J⟩_g` at a point: the pointwise rate of change of `S_J` along
/// the path.
pub fn s_j_rate(k: &CompatibleDeformation, x: &[f64]) -> Result<f64> {
    let p = curvature_pack(&k.base, x)?;
    Ok(-2.0 * p.inner2(&k.flat(x)?, &p.rho_j))
}

/// Pairing checks at a point: `⟨K♭, ρ^J⟩ − ⟨K♭, (ρ^J)^{2,0+0,2}⟩` and the
/// antisymmetry / `J`-relations of `K♭`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatPairing {
    pub pairing_defect: f64,
    pub antisymmetry: f64,
    pub j_relation: f64,
}

pub fn flat_pairing(k: &CompatibleDeformation, x: &[f64]) -> Result<FlatPairing> {
    let n = k.dim();
    let p = curvature_pack(&k.base, x)?;
    let kf = k.flat(x)?;
    let (r20, _) = type_decomposition(&p.rho_j, &p.j, n);
    let mut antisymmetry: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            antisymmetry = antisymmetry.max((kf[a * n + b] + kf[b * n + a]).abs());
        }
    }
    // K♭(JX, Y) = (Jᵀ K♭)_{xy}, K♭(X, JY) = (K♭ J)_{xy}
    let left = linalg::mat_mul(&linalg::transpose(&p.j, n), &kf, n);
    let right = linalg::mat_mul(&kf, &p.j, n);
    let j_relation = left
        .iter()
        .zip(&right)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(FlatPairing {
        pairing_defect: (p.inner2(&kf, &p.rho_j) - p.inner2(&kf, &r20)).abs(),
        antisymmetry,
        j_relation,
    })
}

// ---------------------------------------------------------------------------
// first variation

#[derive(Clone, Debug, Serialize)]
pub struct DyFormula {
    pub value: f64,
    pub resolution: usize,
    /// Euler–Lagrange residual of the minimizer the formula used.
    pub el_residual: f64,
    pub minimizer_converged: bool,
    pub y_estimate: f64,
}

/// `−2 ∫ ⟨K♭, ρ^J⟩_g u² dV` on the grid of `geom` for a minimizer `u`
/// normalized by `‖u‖_p = 1`.
pub fn dy_formula_with(geom: &DiscreteGeometry, k: &CompatibleDeformation, run: &YamabeRun) -> Result<DyFormula> {
    if run.minimizer.resolution != geom.grid.resolution || run.minimizer.dim != geom.dim() {
        return Err(Error::Dependency("minimizer does not live on this grid".into()));
    }
    if !k.base.is_torus() {
        return Err(Error::UnsupportedQuadrature(format!("{} is not a torus chart", k.base.label)));
    }
    let rate = geom.grid.tabulate(&k.depends_on(), |x| s_j_rate(k, x))?;
    let w = geom.volume_density();
    let u = &run.minimizer.values;
    let terms: Vec<f64> = (0..u.len())
        .into_par_iter()
        .map(|i| rate[i] * u[i] * u[i] * w[i])
        .collect();
    Ok(DyFormula {
        // + 0.0 turns a signed zero from −2·0 into a plain one
        value: pairwise_sum(&terms) * geom.grid.cell_volume() + 0.0,
        resolution: geom.grid.resolution,
        el_residual: run.el_residual,
        minimizer_converged: run.converged,
        y_estimate: run.final_value,
    })
}

/// Runs the minimizer on the base and evaluates the formula with it.
pub fn dy_formula(k: &CompatibleDeformation, opts: &MinimizeOptions) -> Result<(DyFormula, YamabeRun)> {
    let geom = DiscreteGeometry::new(&k.base, opts.resolution, opts.backend)?;
    let run = minimize_qj_geometry(&geom, opts, None)?;
    Ok((dy_formula_with(&geom, k, &run)?, run))
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteDifferenceDy {
    pub value: f64,
    pub h: f64,
    pub y_plus: f64,
    pub y_minus: f64,
    pub converged: bool,
    pub el_residuals: [f64; 2],
}

/// `(Y(h) − Y(−h)) / 2h` with `Y(±h)` the discrete minima for `J(±h)`.
/// Both runs start from `initial` when given (normally the base minimizer,
/// which keeps them in the same basin).
pub fn finite_diff_dy(
    k: &CompatibleDeformation,
    opts: &MinimizeOptions,
    h: f64,
    initial: Option<&DiscreteField>,
) -> Result<FiniteDifferenceDy> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {h}")));
    }
    let path = JPath::new(k.clone());
    let run = |t: f64| -> Result<YamabeRun> {
        let geom = DiscreteGeometry::new(&path.manifold_at(t), opts.resolution, opts.backend)?;
        minimize_qj_geometry(&geom, opts, initial)
    };
    let plus = run(h)?;
    let minus = run(-h)?;
    Ok(FiniteDifferenceDy {
        value: (plus.final_value - minus.final_value) / (2.0 * h),
        h,
        y_plus: plus.final_value,
        y_minus: minus.final_value,
        converged: plus.converged && minus.converged,
        el_residuals: [plus.el_residual, minus.el_residual],
    })
}

/// `(max ‖(Ric*)^skew‖_g over sample points, verdict)`.
pub fn critical_point_test(m: &ChartedManifold, num_points: usize) -> Result<(f64, bool)> {
    let norms = m
        .sample_points(num_points)
        .par_iter()
        .map(|x| curvature_pack(m, x).map(|p| p.norm2(&p.star_ric_skew)))
        .collect::<Result<Vec<f64>>>()?;
    let worst = norms.into_iter().fold(0.0, f64::max);
    Ok((worst, worst < CRITICAL_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_compatible_torus, make_flat_torus, standard_j};

    #[test]
    fn projector_kills_j() {
        let n = 4;
        let j = standard_j(n);
        let mut g = vec![0.0; n * n];
        (0..n).for_each(|i| g[i * n + i] = 1.0);
        let k = project_pointwise(&j, &g, &j, n).unwrap();
        assert!(linalg::max_abs(&k) < 1e-15);
    }

    #[test]
    fn projector_is_idempotent() {
        let m = make_compatible_torus(6, 3, 0.1).unwrap();
        let x = [0.3, 1.1, 2.0, 4.0, 5.5, 0.7];
        let f = m.fields(&x, 0).unwrap();
        let (g, j) = (f.g_values(), f.j_values());
        let a: Vec<f64> = (0..36).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let k = project_pointwise(&a, &g, &j, 6).unwrap();
        let kk = project_pointwise(&k, &g, &j, 6).unwrap();
        let diff: Vec<f64> = k.iter().zip(&kk).map(|(a, b)| a - b).collect();
        assert!(linalg::max_abs(&diff) < 1e-13);
        assert!(constraint_residuals(&k, &g, &j, 6).max() < 1e-12);
    }

    #[test]
    fn flat_torus_path_is_compatible() {
        let m = make_flat_torus(6).unwrap();
        let k = project_deformation(random_raw_field(6, 1, 0.5), &m).unwrap();
        let path = JPath::new(k);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(path.j_at(0.0, &x).unwrap(), standard_j(6));
        let r = path.residuals(0.1, &x).unwrap();
        assert!(r.j_squared < 1e-12 && r.compatibility < 1e-12);
    }
}

//! Charted almost-Hermitian manifolds with jet-evaluable `g` and `J`.
//!
//! A [`ChartedManifold`] pairs a chart domain with a [`Structure`]: either
//! explicit component fields, or a construction (conformal change,
//! pullback, symplectic conjugation, deformation of `J`) applied to a base.
//! Evaluation at a point yields jets of every component of `g_ij` and of
//! `J^i_j` (row `i` is the upper index).

use rand::Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::{FieldExpr, Monomial, TrigTerm};
use crate::jet::Jet;
use crate::linalg;
use crate::octonion::OctonionTable;
use crate::sampling;

/// Tolerances for the pointwise structure invariants.
pub const J_SQUARED_TOL: f64 = 1e-12;
pub const COMPATIBILITY_TOL: f64 = 1e-12;

/// Number of random trigonometric terms per generated matrix entry.
pub const TERMS_PER_ENTRY: usize = 2;
/// Largest absolute frequency drawn by the generators.
pub const MAX_FREQUENCY: i32 = 2;
/// Probe points used to enforce positivity of generated metrics.
pub const POSITIVITY_PROBES: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Periodic coordinates on `[0, 2π)^n`.
    Torus,
    /// Coordinate ball `|x| <= radius`.
    Ball { radius: f64 },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Torus => x.iter().all(|v| v.is_finite()),
            Domain::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>().sqrt() <= *radius,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Torus => "torus [0,2π)^n".to_string(),
            Domain::Ball { radius } => format!("coordinate ball |x| <= {radius}"),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::ChartDomain {
                point: x.to_vec(),
                domain: self.describe(),
            })
        }
    }
}

/// One invertible map of a pullback chain, with analytic inverse.
#[derive(Clone, Debug)]
pub struct DiffeoStage {
    pub map: Vec<FieldExpr>,
    pub inverse: Vec<FieldExpr>,
    jacobian: Vec<FieldExpr>,
}

impl DiffeoStage {
    pub fn new(map: Vec<FieldExpr>, inverse: Vec<FieldExpr>) -> Self {
        let n = map.len();
        let jacobian = (0..n * n).map(|k| map[k / n].derivative(k % n)).collect();
        DiffeoStage {
            map,
            inverse,
            jacobian,
        }
    }

    pub fn identity(n: usize) -> Self {
        let map: Vec<FieldExpr> = (0..n).map(FieldExpr::Coord).collect();
        DiffeoStage::new(map.clone(), map)
    }

    pub fn translation(shift: &[f64]) -> Self {
        let map = shift
            .iter()
            .enumerate()
            .map(|(i, &c)| FieldExpr::Coord(i).plus(FieldExpr::Const(c)))
            .collect();
        let inverse = shift
            .iter()
            .enumerate()
            .map(|(i, &c)| FieldExpr::Coord(i).plus(FieldExpr::Const(-c)))
            .collect();
        DiffeoStage::new(map, inverse)
    }

    /// `x ↦ x + s(x) e_axis` where `s` does not depend on `x_axis`.
    pub fn shear(n: usize, axis: usize, profile: FieldExpr) -> Result<Self> {
        if profile.depends_on(n)[axis] {
            return Err(Error::Pullback(format!(
                "shear profile along axis {axis} depends on that axis"
            )));
        }
        let mut map: Vec<FieldExpr> = (0..n).map(FieldExpr::Coord).collect();
        let mut inverse = map.clone();
        map[axis] = FieldExpr::Coord(axis).plus(profile.clone());
        inverse[axis] = FieldExpr::Coord(axis).minus(profile);
        Ok(DiffeoStage::new(map, inverse))
    }
}

/// How the fields of a manifold are produced.
#[derive(Clone, Debug)]
pub enum Structure {
    Explicit {
        metric: Vec<FieldExpr>,
        acs: Vec<FieldExpr>,
    },
    /// `J = A J₀ A⁻¹` with `A = exp(amplitude·S)`, `S` valued in the Lie
    /// algebra of the symplectic group of `ω₀`; `g(X,Y) = ω₀(X, JY)`.
    SymplecticConjugate {
        generator: Vec<FieldExpr>,
        amplitude: f64,
    },
    /// Metric `factor^exponent · g`, same `J`.
    Conformal {
        base: Box<Structure>,
        factor: FieldExpr,
        exponent: f64,
    },
    /// `(φ*g, dφ⁻¹ ∘ J ∘ dφ)` for `φ = stages[last] ∘ … ∘ stages[0]`.
    Pullback {
        base: Box<Structure>,
        stages: Vec<DiffeoStage>,
    },
    /// `J(t) = J exp(-t J K)` with `K` the compatible projection of `raw`;
    /// metric unchanged.
    Deformed {
        base: Box<Structure>,
        raw: Vec<FieldExpr>,
        t: f64,
    },
}

/// Component jets of `g` and `J` at one point.
#[derive(Clone, Debug)]
pub struct PointFields {
    pub n: usize,
    pub g: Vec<Jet>,
    pub j: Vec<Jet>,
}

impl PointFields {
    pub fn g_values(&self) -> Vec<f64> {
        linalg::values(&self.g)
    }

    pub fn j_values(&self) -> Vec<f64> {
        linalg::values(&self.j)
    }
}

impl Structure {
    fn eval(&self, n: usize, inputs: &[Jet], domain: &Domain) -> Result<(Vec<Jet>, Vec<Jet>)> {
        match self {
            Structure::Explicit { metric, acs } => {
                let g = metric.iter().map(|f| f.eval(inputs)).collect();
                let j = acs.iter().map(|f| f.eval(inputs)).collect();
                Ok((g, j))
            }
            Structure::SymplecticConjugate {
                generator,
                amplitude,
            } => {
                let m: Vec<Jet> = generator
                    .iter()
                    .map(|f| f.eval(inputs).scale(*amplitude))
                    .collect();
                let a = linalg::expm(&m, n)?;
                let proto = &inputs[0];
                let j0: Vec<Jet> = standard_j(n).iter().map(|&v| proto.lift(v)).collect();
                let omega0: Vec<Jet> = linalg::transpose(&j0, n);
                // A is symplectic: A⁻¹ = Ω₀⁻¹ Aᵀ Ω₀ = J₀ Aᵀ J₀ᵀ
                let a_inv = linalg::mat_mul(&linalg::mat_mul(&j0, &linalg::transpose(&a, n), n), &omega0, n);
                let j = linalg::mat_mul(&linalg::mat_mul(&a, &j0, n), &a_inv, n);
                let g = linalg::mat_mul(&omega0, &j, n);
                let g = symmetrize(&g, n);
                Ok((g, j))
            }
            Structure::Conformal {
                base,
                factor,
                exponent,
            } => {
                let (g, j) = base.eval(n, inputs, domain)?;
                let u = factor.eval(inputs);
                if !(u.value() > 0.0) {
                    let at: Vec<f64> = inputs.iter().map(Jet::value).collect();
                    return Err(Error::Positivity(format!(
                        "conformal factor {} <= 0 at {at:?}",
                        u.value()
                    )));
                }
                let w = u.powf(*exponent);
                Ok((g.iter().map(|gij| gij.mul_jet(&w)).collect(), j))
            }
            Structure::Pullback { base, stages } => {
                let proto = &inputs[0];
                let mut y: Vec<Jet> = inputs.to_vec();
                let mut d = linalg::identity_like(proto, n);
                for stage in stages {
                    let js: Vec<Jet> = stage.jacobian.iter().map(|f| f.eval(&y)).collect();
                    d = linalg::mat_mul(&js, &d, n);
                    y = stage.map.iter().map(|f| f.eval(&y)).collect();
                }
                let x: Vec<f64> = inputs.iter().map(Jet::value).collect();
                let mut back: Vec<f64> = y.iter().map(Jet::value).collect();
                for stage in stages.iter().rev() {
                    back = stage.inverse.iter().map(|f| f.value_at(&back)).collect();
                }
                let mismatch = back
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if mismatch > 1e-9 * (1.0 + linalg::max_abs(&x)) {
                    return Err(Error::Pullback(format!(
                        "supplied inverse misses the point by {mismatch:e}"
                    )));
                }
                let dv = linalg::values(&d);
                if linalg::determinant(&dv, n).abs() < 1e-12 {
                    return Err(Error::Pullback(format!(
                        "differential is not invertible at {x:?}"
                    )));
                }
                let yv: Vec<f64> = y.iter().map(Jet::value).collect();
                domain.check(&yv)?;
                let (gb, jb) = base.eval(n, &y, domain)?;
                let dt = linalg::transpose(&d, n);
                let g = symmetrize(&linalg::mat_mul(&linalg::mat_mul(&dt, &gb, n), &d, n), n);
                let d_inv = linalg::inverse(&d, n)
                    .map_err(|e| Error::Pullback(format!("differential: {e}")))?;
                let j = linalg::mat_mul(&linalg::mat_mul(&d_inv, &jb, n), &d, n);
                Ok((g, j))
            }
            Structure::Deformed { base, raw, t } => {
                let (g, j) = base.eval(n, inputs, domain)?;
                let a: Vec<Jet> = raw.iter().map(|f| f.eval(inputs)).collect();
                let k = crate::j_variation::project_pointwise(&a, &g, &j, n)?;
                let jk = linalg::mat_mul(&j, &k, n);
                let e = linalg::expm(&linalg::mat_scale(&jk, -*t), n)?;
                let jt = linalg::mat_mul(&j, &e, n);
                Ok((g, jt))
            }
        }
    }

    fn mark_dependencies(&self, n: usize, mask: &mut [bool]) {
        let mut mark = |f: &FieldExpr| {
            for (m, d) in mask.iter_mut().zip(f.depends_on(n)) {
                *m |= d;
            }
        };
        match self {
            Structure::Explicit { metric, acs } => {
                metric.iter().for_each(&mut mark);
                acs.iter().for_each(&mut mark);
            }
            Structure::SymplecticConjugate { generator, .. } => generator.iter().for_each(&mut mark),
            Structure::Conformal { base, factor, .. } => {
                mark(factor);
                base.mark_dependencies(n, mask);
            }
            Structure::Pullback { .. } => mask.iter_mut().for_each(|m| *m = true),
            Structure::Deformed { base, raw, .. } => {
                raw.iter().for_each(&mut mark);
                base.mark_dependencies(n, mask);
            }
        }
    }
}

fn symmetrize(a: &[Jet], n: usize) -> Vec<Jet> {
    (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            (&a[i * n + j] + &a[j * n + i]).scale(0.5)
        })
        .collect()
}

/// `J₀`: `J₀ e_{2k} = e_{2k+1}`, `J₀ e_{2k+1} = -e_{2k}` (0-based).
pub fn standard_j(n: usize) -> Vec<f64> {
    let mut j = vec![0.0; n * n];
    for k in 0..n / 2 {
        let (a, b) = (2 * k, 2 * k + 1);
        j[b * n + a] = 1.0;
        j[a * n + b] = -1.0;
    }
    j
}

/// Residuals of the pointwise structure invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub positive_definite: bool,
    pub symmetric_residual: f64,
    pub j_squared_residual: f64,
    pub compatibility_residual: f64,
}

impl InvariantReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.positive_definite
            && self.symmetric_residual <= tol
            && self.j_squared_residual <= tol
            && self.compatibility_residual <= tol
    }
}

#[derive(Clone, Debug)]
pub struct ChartedManifold {
    pub dim: usize,
    pub structure: Structure,
    pub domain: Domain,
    pub label: String,
}

impl ChartedManifold {
    pub fn new(dim: usize, structure: Structure, domain: Domain, label: impl Into<String>) -> Self {
        ChartedManifold {
            dim,
            structure,
            domain,
            label: label.into(),
        }
    }

    pub fn is_torus(&self) -> bool {
        self.domain == Domain::Torus
    }

    /// Jets of `g` and `J` at `x`.
    pub fn fields(&self, x: &[f64], order: u8) -> Result<PointFields> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, manifold has dimension {}",
                x.len(),
                self.dim
            )));
        }
        self.domain.check(x)?;
        let inputs = Jet::coordinates(x, order);
        let (g, j) = self.structure.eval(self.dim, &inputs, &self.domain)?;
        Ok(PointFields { n: self.dim, g, j })
    }

    pub fn check_invariants(&self, x: &[f64]) -> Result<InvariantReport> {
        let n = self.dim;
        let f = self.fields(x, 0)?;
        let g = f.g_values();
        let j = f.j_values();
        let symmetric_residual = (0..n * n)
            .map(|k| (g[k] - g[(k % n) * n + k / n]).abs())
            .fold(0.0, f64::max);
        let jj = linalg::mat_mul(&j, &j, n);
        let j_squared_residual = (0..n * n)
            .map(|k| (jj[k] + if k / n == k % n { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let jt = linalg::transpose(&j, n);
        let jtgj = linalg::mat_mul(&linalg::mat_mul(&jt, &g, n), &j, n);
        let compatibility_residual = jtgj
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(InvariantReport {
            positive_definite: linalg::cholesky(&g, n).is_some(),
            symmetric_residual,
            j_squared_residual,
            compatibility_residual,
        })
    }

    /// Coordinates the fields may depend on; a torus grid only needs to be
    /// sampled along these axes.
    pub fn depends_on(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim];
        self.structure.mark_dependencies(self.dim, &mut mask);
        mask
    }

    /// Deterministic quasi-random points in the chart domain.
    pub fn sample_points(&self, count: usize) -> Vec<Vec<f64>> {
        match &self.domain {
            Domain::Torus => sampling::torus_points(count, self.dim),
            Domain::Ball { radius } => sampling::ball_points(count, self.dim, *radius),
        }
    }

    fn ensure_positive(&self) -> Result<()> {
        for x in self.sample_points(POSITIVITY_PROBES) {
            let f = self.fields(&x, 0)?;
            if linalg::cholesky(&f.g_values(), self.dim).is_none() {
                return Err(Error::Generator(format!(
                    "{}: metric is not positive definite at {x:?}; use a smaller amplitude",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

fn check_even_dim(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Dimension(format!(
            "almost-Hermitian charts need even dimension >= 2, got {n}"
        )));
    }
    Ok(())
}

fn constant_matrix(a: &[f64]) -> Vec<FieldExpr> {
    a.iter().map(|&v| FieldExpr::Const(v)).collect()
}

/// A random trigonometric polynomial. Stream order: for each term, `n`
/// frequencies in `[-max_freq, max_freq]`, then the cosine and sine
/// coefficients in `[-1, 1)`. Frequencies along `skip_axis` are forced to 0
/// (after drawing, so the stream does not depend on it).
pub fn random_trig<R: Rng>(
    rng: &mut R,
    n: usize,
    terms: usize,
    max_freq: i32,
    skip_axis: Option<usize>,
) -> FieldExpr {
    let out = (0..terms)
        .map(|_| {
            let mut freq: Vec<i32> = (0..n).map(|_| rng.gen_range(-max_freq..=max_freq)).collect();
            if let Some(a) = skip_axis {
                freq[a] = 0;
            }
            let cos = rng.gen_range(-1.0..1.0);
            let sin = rng.gen_range(-1.0..1.0);
            TrigTerm { freq, cos, sin }
        })
        .collect();
    FieldExpr::Trig(out)
}

/// Random symmetric matrix of trigonometric polynomials, drawn entry by
/// entry over `i <= j` in row-major order.
fn random_symmetric_trig<R: Rng>(rng: &mut R, n: usize) -> Vec<FieldExpr> {
    let mut m = vec![FieldExpr::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let f = random_trig(rng, n, TERMS_PER_ENTRY, MAX_FREQUENCY, None);
            m[i * n + j] = f.clone();
            m[j * n + i] = f;
        }
    }
    m
}

/// `Σ_ab A[a][i] h[a][b] B[b][j]` for constant `A`, `B`.
fn sandwich(a: &[f64], h: &[FieldExpr], b: &[f64], n: usize) -> Vec<FieldExpr> {
    (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let mut terms = Vec::new();
            for p in 0..n {
                for q in 0..n {
                    let c = a[p * n + i] * b[q * n + j];
                    if c != 0.0 {
                        terms.push(h[p * n + q].clone().scaled(c));
                    }
                }
            }
            FieldExpr::sum(terms)
        })
        .collect()
}

pub fn make_flat_torus(n: usize) -> Result<ChartedManifold> {
    check_even_dim(n)?;
    let mut id = vec![0.0; n * n];
    for i in 0..n {
        id[i * n + i] = 1.0;
    }
    Ok(ChartedManifold::new(
        n,
        Structure::Explicit {
            metric: constant_matrix(&id),
            acs: constant_matrix(&standard_j(n)),
        },
        Domain::Torus,
        format!("flat_torus{n}"),
    ))
}

/// Hermitian torus: constant `J₀` and `g = (h + J₀ᵀ h J₀)/2` with
/// `h = I + amplitude·H(x)`, `H` a random symmetric trigonometric matrix.
pub fn make_compatible_torus(n: usize, seed: u64, amplitude: f64) -> Result<ChartedManifold> {
    check_even_dim(n)?;
    let mut rng = sampling::seeded_rng(seed);
    let noise = random_symmetric_trig(&mut rng, n);
    let h: Vec<FieldExpr> = (0..n * n)
        .map(|k| {
            let delta = if k / n == k % n { 1.0 } else { 0.0 };
            FieldExpr::Const(delta).plus(noise[k].clone().scaled(amplitude))
        })
        .collect();
    let j0 = standard_j(n);
    let twisted = sandwich(&j0, &h, &j0, n);
    let metric = h
        .iter()
        .zip(twisted)
        .map(|(a, b)| a.clone().plus(b).scaled(0.5))
        .collect();
    let m = ChartedManifold::new(
        n,
        Structure::Explicit {
            metric,
            acs: constant_matrix(&j0),
        },
        Domain::Torus,
        format!("compatible_torus{n}(seed={seed}, amplitude={amplitude})"),
    );
    m.ensure_positive()?;
    Ok(m)
}

/// Almost-Kähler torus with constant fundamental form `ω₀`.
pub fn make_almost_kahler_torus(n: usize, seed: u64, amplitude: f64) -> Result<ChartedManifold> {
    check_even_dim(n)?;
    let mut rng = sampling::seeded_rng(seed);
    let sigma = random_symmetric_trig(&mut rng, n);
    // S = J₀ Σ satisfies Sᵀω₀ + ω₀S = 0 for ω₀ = J₀ᵀ
    let j0 = standard_j(n);
    let mut id = vec![0.0; n * n];
    for i in 0..n {
        id[i * n + i] = 1.0;
    }
    let j0t = linalg::transpose(&j0, n);
    let generator = sandwich(&j0t, &sigma, &id, n);
    let m = ChartedManifold::new(
        n,
        Structure::SymplecticConjugate {
            generator,
            amplitude,
        },
        Domain::Torus,
        format!("almost_kahler_torus{n}(seed={seed}, amplitude={amplitude})"),
    );
    m.ensure_positive()?;
    Ok(m)
}

/// Chart radius for the sphere charts.
pub const S6_CHART_RADIUS: f64 = 0.9;

/// Unit `S⁶ ⊂ Im 𝕆` in the orthographic chart `x ↦ (x, ±√(1-|x|²))` over
/// the hemisphere selected by `upper`, with `J_p(v) = p·v`.
pub fn make_cayley_s6_hemisphere(upper: bool) -> ChartedManifold {
    let n = 6;
    let table = OctonionTable::fano();
    let sign = if upper { 1.0 } else { -1.0 };
    // 1 - |x|^2
    let mut monos = vec![Monomial {
        exps: vec![0; n],
        coeff: 1.0,
    }];
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        monos.push(Monomial { exps: e, coeff: -1.0 });
    }
    let radial = FieldExpr::Poly(monos);
    let height = radial.clone().sqrt().scaled(sign);
    let mut metric = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let delta = FieldExpr::Const(if i == j { 1.0 } else { 0.0 });
            let xx = FieldExpr::Coord(i).times(FieldExpr::Coord(j));
            metric.push(delta.plus(xx.over(radial.clone())));
        }
    }
    // J^i_j = Σ_a x_a c[a][j][i] + s c[6][j][i] + (∂_j s) Σ_a x_a c[a][6][i]
    let mut acs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut terms = Vec::new();
            for a in 0..n {
                let c = table.constant(a, j, i);
                if c != 0.0 {
                    terms.push(FieldExpr::Coord(a).scaled(c));
                }
            }
            let c = table.constant(6, j, i);
            if c != 0.0 {
                terms.push(height.clone().scaled(c));
            }
            let mut normal = Vec::new();
            for a in 0..n {
                let c = table.constant(a, 6, i);
                if c != 0.0 {
                    normal.push(FieldExpr::Coord(a).scaled(c));
                }
            }
            if !normal.is_empty() {
                // ∂_j s = -x_j / s
                let ds = FieldExpr::Coord(j).over(height.clone()).scaled(-1.0);
                terms.push(ds.times(FieldExpr::sum(normal)));
            }
            acs.push(FieldExpr::sum(terms));
        }
    }
    ChartedManifold::new(
        n,
        Structure::Explicit { metric, acs },
        Domain::Ball {
            radius: S6_CHART_RADIUS,
        },
        if upper { "cayley_s6" } else { "cayley_s6(lower)" },
    )
}

pub fn make_cayley_s6() -> ChartedManifold {
    make_cayley_s6_hemisphere(true)
}

/// Round unit `S^n` in the stereographic chart, `g = 4/(1+|x|²)² δ`, with the
/// constant (chart-local) complex structure `J₀`.
pub fn make_round_sphere(n: usize) -> Result<ChartedManifold> {
    check_even_dim(n)?;
    let mut monos = vec![Monomial {
        exps: vec![0; n],
        coeff: 1.0,
    }];
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        monos.push(Monomial { exps: e, coeff: 1.0 });
    }
    let conf = FieldExpr::Const(4.0).over(FieldExpr::Poly(monos).powf(2.0));
    let metric = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                conf.clone()
            } else {
                FieldExpr::zero()
            }
        })
        .collect();
    Ok(ChartedManifold::new(
        n,
        Structure::Explicit {
            metric,
            acs: constant_matrix(&standard_j(n)),
        },
        Domain::Ball { radius: 2.0 },
        format!("round_sphere{n}"),
    ))
}

/// Conformal exponent `p - 2 = 4/(n-2)` for `p = 2n/(n-2)`.
pub fn conformal_exponent(n: usize) -> f64 {
    4.0 / (n as f64 - 2.0)
}

/// `(M, u^{p-2} g, J)`; positivity of `u` is checked where evaluated.
pub fn make_conformal(m: &ChartedManifold, u: FieldExpr) -> Result<ChartedManifold> {
    if m.dim <= 2 {
        return Err(Error::Dimension("conformal change needs n > 2".into()));
    }
    Ok(ChartedManifold::new(
        m.dim,
        Structure::Conformal {
            base: Box::new(m.structure.clone()),
            factor: u,
            exponent: conformal_exponent(m.dim),
        },
        m.domain.clone(),
        format!("conformal({})", m.label),
    ))
}

/// `(M, φ*g, J_φ)` for `φ` given as a chain of analytically invertible stages.
pub fn make_pullback(m: &ChartedManifold, stages: Vec<DiffeoStage>) -> Result<ChartedManifold> {
    for s in &stages {
        if s.map.len() != m.dim || s.inverse.len() != m.dim {
            return Err(Error::Dimension("diffeomorphism arity mismatch".into()));
        }
    }
    Ok(ChartedManifold::new(
        m.dim,
        Structure::Pullback {
            base: Box::new(m.structure.clone()),
            stages,
        },
        m.domain.clone(),
        format!("pullback({})", m.label),
    ))
}

/// Seeded torus diffeomorphism: one shear per axis, applied in axis order.
/// Stream order: for axis `0..n`, one [`random_trig`] draw of
/// [`TERMS_PER_ENTRY`] terms with the sheared axis' frequency zeroed.
pub fn make_shear_diffeo(n: usize, seed: u64, amplitude: f64) -> Result<Vec<DiffeoStage>> {
    let mut rng = sampling::seeded_rng(seed);
    (0..n)
        .map(|axis| {
            let profile = random_trig(&mut rng, n, TERMS_PER_ENTRY, MAX_FREQUENCY, Some(axis));
            DiffeoStage::shear(n, axis, profile.scaled(amplitude))
        })
        .collect()
}

/// `φ(x)` for a chain of stages, applied in order (as by [`make_pullback`]).
pub fn apply_stages(stages: &[DiffeoStage], x: &[f64]) -> Vec<f64> {
    stages.iter().fold(x.to_vec(), |y, stage| {
        stage.map.iter().map(|f| f.value_at(&y)).collect()
    })
}

/// Wraps a point into the fundamental cell of the torus.
pub fn wrap_torus(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.rem_euclid(TAU)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_dimension_rejected() {
        assert!(matches!(make_flat_torus(5), Err(Error::Dimension(_))));
        assert!(matches!(make_flat_torus(0), Err(Error::Dimension(_))));
    }

    #[test]
    fn flat_torus_invariants() {
        let m = make_flat_torus(6).unwrap();
        for x in m.sample_points(20) {
            assert!(m.check_invariants(&x).unwrap().passes(0.0));
        }
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let m = make_compatible_torus(6, 3, 0.0).unwrap();
        let f = m.fields(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let jet = &f.g[i * 6 + j];
                assert_eq!(jet.value(), if i == j { 1.0 } else { 0.0 });
                assert!(jet.grad().iter().all(|v| *v == 0.0));
            }
        }
        let ak = make_almost_kahler_torus(6, 3, 0.0).unwrap();
        let f = ak.fields(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 2).unwrap();
        let j0 = standard_j(6);
        for k in 0..36 {
            assert_eq!(f.j[k].value(), j0[k]);
        }
    }

    #[test]
    fn generators_pass_invariants() {
        let gens = vec![
            make_compatible_torus(6, 11, 0.1).unwrap(),
            make_almost_kahler_torus(6, 11, 0.1).unwrap(),
        ];
        for m in gens {
            for x in m.sample_points(100) {
                let r = m.check_invariants(&x).unwrap();
                assert!(r.passes(1e-12), "{}: {r:?}", m.label);
            }
        }
    }

    #[test]
    fn cayley_chart_boundary() {
        let m = make_cayley_s6();
        let err = m.fields(&[0.95, 0.0, 0.0, 0.0, 0.0, 0.0], 2).unwrap_err();
        assert!(matches!(err, Error::ChartDomain { .. }));
    }

    #[test]
    fn positivity_violation_reported() {
        let m = make_flat_torus(6).unwrap();
        let u = FieldExpr::cos_bump(6, 0, 0.5, 1.0);
        let c = make_conformal(&m, u).unwrap();
        let err = c.fields(&[std::f64::consts::PI, 0.0, 0.0, 0.0, 0.0, 0.0], 2).unwrap_err();
        assert!(matches!(err, Error::Positivity(_)));
    }

    #[test]
    fn oversized_amplitude_rejected() {
        assert!(matches!(
            make_compatible_torus(6, 1, 5.0),
            Err(Error::Generator(_))
        ));
    }

    #[test]
    fn bad_inverse_rejected() {
        let m = make_flat_torus(2).unwrap();
        let stage = DiffeoStage::new(
            vec![FieldExpr::Coord(0).plus(FieldExpr::Const(1.0)), FieldExpr::Coord(1)],
            vec![FieldExpr::Coord(0), FieldExpr::Coord(1)],
        );
        let p = make_pullback(&m, vec![stage]).unwrap();
        assert!(matches!(p.fields(&[0.3, 0.2], 2), Err(Error::Pullback(_))));
    }

    #[test]
    fn dependency_mask_of_conformal_flat() {
        let m = make_flat_torus(6).unwrap();
        let c = make_conformal(&m, FieldExpr::cos_bump(6, 0, 1.0, 0.2)).unwrap();
        assert_eq!(c.depends_on(), vec![true, false, false, false, false, false]);
    }
}

//! Pointwise curvature of an almost-Hermitian chart.
//!
//! Sign conventions:
//! * `R(X,Y)Z = ∇_{[X,Y]}Z − [∇_X, ∇_Y]Z`, `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`,
//!   so the unit sphere has `R_ijkl = g_ik g_jl − g_jk g_il`;
//! * `Ric(X,Y) = tr{Z ↦ R(X,Z)Y}`, `Ric*(X,Y) = tr{Z ↦ −J R(X,Z)JY}`;
//! * `ω(X,Y) = g(JX,Y)`, `ρ^J(X,Y) = −Ric*(X,JY)`;
//! * `δω_c = −g^{ab} ∇_a ω_bc`;
//! * `h ⊙ k (X,Y,Z,U) = h(X,Z)k(Y,U) + h(Y,U)k(X,Z) − h(X,U)k(Y,Z) − h(Y,Z)k(X,U)`
//!   and `R = −R_g/(2(n−1)(n−2)) g⊙g + 1/(n−2) Ric⊙g + W`.
//!
//! Tensors are flat row-major arrays; see [`idx3`] and [`idx4`].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::ChartedManifold;

#[inline]
pub fn idx3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

#[inline]
pub fn idx4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

/// Factor in `Ŵ(ω♯,ω♯) = W_HAT_FACTOR · ω^{ij} ω^{kl} W_ijkl`: with
/// `ω♯ = ½ ω^{ij} ∂_i∧∂_j` and `Ŵ(X∧Y, Z∧U) = W(X,Y,Z,U)` extended
/// bilinearly, each bivector contributes one half.
pub const W_HAT_FACTOR: f64 = 0.25;

#[derive(Clone, Debug, Serialize)]
pub struct CurvaturePack {
    pub n: usize,
    pub point: Vec<f64>,
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    /// `J^i_j` at `i*n + j`.
    pub j: Vec<f64>,
    /// `Γ^k_ij` at `idx3(k, i, j)`.
    pub gamma: Vec<f64>,
    /// `R_ijkl` at `idx4(i, j, k, l)`.
    pub riem: Vec<f64>,
    pub ric: Vec<f64>,
    pub star_ric: Vec<f64>,
    pub scalar: f64,
    pub star_scalar: f64,
    pub s_j: f64,
    pub weyl: Vec<f64>,
    /// Full contraction `ω^{ij} ω^{kl} W_ijkl`.
    pub w_contraction: f64,
    pub w_hat_omega: f64,
    pub rho_j: Vec<f64>,
    pub star_ric_skew: Vec<f64>,
    pub omega: Vec<f64>,
    /// `∇_a ω_bc` at `idx3(a, b, c)`.
    pub nabla_omega: Vec<f64>,
    /// `N^k_ij` at `idx3(i, j, k)`.
    pub nijenhuis: Vec<f64>,
    pub delta_omega: Vec<f64>,
    /// Coordinate exterior derivative `(dω)_abc` at `idx3(a, b, c)`.
    pub d_omega: Vec<f64>,
}

/// Scalar digest of a pack, used in reports.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureSummary {
    pub point: Vec<f64>,
    pub scalar: f64,
    pub star_scalar: f64,
    pub s_j: f64,
    pub s_j_frame: f64,
    pub w_hat_omega: f64,
    pub weyl_identity_residual: f64,
    pub nijenhuis_norm: f64,
    pub nabla_omega_norm: f64,
    pub star_ric_skew_norm: f64,
    pub symmetry_residual: f64,
}

pub fn curvature_pack(m: &ChartedManifold, x: &[f64]) -> Result<CurvaturePack> {
    let n = m.dim;
    let f = m.fields(x, 2)?;
    let g = f.g_values();
    let jv = f.j_values();
    let g_inv = linalg::inverse(&g, n)
        .map_err(|e| Error::LinearAlgebra(format!("metric at {x:?}: {e}")))?;

    // dg[k][i][j] = ∂_k g_ij, ddg[k][l][i][j] = ∂_k∂_l g_ij, dj[a][i][j] = ∂_a J^i_j
    let mut dg = vec![0.0; n * n * n];
    let mut ddg = vec![0.0; n * n * n * n];
    let mut dj = vec![0.0; n * n * n];
    for i in 0..n {
        for jj in 0..n {
            let gij = &f.g[i * n + jj];
            let jij = &f.j[i * n + jj];
            for k in 0..n {
                dg[idx3(n, k, i, jj)] = gij.d1(k);
                dj[idx3(n, k, i, jj)] = jij.d1(k);
                for l in 0..n {
                    ddg[idx4(n, k, l, i, jj)] = gij.d2(k, l);
                }
            }
        }
    }

    // first-kind symbols Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij) and their derivatives
    let mut gam1 = vec![0.0; n * n * n];
    let mut dgam1 = vec![0.0; n * n * n * n]; // [m][l][i][j]
    for l in 0..n {
        for i in 0..n {
            for jj in 0..n {
                gam1[idx3(n, l, i, jj)] =
                    0.5 * (dg[idx3(n, i, jj, l)] + dg[idx3(n, jj, i, l)] - dg[idx3(n, l, i, jj)]);
                for mm in 0..n {
                    dgam1[idx4(n, mm, l, i, jj)] = 0.5
                        * (ddg[idx4(n, mm, i, jj, l)] + ddg[idx4(n, mm, jj, i, l)]
                            - ddg[idx4(n, mm, l, i, jj)]);
                }
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for jj in 0..n {
                gamma[idx3(n, k, i, jj)] = (0..n)
                    .map(|l| g_inv[k * n + l] * gam1[idx3(n, l, i, jj)])
                    .sum();
            }
        }
    }
    // ∂_m Γ^k_ij = g^{kl} (∂_m Γ_lij − ∂_m g_lq Γ^q_ij)
    let mut dgamma = vec![0.0; n * n * n * n]; // [m][k][i][j]
    for mm in 0..n {
        for l in 0..n {
            for i in 0..n {
                for jj in 0..n {
                    let mut t = dgam1[idx4(n, mm, l, i, jj)];
                    for q in 0..n {
                        t -= dg[idx3(n, mm, l, q)] * gamma[idx3(n, q, i, jj)];
                    }
                    if t == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        dgamma[idx4(n, mm, k, i, jj)] += g_inv[k * n + l] * t;
                    }
                }
            }
        }
    }

    // standard-sign Rstd^m_ijk = ∂_iΓ^m_jk − ∂_jΓ^m_ik + Γ^p_jk Γ^m_ip − Γ^p_ik Γ^m_jp;
    // R_ijkl = −g_lm Rstd^m_ijk
    let mut rstd = vec![0.0; n * n * n * n]; // [m][i][j][k]
    for mm in 0..n {
        for i in 0..n {
            for jj in 0..n {
                for k in 0..n {
                    let mut v = dgamma[idx4(n, i, mm, jj, k)] - dgamma[idx4(n, jj, mm, i, k)];
                    for p in 0..n {
                        v += gamma[idx3(n, p, jj, k)] * gamma[idx3(n, mm, i, p)]
                            - gamma[idx3(n, p, i, k)] * gamma[idx3(n, mm, jj, p)];
                    }
                    rstd[idx4(n, mm, i, jj, k)] = v;
                }
            }
        }
    }
    let mut riem = vec![0.0; n * n * n * n];
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    riem[idx4(n, i, jj, k, l)] = -(0..n)
                        .map(|mm| g[l * n + mm] * rstd[idx4(n, mm, i, jj, k)])
                        .sum::<f64>();
                }
            }
        }
    }

    let mut ric = vec![0.0; n * n];
    for i in 0..n {
        for jj in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                for l in 0..n {
                    v += g_inv[k * n + l] * riem[idx4(n, i, k, jj, l)];
                }
            }
            ric[i * n + jj] = v;
        }
    }
    // Ric*_ij = g^{kl} J^a_j J^b_l R_ikab; first T_ikjb = J^a_j R_ikab
    let mut t = vec![0.0; n * n * n * n];
    for i in 0..n {
        for k in 0..n {
            for b in 0..n {
                for jj in 0..n {
                    t[idx4(n, i, k, jj, b)] = (0..n)
                        .map(|a| jv[a * n + jj] * riem[idx4(n, i, k, a, b)])
                        .sum();
                }
            }
        }
    }
    // Jg^{kb} = g^{kl} J^b_l
    let mut jg = vec![0.0; n * n];
    for k in 0..n {
        for b in 0..n {
            jg[k * n + b] = (0..n).map(|l| g_inv[k * n + l] * jv[b * n + l]).sum();
        }
    }
    let mut star_ric = vec![0.0; n * n];
    for i in 0..n {
        for jj in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                for b in 0..n {
                    v += jg[k * n + b] * t[idx4(n, i, k, jj, b)];
                }
            }
            star_ric[i * n + jj] = v;
        }
    }
    let trace = |a: &[f64]| -> f64 { (0..n * n).map(|k| g_inv[k] * a[k]).sum() };
    let scalar = trace(&ric);
    let star_scalar = trace(&star_ric);
    let s_j = scalar - star_scalar;

    let weyl = weyl_tensor(n, &g, &riem, &ric, scalar);

    let mut omega = vec![0.0; n * n];
    for i in 0..n {
        for jj in 0..n {
            omega[i * n + jj] = (0..n).map(|a| jv[a * n + i] * g[a * n + jj]).sum();
        }
    }
    let omega_up = raise_both(n, &g_inv, &omega);
    let mut w_contraction = 0.0;
    for i in 0..n {
        for jj in 0..n {
            let o1 = omega_up[i * n + jj];
            if o1 == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    w_contraction += o1 * omega_up[k * n + l] * weyl[idx4(n, i, jj, k, l)];
                }
            }
        }
    }

    let mut rho_j = vec![0.0; n * n];
    let mut star_ric_skew = vec![0.0; n * n];
    for i in 0..n {
        for jj in 0..n {
            rho_j[i * n + jj] = -(0..n).map(|a| jv[a * n + jj] * star_ric[i * n + a]).sum::<f64>();
            star_ric_skew[i * n + jj] = 0.5 * (star_ric[i * n + jj] - star_ric[jj * n + i]);
        }
    }

    // ∂_a ω_bc = ∂_a J^d_b g_dc + J^d_b ∂_a g_dc
    let mut domega = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                domega[idx3(n, a, b, c)] = (0..n)
                    .map(|d| {
                        dj[idx3(n, a, d, b)] * g[d * n + c] + jv[d * n + b] * dg[idx3(n, a, d, c)]
                    })
                    .sum();
            }
        }
    }
    let mut nabla_omega = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = domega[idx3(n, a, b, c)];
                for d in 0..n {
                    v -= gamma[idx3(n, d, a, b)] * omega[d * n + c]
                        + gamma[idx3(n, d, a, c)] * omega[b * n + d];
                }
                nabla_omega[idx3(n, a, b, c)] = v;
            }
        }
    }
    let mut delta_omega = vec![0.0; n];
    for c in 0..n {
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                v -= g_inv[a * n + b] * nabla_omega[idx3(n, a, b, c)];
            }
        }
        delta_omega[c] = v;
    }
    let mut d_omega = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                d_omega[idx3(n, a, b, c)] =
                    domega[idx3(n, a, b, c)] + domega[idx3(n, b, c, a)] + domega[idx3(n, c, a, b)];
            }
        }
    }

    let nijenhuis = nijenhuis_from(n, &jv, &dj);

    Ok(CurvaturePack {
        n,
        point: x.to_vec(),
        g,
        g_inv,
        j: jv,
        gamma,
        riem,
        ric,
        star_ric,
        scalar,
        star_scalar,
        s_j,
        weyl,
        w_contraction,
        w_hat_omega: W_HAT_FACTOR * w_contraction,
        rho_j,
        star_ric_skew,
        omega,
        nabla_omega,
        nijenhuis,
        delta_omega,
        d_omega,
    })
}

/// `N^k_ij = J^a_i ∂_a J^k_j − J^a_j ∂_a J^k_i − J^k_a (∂_i J^a_j − ∂_j J^a_i)`.
fn nijenhuis_from(n: usize, jv: &[f64], dj: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                let mut v = 0.0;
                for a in 0..n {
                    v += jv[a * n + i] * dj[idx3(n, a, k, jj)] - jv[a * n + jj] * dj[idx3(n, a, k, i)];
                    v -= jv[k * n + a] * (dj[idx3(n, i, a, jj)] - dj[idx3(n, jj, a, i)]);
                }
                out[idx3(n, i, jj, k)] = v;
            }
        }
    }
    out
}

/// Kulkarni–Nomizu product of two symmetric 2-tensors.
pub fn kulkarni_nomizu(n: usize, h: &[f64], k: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n * n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for u in 0..n {
                    out[idx4(n, x, y, z, u)] = h[x * n + z] * k[y * n + u]
                        + h[y * n + u] * k[x * n + z]
                        - h[x * n + u] * k[y * n + z]
                        - h[y * n + z] * k[x * n + u];
                }
            }
        }
    }
    out
}

fn weyl_tensor(n: usize, g: &[f64], riem: &[f64], ric: &[f64], scalar: f64) -> Vec<f64> {
    if n < 3 {
        return vec![0.0; n * n * n * n];
    }
    let nf = n as f64;
    let gg = kulkarni_nomizu(n, g, g);
    let rg = kulkarni_nomizu(n, ric, g);
    let c1 = scalar / (2.0 * (nf - 1.0) * (nf - 2.0));
    let c2 = 1.0 / (nf - 2.0);
    riem.iter()
        .zip(gg.iter().zip(&rg))
        .map(|(r, (a, b))| r + c1 * a - c2 * b)
        .collect()
}

fn raise_both(n: usize, g_inv: &[f64], a: &[f64]) -> Vec<f64> {
    linalg::mat_mul(&linalg::mat_mul(g_inv, a, n), g_inv, n)
}

impl CurvaturePack {
    /// `ω^{ij} = g^{ia} g^{jb} ω_ab`.
    pub fn omega_up(&self) -> Vec<f64> {
        raise_both(self.n, &self.g_inv, &self.omega)
    }

    /// `|T|_g` of a covariant 2-tensor.
    pub fn norm2(&self, t: &[f64]) -> f64 {
        self.inner2(t, t).max(0.0).sqrt()
    }

    /// `⟨A, B⟩_g = g^{ac} g^{bd} A_ab B_cd`.
    pub fn inner2(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let up = raise_both(n, &self.g_inv, b);
        a.iter().zip(&up).map(|(x, y)| x * y).sum()
    }

    /// `|T|_g` of a covariant 3-tensor.
    pub fn norm3(&self, t: &[f64]) -> f64 {
        let n = self.n;
        let gi = &self.g_inv;
        let mut acc = 0.0;
        // raise one index at a time: T^{a}_{bc} etc.
        let raise = |t: &[f64], slot: usize| -> Vec<f64> {
            let mut out = vec![0.0; n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut v = 0.0;
                        for d in 0..n {
                            let src = match slot {
                                0 => idx3(n, d, b, c),
                                1 => idx3(n, a, d, c),
                                _ => idx3(n, a, b, d),
                            };
                            let gi_idx = match slot {
                                0 => a * n + d,
                                1 => b * n + d,
                                _ => c * n + d,
                            };
                            v += gi[gi_idx] * t[src];
                        }
                        out[idx3(n, a, b, c)] = v;
                    }
                }
            }
            out
        };
        let up = raise(&raise(&raise(t, 0), 1), 2);
        for (x, y) in t.iter().zip(&up) {
            acc += x * y;
        }
        acc.max(0.0).sqrt()
    }

    /// `|N_J|_g` treating `N^k_ij` as a vector-valued 2-form.
    pub fn nijenhuis_norm(&self) -> f64 {
        let n = self.n;
        let mut lowered = vec![0.0; n * n * n];
        for i in 0..n {
            for jj in 0..n {
                for k in 0..n {
                    lowered[idx3(n, i, jj, k)] = (0..n)
                        .map(|l| self.g[k * n + l] * self.nijenhuis[idx3(n, i, jj, l)])
                        .sum();
                }
            }
        }
        self.norm3(&lowered)
    }

    /// Max violation of the algebraic curvature symmetries and first Bianchi,
    /// relative to the largest component.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let r = &self.riem;
        let scale = 1.0f64.max(linalg::max_abs(r));
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = r[idx4(n, a, b, c, d)];
                        worst = worst
                            .max((v + r[idx4(n, b, a, c, d)]).abs())
                            .max((v + r[idx4(n, a, b, d, c)]).abs())
                            .max((v - r[idx4(n, c, d, a, b)]).abs())
                            .max(
                                (v + r[idx4(n, b, c, a, d)] + r[idx4(n, c, a, b, d)]).abs(),
                            );
                    }
                }
            }
        }
        worst / scale
    }

    /// `|(n−1) R* − R − 2(n−1) Ŵ(ω♯,ω♯)|`.
    pub fn weyl_identity_residual(&self) -> f64 {
        let k = self.n as f64 - 1.0;
        (k * self.star_scalar - self.scalar - 2.0 * k * self.w_hat_omega).abs()
    }

    /// Full antisymmetrization of `∇ω`, `(dω)_abc = ∇_aω_bc + ∇_bω_ca + ∇_cω_ab`.
    pub fn d_omega_from_nabla(&self) -> Vec<f64> {
        let n = self.n;
        let t = &self.nabla_omega;
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[idx3(n, a, b, c)] = t[idx3(n, a, b, c)] + t[idx3(n, b, c, a)] + t[idx3(n, c, a, b)];
                }
            }
        }
        out
    }

    /// Real orthonormal frame `(e_1, Je_1, e_2, Je_2, …)` (columns), built by
    /// Gram–Schmidt on the coordinate vectors taken in `seed_order`.
    pub fn adapted_frame(&self, seed_order: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        let g = &self.g;
        let ip = |u: &[f64], v: &[f64]| -> f64 {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += u[a] * g[a * n + b] * v[b];
                }
            }
            s
        };
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
        for &s in seed_order {
            if frame.len() == n {
                break;
            }
            let mut v = vec![0.0; n];
            v[s] = 1.0;
            for _ in 0..2 {
                for e in &frame {
                    let c = ip(&v, e);
                    for a in 0..n {
                        v[a] -= c * e[a];
                    }
                }
            }
            let norm = ip(&v, &v).sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            let jvv: Vec<f64> = (0..n)
                .map(|a| (0..n).map(|b| self.j[a * n + b] * v[b]).sum())
                .collect();
            frame.push(v);
            frame.push(jvv);
        }
        if frame.len() != n {
            return Err(Error::LinearAlgebra(
                "could not complete a J-adapted orthonormal frame".into(),
            ));
        }
        Ok(frame)
    }

    /// `4 Σ_{i,j} R^ℂ(Z_i, Z_j, Z̄_i, Z̄_j)` over the unitary frame
    /// `Z_i = (e_i − √−1 Je_i)/√2`; the real part is returned.
    pub fn s_j_frame(&self, seed_order: &[usize]) -> Result<f64> {
        let n = self.n;
        let frame = self.adapted_frame(seed_order)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z: Vec<Vec<Complex64>> = (0..n / 2)
            .map(|i| {
                (0..n)
                    .map(|a| Complex64::new(frame[2 * i][a] * h, -frame[2 * i + 1][a] * h))
                    .collect()
            })
            .collect();
        let r = &self.riem;
        let mut total = Complex64::new(0.0, 0.0);
        for zi in &z {
            for zj in &z {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        let ab = zi[a] * zj[b];
                        if ab == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for c in 0..n {
                            let abc = ab * zi[c].conj();
                            for d in 0..n {
                                acc += abc * zj[d].conj() * r[idx4(n, a, b, c, d)];
                            }
                        }
                    }
                }
                total += acc;
            }
        }
        Ok(4.0 * total.re)
    }

    pub fn summary(&self) -> Result<CurvatureSummary> {
        let order: Vec<usize> = (0..self.n).collect();
        Ok(CurvatureSummary {
            point: self.point.clone(),
            scalar: self.scalar,
            star_scalar: self.star_scalar,
            s_j: self.s_j,
            s_j_frame: self.s_j_frame(&order)?,
            w_hat_omega: self.w_hat_omega,
            weyl_identity_residual: self.weyl_identity_residual(),
            nijenhuis_norm: self.nijenhuis_norm(),
            nabla_omega_norm: self.norm3(&self.nabla_omega),
            star_ric_skew_norm: self.norm2(&self.star_ric_skew),
            symmetry_residual: self.symmetry_residual(),
        })
    }
}

pub fn weyl_identity_residual(m: &ChartedManifold, x: &[f64]) -> Result<f64> {
    Ok(curvature_pack(m, x)?.weyl_identity_residual())
}

pub fn nijenhuis(m: &ChartedManifold, x: &[f64]) -> Result<Vec<f64>> {
    Ok(curvature_pack(m, x)?.nijenhuis)
}

/// The holomorphic d-scalar curvature through the unitary-frame formula.
pub fn s_j_holomorphic_frame(m: &ChartedManifold, x: &[f64]) -> Result<f64> {
    let order: Vec<usize> = (0..m.dim).collect();
    curvature_pack(m, x)?.s_j_frame(&order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_cayley_s6, make_compatible_torus, make_flat_torus};

    #[test]
    fn flat_torus_is_flat() {
        let m = make_flat_torus(6).unwrap();
        let p = curvature_pack(&m, &[0.3, 1.0, 2.0, 0.1, 5.0, 4.0]).unwrap();
        assert!(p.riem.iter().all(|v| *v == 0.0));
        assert_eq!(p.s_j, 0.0);
        assert_eq!(p.nijenhuis_norm(), 0.0);
    }

    #[test]
    fn sphere_chain() {
        let m = make_cayley_s6();
        let x = [0.1, -0.2, 0.3, 0.05, -0.1, 0.2];
        let p = curvature_pack(&m, &x).unwrap();
        let n = 6;
        for k in 0..n * n {
            assert!((p.ric[k] - 5.0 * p.g[k]).abs() < 1e-9);
            assert!((p.star_ric[k] - p.g[k]).abs() < 1e-9);
        }
        assert!((p.scalar - 30.0).abs() < 1e-9);
        assert!((p.star_scalar - 6.0).abs() < 1e-9);
        assert!(linalg::max_abs(&p.weyl) < 1e-9);
        assert!((p.s_j_frame(&[0, 1, 2, 3, 4, 5]).unwrap() - 24.0).abs() < 1e-9);
    }

    #[test]
    fn symmetries_on_compatible_torus() {
        let m = make_compatible_torus(6, 5, 0.1).unwrap();
        for x in m.sample_points(5) {
            let p = curvature_pack(&m, &x).unwrap();
            assert!(p.symmetry_residual() < 1e-10);
            assert!(p.weyl_identity_residual() < 1e-9, "{}", p.weyl_identity_residual());
            let a = p.s_j_frame(&[0, 1, 2, 3, 4, 5]).unwrap();
            let b = p.s_j_frame(&[5, 3, 1, 4, 2, 0]).unwrap();
            assert!((a - p.s_j).abs() < 1e-9, "{a} vs {}", p.s_j);
            assert!((a - b).abs() < 1e-9);
        }
    }
}

//! Truncated Taylor jets of scalar fields in `n` variables.
//!
//! A [`Jet`] carries the value and all partial derivatives up to its order
//! (at most 3) at one point. Arithmetic follows the truncated Leibniz and
//! chain rules, so composite expressions produce exact derivatives up to
//! rounding. Combining jets of different orders truncates to the smaller one.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_ORDER: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    n: usize,
    order: u8,
    // [value | grad (n) | hess (n*n, row-major, symmetric) | third (n^3)]
    data: Vec<f64>,
}

fn storage_len(n: usize, order: u8) -> usize {
    let mut len = 1;
    if order >= 1 {
        len += n;
    }
    if order >= 2 {
        len += n * n;
    }
    if order >= 3 {
        len += n * n * n;
    }
    len
}

impl Jet {
    pub fn constant(n: usize, order: u8, c: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut data = vec![0.0; storage_len(n, order)];
        data[0] = c;
        Jet { n, order, data }
    }

    /// The coordinate function `x_i` seeded at value `x`.
    pub fn variable(n: usize, order: u8, i: usize, x: f64) -> Self {
        let mut j = Self::constant(n, order, x);
        if order >= 1 {
            j.data[1 + i] = 1.0;
        }
        j
    }

    /// Coordinate jets `(x_1, ..., x_n)` at `point`.
    pub fn coordinates(point: &[f64], order: u8) -> Vec<Jet> {
        let n = point.len();
        (0..n).map(|i| Jet::variable(n, order, i, point[i])).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.data[0]
    }

    pub fn grad(&self) -> &[f64] {
        assert!(self.order >= 1, "gradient of an order-0 jet");
        &self.data[1..1 + self.n]
    }

    pub fn d1(&self, i: usize) -> f64 {
        if self.order >= 1 {
            self.data[1 + i]
        } else {
            0.0
        }
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if self.order >= 2 {
            self.data[1 + self.n + i * self.n + j]
        } else {
            0.0
        }
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.order >= 3 {
            let n = self.n;
            self.data[1 + n + n * n + (i * n + j) * n + k]
        } else {
            0.0
        }
    }

    pub fn hess(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.d2(i, j)).collect())
            .collect()
    }

    fn hess_offset(&self) -> usize {
        1 + self.n
    }

    fn third_offset(&self) -> usize {
        1 + self.n + self.n * self.n
    }

    /// Drops derivatives above `order`.
    pub fn truncate(&self, order: u8) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            n: self.n,
            order,
            data: self.data[..storage_len(self.n, order)].to_vec(),
        }
    }

    /// The jet of `∂_i f`, one order lower.
    pub fn partial(&self, i: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let mut out = Jet::constant(n, self.order - 1, self.d1(i));
        if out.order >= 1 {
            for j in 0..n {
                out.data[1 + j] = self.d2(i, j);
            }
        }
        if out.order >= 2 {
            let off = out.hess_offset();
            for j in 0..n {
                for k in 0..n {
                    out.data[off + j * n + k] = self.d3(i, j, k);
                }
            }
        }
        out
    }

    /// Same dimension and order, with value `c` and zero derivatives.
    pub fn lift(&self, c: f64) -> Jet {
        Jet::constant(self.n, self.order, c)
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            n: self.n,
            order: self.order,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.data[0] += c;
        out
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Jet) {
        let order = self.order.min(other.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        let len = self.data.len();
        for (a, b) in self.data.iter_mut().zip(&other.data[..len]) {
            *a += c * b;
        }
    }

    fn combine_linear(&self, other: &Jet, sign: f64) -> Jet {
        assert_eq!(self.n, other.n, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let len = storage_len(self.n, order);
        let data = self.data[..len]
            .iter()
            .zip(&other.data[..len])
            .map(|(a, b)| a + sign * b)
            .collect();
        Jet {
            n: self.n,
            order,
            data,
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        assert_eq!(self.n, other.n, "jet dimension mismatch");
        let n = self.n;
        let order = self.order.min(other.order);
        let mut out = Jet::constant(n, order, self.value() * other.value());
        let (a0, b0) = (self.value(), other.value());
        if order >= 1 {
            for i in 0..n {
                out.data[1 + i] = self.d1(i) * b0 + a0 * other.d1(i);
            }
        }
        if order >= 2 {
            let off = out.hess_offset();
            for i in 0..n {
                for j in i..n {
                    let v = self.d2(i, j) * b0
                        + self.d1(i) * other.d1(j)
                        + self.d1(j) * other.d1(i)
                        + a0 * other.d2(i, j);
                    out.data[off + i * n + j] = v;
                    out.data[off + j * n + i] = v;
                }
            }
        }
        if order >= 3 {
            let off = out.third_offset();
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let v = self.d3(i, j, k) * b0
                            + self.d2(i, j) * other.d1(k)
                            + self.d2(i, k) * other.d1(j)
                            + self.d2(j, k) * other.d1(i)
                            + self.d1(i) * other.d2(j, k)
                            + self.d1(j) * other.d2(i, k)
                            + self.d1(k) * other.d2(i, j)
                            + a0 * other.d3(i, j, k);
                        for (p, q, r) in permutations3(i, j, k) {
                            out.data[off + (p * n + q) * n + r] = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Applies a univariate function given its value and first three
    /// derivatives at `self.value()`.
    pub fn compose(&self, f: [f64; 4]) -> Jet {
        let n = self.n;
        let order = self.order;
        let mut out = Jet::constant(n, order, f[0]);
        if order >= 1 {
            for i in 0..n {
                out.data[1 + i] = f[1] * self.d1(i);
            }
        }
        if order >= 2 {
            let off = out.hess_offset();
            for i in 0..n {
                for j in i..n {
                    let v = f[2] * self.d1(i) * self.d1(j) + f[1] * self.d2(i, j);
                    out.data[off + i * n + j] = v;
                    out.data[off + j * n + i] = v;
                }
            }
        }
        if order >= 3 {
            let off = out.third_offset();
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let v = f[3] * self.d1(i) * self.d1(j) * self.d1(k)
                            + f[2]
                                * (self.d2(i, j) * self.d1(k)
                                    + self.d2(i, k) * self.d1(j)
                                    + self.d2(j, k) * self.d1(i))
                            + f[1] * self.d3(i, j, k);
                        for (p, q, r) in permutations3(i, j, k) {
                            out.data[off + (p * n + q) * n + r] = v;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powf(&self, e: f64) -> Jet {
        let a = self.value();
        if e == 0.0 {
            return self.lift(1.0);
        }
        if e == 1.0 {
            return self.clone();
        }
        let f0 = a.powf(e);
        let f1 = e * a.powf(e - 1.0);
        let f2 = e * (e - 1.0) * a.powf(e - 2.0);
        let f3 = e * (e - 1.0) * (e - 2.0) * a.powf(e - 3.0);
        self.compose([f0, f1, f2, f3])
    }

    pub fn powi(&self, e: i32) -> Jet {
        match e {
            0 => self.lift(1.0),
            1 => self.clone(),
            2 => self.mul_jet(self),
            _ if e < 0 => self.powi(-e).recip(),
            _ => {
                let half = self.powi(e / 2);
                let sq = half.mul_jet(&half);
                if e % 2 == 1 {
                    sq.mul_jet(self)
                } else {
                    sq
                }
            }
        }
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let s = a.sqrt();
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * a),
            0.375 / (s * a * a),
        ])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        self.compose([a.ln(), 1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.combine_linear(rhs, 1.0)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.combine_linear(rhs, -1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.mul_jet(&rhs.recip())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Minimal field-like interface shared by `f64` and [`Jet`], so the small
/// dense matrix routines in [`crate::linalg`] run on either.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// A constant with the same shape as `self`.
    fn lift_const(&self, c: f64) -> Self;
    fn val(&self) -> f64;
    fn scaled(&self, c: f64) -> Self;
    /// Zero value and, for jets, zero derivatives.
    fn is_exact_zero(&self) -> bool;
}

impl Scalar for f64 {
    fn lift_const(&self, c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn scaled(&self, c: f64) -> Self {
        self * c
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Jet {
    fn lift_const(&self, c: f64) -> Self {
        self.lift(c)
    }
    fn val(&self) -> f64 {
        self.value()
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(c)
    }
    fn is_exact_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn cos_at_origin() {
        let x = Jet::coordinates(&[0.0, 0.0, 0.0], 2);
        let c = x[0].cos();
        assert_eq!(c.value(), 1.0);
        assert_eq!(c.grad(), &[0.0, 0.0, 0.0]);
        assert_eq!(c.d2(0, 0), -1.0);
        assert_eq!(c.d2(1, 1), 0.0);
        assert_eq!(c.d2(0, 1), 0.0);
    }

    #[test]
    fn product_of_coordinates() {
        let x = Jet::coordinates(&[1.0, 2.0, 0.5, 0.0], 2);
        let p = &x[0] * &x[1];
        assert_eq!(p.value(), 2.0);
        assert_eq!(p.grad(), &[2.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.d2(0, 1), 1.0);
        assert_eq!(p.d2(1, 0), 1.0);
        assert_eq!(p.d2(0, 0), 0.0);
    }

    #[test]
    fn third_order_of_cubic() {
        // f = x^2 y at (1, 2): f_xxy = 2
        let x = Jet::coordinates(&[1.0, 2.0], 3);
        let f = &(&x[0] * &x[0]) * &x[1];
        assert_eq!(f.d3(0, 0, 1), 2.0);
        assert_eq!(f.d3(1, 0, 0), 2.0);
        assert_eq!(f.d3(0, 0, 0), 0.0);
        assert_eq!(f.d3(1, 1, 0), 0.0);
    }

    #[test]
    fn partial_shifts_order() {
        let x = Jet::coordinates(&[0.3, -0.7], 3);
        let f = (&x[0] * &x[1]).sin();
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        // ∂x sin(xy) = y cos(xy)
        let (s, c) = (0.3f64 * -0.7).sin_cos();
        assert!(close(fx.value(), -0.7 * c, 1e-15));
        // ∂y(y cos(xy)) = cos(xy) - xy sin(xy)
        assert!(close(fx.d1(1), c - 0.3 * -0.7 * s, 1e-14));
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(2, 3, 0, 1.0);
        let b = Jet::variable(2, 2, 1, 1.0);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }

    #[test]
    fn powi_matches_powf() {
        let x = Jet::coordinates(&[1.3, 0.4], 3);
        let base = &x[0] + &x[1].sin();
        let a = base.powi(-3);
        let b = base.powf(-3.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(close(a.d3(i, j, k), b.d3(i, j, k), 1e-12));
                }
            }
        }
    }
}

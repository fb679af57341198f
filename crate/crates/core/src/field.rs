//! Scalar field expressions on a chart, evaluable to exact jets.

use serde::{Deserialize, Serialize};

use crate::jet::Jet;

/// One term `cos·cos(k·x) + sin·sin(k·x)` of a trigonometric polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub exps: Vec<u32>,
    pub coeff: f64,
}

/// A scalar expression in the chart coordinates (or in the outputs of an
/// inner map, for [`FieldExpr::Compose`]).
#[derive(Clone, Debug, PartialEq)]
pub enum FieldExpr {
    Const(f64),
    Coord(usize),
    Trig(Vec<TrigTerm>),
    Poly(Vec<Monomial>),
    Sum(Vec<FieldExpr>),
    Product(Vec<FieldExpr>),
    Quotient(Box<FieldExpr>, Box<FieldExpr>),
    Powf(Box<FieldExpr>, f64),
    Sqrt(Box<FieldExpr>),
    Exp(Box<FieldExpr>),
    Sin(Box<FieldExpr>),
    Cos(Box<FieldExpr>),
    /// `outer(inner_1(x), ..., inner_m(x))`.
    Compose(Box<FieldExpr>, Vec<FieldExpr>),
}

impl FieldExpr {
    pub fn zero() -> Self {
        FieldExpr::Const(0.0)
    }

    pub fn one() -> Self {
        FieldExpr::Const(1.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldExpr::Const(c) => *c == 0.0,
            FieldExpr::Trig(t) => t.iter().all(|t| t.cos == 0.0 && t.sin == 0.0),
            FieldExpr::Poly(m) => m.iter().all(|m| m.coeff == 0.0),
            FieldExpr::Sum(v) => v.iter().all(FieldExpr::is_zero),
            FieldExpr::Product(v) => v.iter().any(FieldExpr::is_zero),
            _ => false,
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            FieldExpr::Const(c) => Some(*c),
            _ if self.is_zero() => Some(0.0),
            _ => None,
        }
    }

    pub fn sum(terms: Vec<FieldExpr>) -> Self {
        let mut konst = 0.0;
        let mut rest = Vec::new();
        for t in terms {
            match t {
                FieldExpr::Const(c) => konst += c,
                FieldExpr::Sum(inner) => {
                    for s in inner {
                        match s {
                            FieldExpr::Const(c) => konst += c,
                            other => rest.push(other),
                        }
                    }
                }
                other if other.is_zero() => {}
                other => rest.push(other),
            }
        }
        if konst != 0.0 {
            rest.push(FieldExpr::Const(konst));
        }
        match rest.len() {
            0 => FieldExpr::zero(),
            1 => rest.pop().unwrap(),
            _ => FieldExpr::Sum(rest),
        }
    }

    pub fn product(factors: Vec<FieldExpr>) -> Self {
        let mut konst = 1.0;
        let mut rest = Vec::new();
        for f in factors {
            match f {
                FieldExpr::Const(c) => konst *= c,
                FieldExpr::Product(inner) => {
                    for s in inner {
                        match s {
                            FieldExpr::Const(c) => konst *= c,
                            other => rest.push(other),
                        }
                    }
                }
                other => {
                    if other.is_zero() {
                        return FieldExpr::zero();
                    }
                    rest.push(other)
                }
            }
        }
        if konst == 0.0 {
            return FieldExpr::zero();
        }
        if rest.is_empty() {
            return FieldExpr::Const(konst);
        }
        if konst != 1.0 {
            rest.insert(0, FieldExpr::Const(konst));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            FieldExpr::Product(rest)
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        FieldExpr::product(vec![FieldExpr::Const(c), self])
    }

    pub fn plus(self, other: FieldExpr) -> Self {
        FieldExpr::sum(vec![self, other])
    }

    pub fn minus(self, other: FieldExpr) -> Self {
        FieldExpr::sum(vec![self, other.scaled(-1.0)])
    }

    pub fn times(self, other: FieldExpr) -> Self {
        FieldExpr::product(vec![self, other])
    }

    pub fn over(self, other: FieldExpr) -> Self {
        if let Some(c) = other.as_const() {
            return self.scaled(1.0 / c);
        }
        if self.is_zero() {
            return FieldExpr::zero();
        }
        FieldExpr::Quotient(Box::new(self), Box::new(other))
    }

    pub fn powf(self, e: f64) -> Self {
        if e == 1.0 {
            return self;
        }
        if e == 0.0 {
            return FieldExpr::one();
        }
        if let Some(c) = self.as_const() {
            return FieldExpr::Const(c.powf(e));
        }
        FieldExpr::Powf(Box::new(self), e)
    }

    pub fn sqrt(self) -> Self {
        if let Some(c) = self.as_const() {
            return FieldExpr::Const(c.sqrt());
        }
        FieldExpr::Sqrt(Box::new(self))
    }

    pub fn compose(self, inner: Vec<FieldExpr>) -> Self {
        if let Some(c) = self.as_const() {
            return FieldExpr::Const(c);
        }
        FieldExpr::Compose(Box::new(self), inner)
    }

    /// Evaluates with `inputs` as the values (as jets) of the variables.
    pub fn eval(&self, inputs: &[Jet]) -> Jet {
        let proto = &inputs[0];
        match self {
            FieldExpr::Const(c) => proto.lift(*c),
            FieldExpr::Coord(i) => inputs[*i].clone(),
            FieldExpr::Trig(terms) => {
                let mut acc = proto.lift(0.0);
                for t in terms {
                    let mut phase = proto.lift(0.0);
                    for (i, &k) in t.freq.iter().enumerate() {
                        if k != 0 {
                            phase.axpy(k as f64, &inputs[i]);
                        }
                    }
                    let (s, c) = phase.value().sin_cos();
                    let f0 = t.cos * c + t.sin * s;
                    let f1 = -t.cos * s + t.sin * c;
                    acc.axpy(1.0, &phase.compose([f0, f1, -f0, -f1]));
                }
                acc
            }
            FieldExpr::Poly(monos) => {
                let mut acc = proto.lift(0.0);
                for m in monos {
                    let mut term = proto.lift(m.coeff);
                    for (i, &e) in m.exps.iter().enumerate() {
                        if e > 0 {
                            term = term.mul_jet(&inputs[i].powi(e as i32));
                        }
                    }
                    acc.axpy(1.0, &term);
                }
                acc
            }
            FieldExpr::Sum(terms) => {
                let mut acc = proto.lift(0.0);
                for t in terms {
                    acc.axpy(1.0, &t.eval(inputs));
                }
                acc
            }
            FieldExpr::Product(factors) => {
                let mut acc = factors[0].eval(inputs);
                for f in &factors[1..] {
                    acc = acc.mul_jet(&f.eval(inputs));
                }
                acc
            }
            FieldExpr::Quotient(a, b) => &a.eval(inputs) / &b.eval(inputs),
            FieldExpr::Powf(a, e) => a.eval(inputs).powf(*e),
            FieldExpr::Sqrt(a) => a.eval(inputs).sqrt(),
            FieldExpr::Exp(a) => a.eval(inputs).exp(),
            FieldExpr::Sin(a) => a.eval(inputs).sin(),
            FieldExpr::Cos(a) => a.eval(inputs).cos(),
            FieldExpr::Compose(outer, inner) => {
                let vals: Vec<Jet> = inner.iter().map(|g| g.eval(inputs)).collect();
                outer.eval(&vals)
            }
        }
    }

    /// Jet of the expression at a chart point.
    pub fn eval_at(&self, point: &[f64], order: u8) -> Jet {
        self.eval(&Jet::coordinates(point, order))
    }

    /// Plain value, without derivative bookkeeping.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self {
            FieldExpr::Const(c) => *c,
            FieldExpr::Coord(i) => x[*i],
            FieldExpr::Trig(terms) => terms
                .iter()
                .map(|t| {
                    let phase: f64 = t.freq.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
                    let (s, c) = phase.sin_cos();
                    t.cos * c + t.sin * s
                })
                .sum(),
            FieldExpr::Poly(monos) => monos
                .iter()
                .map(|m| {
                    m.coeff
                        * m.exps
                            .iter()
                            .zip(x)
                            .map(|(&e, &xi)| xi.powi(e as i32))
                            .product::<f64>()
                })
                .sum(),
            FieldExpr::Sum(terms) => terms.iter().map(|t| t.value_at(x)).sum(),
            FieldExpr::Product(f) => f.iter().map(|t| t.value_at(x)).product(),
            FieldExpr::Quotient(a, b) => a.value_at(x) / b.value_at(x),
            FieldExpr::Powf(a, e) => a.value_at(x).powf(*e),
            FieldExpr::Sqrt(a) => a.value_at(x).sqrt(),
            FieldExpr::Exp(a) => a.value_at(x).exp(),
            FieldExpr::Sin(a) => a.value_at(x).sin(),
            FieldExpr::Cos(a) => a.value_at(x).cos(),
            FieldExpr::Compose(outer, inner) => {
                let y: Vec<f64> = inner.iter().map(|g| g.value_at(x)).collect();
                outer.value_at(&y)
            }
        }
    }

    /// Symbolic partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> FieldExpr {
        match self {
            FieldExpr::Const(_) => FieldExpr::zero(),
            FieldExpr::Coord(j) => FieldExpr::Const(if *j == i { 1.0 } else { 0.0 }),
            FieldExpr::Trig(terms) => {
                let out: Vec<TrigTerm> = terms
                    .iter()
                    .filter_map(|t| {
                        let k = *t.freq.get(i)? as f64;
                        (k != 0.0).then(|| TrigTerm {
                            freq: t.freq.clone(),
                            cos: t.sin * k,
                            sin: -t.cos * k,
                        })
                    })
                    .collect();
                if out.is_empty() {
                    FieldExpr::zero()
                } else {
                    FieldExpr::Trig(out)
                }
            }
            FieldExpr::Poly(monos) => {
                let out: Vec<Monomial> = monos
                    .iter()
                    .filter_map(|m| {
                        let e = *m.exps.get(i)?;
                        (e > 0).then(|| {
                            let mut exps = m.exps.clone();
                            exps[i] -= 1;
                            Monomial {
                                exps,
                                coeff: m.coeff * e as f64,
                            }
                        })
                    })
                    .collect();
                if out.is_empty() {
                    FieldExpr::zero()
                } else {
                    FieldExpr::Poly(out)
                }
            }
            FieldExpr::Sum(terms) => FieldExpr::sum(terms.iter().map(|t| t.derivative(i)).collect()),
            FieldExpr::Product(factors) => {
                let mut terms = Vec::new();
                for (j, f) in factors.iter().enumerate() {
                    let df = f.derivative(i);
                    if df.is_zero() {
                        continue;
                    }
                    let mut prod: Vec<FieldExpr> = factors
                        .iter()
                        .enumerate()
                        .filter(|(l, _)| *l != j)
                        .map(|(_, g)| g.clone())
                        .collect();
                    prod.push(df);
                    terms.push(FieldExpr::product(prod));
                }
                FieldExpr::sum(terms)
            }
            FieldExpr::Quotient(a, b) => {
                let da = a.derivative(i);
                let db = b.derivative(i);
                let first = da.over((**b).clone());
                let second = (**a)
                    .clone()
                    .times(db)
                    .over((**b).clone().powf(2.0));
                first.minus(second)
            }
            FieldExpr::Powf(a, e) => {
                let da = a.derivative(i);
                (**a).clone().powf(e - 1.0).times(da).scaled(*e)
            }
            FieldExpr::Sqrt(a) => {
                let da = a.derivative(i);
                da.over(FieldExpr::Sqrt(a.clone()).scaled(2.0))
            }
            FieldExpr::Exp(a) => self.clone().times(a.derivative(i)),
            FieldExpr::Sin(a) => FieldExpr::Cos(a.clone()).times(a.derivative(i)),
            FieldExpr::Cos(a) => FieldExpr::Sin(a.clone()).times(a.derivative(i)).scaled(-1.0),
            FieldExpr::Compose(outer, inner) => {
                let mut terms = Vec::new();
                for (a, g) in inner.iter().enumerate() {
                    let dg = g.derivative(i);
                    if dg.is_zero() {
                        continue;
                    }
                    let df = outer.derivative(a);
                    if df.is_zero() {
                        continue;
                    }
                    terms.push(df.compose(inner.clone()).times(dg));
                }
                FieldExpr::sum(terms)
            }
        }
    }

    /// Which of the `n` variables the expression can depend on.
    pub fn depends_on(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        self.mark_dependencies(&mut mask);
        mask
    }

    fn mark_dependencies(&self, mask: &mut [bool]) {
        match self {
            FieldExpr::Const(_) => {}
            FieldExpr::Coord(i) => mask[*i] = true,
            FieldExpr::Trig(terms) => {
                for t in terms {
                    for (i, &k) in t.freq.iter().enumerate() {
                        if k != 0 && (t.cos != 0.0 || t.sin != 0.0) {
                            mask[i] = true;
                        }
                    }
                }
            }
            FieldExpr::Poly(monos) => {
                for m in monos {
                    for (i, &e) in m.exps.iter().enumerate() {
                        if e > 0 && m.coeff != 0.0 {
                            mask[i] = true;
                        }
                    }
                }
            }
            FieldExpr::Sum(v) | FieldExpr::Product(v) => {
                for t in v {
                    t.mark_dependencies(mask);
                }
            }
            FieldExpr::Quotient(a, b) => {
                a.mark_dependencies(mask);
                b.mark_dependencies(mask);
            }
            FieldExpr::Powf(a, _)
            | FieldExpr::Sqrt(a)
            | FieldExpr::Exp(a)
            | FieldExpr::Sin(a)
            | FieldExpr::Cos(a) => a.mark_dependencies(mask),
            FieldExpr::Compose(outer, inner) => {
                let mut outer_mask = vec![false; inner.len()];
                outer.mark_dependencies(&mut outer_mask);
                for (a, used) in outer_mask.iter().enumerate() {
                    if *used {
                        inner[a].mark_dependencies(mask);
                    }
                }
            }
        }
    }

    /// True if every trigonometric frequency is integral and the expression
    /// contains no polynomial in the coordinates, i.e. it is `2π`-periodic.
    pub fn is_periodic(&self) -> bool {
        match self {
            FieldExpr::Const(_) | FieldExpr::Trig(_) => true,
            FieldExpr::Coord(_) => false,
            FieldExpr::Poly(m) => m.iter().all(|m| m.exps.iter().all(|&e| e == 0)),
            FieldExpr::Sum(v) | FieldExpr::Product(v) => v.iter().all(FieldExpr::is_periodic),
            FieldExpr::Quotient(a, b) => a.is_periodic() && b.is_periodic(),
            FieldExpr::Powf(a, _)
            | FieldExpr::Sqrt(a)
            | FieldExpr::Exp(a)
            | FieldExpr::Sin(a)
            | FieldExpr::Cos(a) => a.is_periodic(),
            // inner maps may be perturbations of the identity; checked by the caller
            FieldExpr::Compose(outer, inner) => {
                outer.is_periodic() || inner.iter().all(FieldExpr::is_periodic)
            }
        }
    }

    /// `Σ_t cos_t cos(k_t·x) + sin_t sin(k_t·x)`.
    pub fn trig(terms: Vec<TrigTerm>) -> Self {
        FieldExpr::Trig(terms)
    }

    /// `a + b cos(x_i)`, a common positive test factor.
    pub fn cos_bump(n: usize, axis: usize, a: f64, b: f64) -> Self {
        let mut freq = vec![0; n];
        freq[axis] = 1;
        FieldExpr::Trig(vec![
            TrigTerm {
                freq: vec![0; n],
                cos: a,
                sin: 0.0,
            },
            TrigTerm { freq, cos: b, sin: 0.0 },
        ])
    }
}

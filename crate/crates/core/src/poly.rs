//! Polynomial functions on the base chart, with optional powers of nu.
//!
//! These are the coefficient objects of the theory: inputs to the Weyl
//! continuation, components of symplectomorphisms, defect tables. Base
//! degree is unbounded (the fiberwise product never feeds back into it).

use crate::error::CoreError;
use crate::frame::SymplecticFrame;
use crate::monomial::Monomial;
use crate::rational::{display, Rat};
use crate::series::WeylSeries;
use crate::Result;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Key: (nu power, base exponent vector of length 2n).
pub type BaseMono = (u32, Vec<u32>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePolynomial {
    pub n: u32,
    terms: BTreeMap<BaseMono, Rat>,
}

impl BasePolynomial {
    pub fn zero(n: u32) -> Self {
        BasePolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: u32) -> Self {
        let mut p = Self::zero(n);
        p.add_term(0, vec![0; 2 * n as usize], Rat::one());
        p
    }

    pub fn constant(n: u32, c: Rat) -> Self {
        let mut p = Self::zero(n);
        p.add_term(0, vec![0; 2 * n as usize], c);
        p
    }

    /// z_i (1-based).
    pub fn var(n: u32, i: usize) -> Self {
        let mut e = vec![0; 2 * n as usize];
        e[i - 1] = 1;
        let mut p = Self::zero(n);
        p.add_term(0, e, Rat::one());
        p
    }

    pub fn nu_pow(n: u32, l: u32) -> Self {
        let mut p = Self::zero(n);
        p.add_term(l, vec![0; 2 * n as usize], Rat::one());
        p
    }

    pub fn add_term(&mut self, nu: u32, exp: Vec<u32>, c: Rat) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(exp.len(), 2 * self.n as usize);
        let key = (nu, exp);
        let v = self.terms.remove(&key).unwrap_or_else(Rat::zero) + c;
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BaseMono, &Rat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &BasePolynomial) -> BasePolynomial {
        let mut out = self.clone();
        for ((nu, e), c) in &other.terms {
            out.add_term(*nu, e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &BasePolynomial) -> BasePolynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        if k.is_zero() {
            return out;
        }
        for (key, c) in &self.terms {
            out.terms.insert(key.clone(), c.clone() * k);
        }
        out
    }

    pub fn mul_nu(&self, l: u32) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((nu, e), c) in &self.terms {
            out.terms.insert((nu + l, e.clone()), c.clone());
        }
        out
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &BasePolynomial) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((n1, e1), c1) in &self.terms {
            for ((n2, e2), c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(n1 + n2, e, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> BasePolynomial {
        let mut out = BasePolynomial::one(self.n);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative in z_k (0-based).
    pub fn d(&self, k: usize) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((nu, e), c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                out.add_term(*nu, e2, c.clone() * Rat::from_integer(e[k].into()));
            }
        }
        out
    }

    /// Iterated derivative by a multi-index over all 2n coordinates.
    pub fn d_multi(&self, alpha: &[u32]) -> BasePolynomial {
        let mut out = self.clone();
        for (k, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                out = out.d(k);
            }
        }
        out
    }

    /// Poisson bracket {f, g} = Lambda^{kl} d_k f d_l g.
    pub fn poisson(&self, other: &BasePolynomial, frame: &SymplecticFrame) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for (k, l, lam) in frame.lambda_support() {
            out = out.add(&self.d(k).mul(&other.d(l)).scale(&lam));
        }
        out
    }

    /// Euler operator sum_l z^l d_l (degree counting).
    pub fn euler(&self) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((nu, e), c) in &self.terms {
            let total: u32 = e.iter().sum();
            if total > 0 {
                out.add_term(*nu, e.clone(), c.clone() * Rat::from_integer(total.into()));
            }
        }
        out
    }

    /// Exact evaluation at a rational point (nu set to the given value, or
    /// kept only at nu = 0 terms when `nu_value` is None).
    pub fn eval(&self, point: &[Rat], nu_value: Option<&Rat>) -> Rat {
        let mut acc = Rat::zero();
        for ((nu, e), c) in &self.terms {
            let mut v = c.clone();
            match (nu, nu_value) {
                (0, _) => {}
                (_, Some(nv)) => {
                    for _ in 0..*nu {
                        v *= nv.clone();
                    }
                }
                (_, None) => continue,
            }
            for (k, &ek) in e.iter().enumerate() {
                for _ in 0..ek {
                    v *= point[k].clone();
                }
            }
            acc += v;
        }
        acc
    }

    /// Coefficient polynomial of nu^l (nu stripped).
    pub fn nu_part(&self, l: u32) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((nu, e), c) in &self.terms {
            if *nu == l {
                out.terms.insert((0, e.clone()), c.clone());
            }
        }
        out
    }

    pub fn max_nu_power(&self) -> u32 {
        self.terms.keys().map(|(nu, _)| *nu).max().unwrap_or(0)
    }

    pub fn has_odd_nu(&self) -> bool {
        self.terms.keys().any(|(nu, _)| nu % 2 == 1)
    }

    /// Max base degree.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, e)| e.iter().sum()).max()
    }

    /// Substitute the variables by polynomials: z_k -> args[k]. nu passes
    /// through. Used to compose symplectomorphisms.
    pub fn compose(&self, args: &[BasePolynomial]) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.n);
        for ((nu, e), c) in &self.terms {
            let mut term = BasePolynomial::constant(self.n, c.clone()).mul_nu(*nu);
            for (k, &ek) in e.iter().enumerate() {
                for _ in 0..ek {
                    term = term.mul(&args[k]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Embed as a fiber-free Weyl series.
    pub fn to_series(&self, trunc: u32) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, trunc);
        for ((nu, e), c) in &self.terms {
            let mut m = Monomial::one(self.n);
            m.nu = *nu;
            m.base = e.clone();
            out.add_term(m, c.clone());
        }
        out
    }

    /// Read back from a fiber-free, form-free Weyl series.
    pub fn from_series(s: &WeylSeries) -> Result<BasePolynomial> {
        let mut out = BasePolynomial::zero(s.n);
        for (m, c) in s.iter() {
            if m.fiber_degree() != 0 {
                return Err(CoreError::FiberTerms(m.to_string()));
            }
            if m.forms != 0 {
                return Err(CoreError::FormTerms(m.to_string()));
            }
            out.terms.insert((m.nu, m.base.clone()), c.clone());
        }
        Ok(out)
    }

    pub fn max_abs_coeff(&self) -> Rat {
        use num_traits::Signed;
        let mut m = Rat::zero();
        for c in self.terms.values() {
            let a = c.abs();
            if a > m {
                m = a;
            }
        }
        m
    }
}

/// Solve d_k q = partials[k] for a polynomial q with no z-free part.
///
/// Uses the radial (Euler) primitive q = sum_k z^k p_k / (degree + 1) after
/// checking the integrability conditions d_k p_l = d_l p_k; the construction
/// is then verified against the inputs.
pub fn integrate_gradient(partials: &[BasePolynomial]) -> Result<BasePolynomial> {
    let n = partials[0].n;
    let dim = 2 * n as usize;
    for k in 0..dim {
        for l in k + 1..dim {
            if partials[k].d(l) != partials[l].d(k) {
                return Err(CoreError::Invalid(format!(
                    "gradient is not integrable: d_{} p_{} != d_{} p_{}",
                    l + 1,
                    k + 1,
                    k + 1,
                    l + 1
                )));
            }
        }
    }
    let mut q = BasePolynomial::zero(n);
    for (k, pk) in partials.iter().enumerate() {
        for ((nu, e), c) in pk.iter() {
            let deg: u32 = e.iter().sum();
            let mut e2 = e.clone();
            e2[k] += 1;
            q.add_term(*nu, e2, c.clone() / Rat::from_integer((deg + 1).into()));
        }
    }
    for (k, pk) in partials.iter().enumerate() {
        if &q.d(k) != pk {
            return Err(CoreError::Invalid(format!(
                "gradient integration failed on component {}",
                k + 1
            )));
        }
    }
    Ok(q)
}

impl fmt::Display for BasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((nu, e), c)| {
                let mut factors: Vec<String> = Vec::new();
                if *nu == 1 {
                    factors.push("nu".into());
                } else if *nu > 1 {
                    factors.push(format!("nu^{}", nu));
                }
                for (i, &ek) in e.iter().enumerate() {
                    if ek == 1 {
                        factors.push(format!("z{}", i + 1));
                    } else if ek > 1 {
                        factors.push(format!("z{}^{}", i + 1, ek));
                    }
                }
                if factors.is_empty() {
                    display(c)
                } else {
                    format!("{}*{}", display(c), factors.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

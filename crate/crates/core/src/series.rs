//! Truncated elements of the Weyl algebra over a Darboux chart.
//!
//! A `WeylSeries` is a finite rational combination of monomials
//! `nu^l z^a Z^alpha dz^I`, truncated by the total degree `d = 2l + |alpha|`.
//! The product is the fiberwise Moyal product: base variables and forms
//! commute through (forms with wedge signs), only the fiber generators `Z`
//! pair through Lambda. The product is graded in d, which is what makes the
//! degree truncation a quotient and not just an approximation.

use crate::error::CoreError;
use crate::frame::SymplecticFrame;
use crate::monomial::Monomial;
use crate::rational::{display, Rat};
use crate::Result;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylSeries {
    pub n: u32,
    pub trunc: u32,
    terms: BTreeMap<Monomial, Rat>,
}

impl WeylSeries {
    pub fn zero(n: u32, trunc: u32) -> Self {
        WeylSeries {
            n,
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: u32, trunc: u32) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::one(n), Rat::one());
        s
    }

    pub fn constant(n: u32, trunc: u32, c: Rat) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::one(n), c);
        s
    }

    /// nu^l as a series.
    pub fn nu(n: u32, trunc: u32, l: u32) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::nu_pow(n, l), Rat::one());
        s
    }

    /// Fiber generator Z_i (1-based).
    pub fn fiber_gen(n: u32, trunc: u32, i: usize) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::fiber_gen(n, i), Rat::one());
        s
    }

    /// Base variable z_i (1-based).
    pub fn base_gen(n: u32, trunc: u32, i: usize) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::base_gen(n, i), Rat::one());
        s
    }

    /// Form generator dz_i (1-based).
    pub fn form_gen(n: u32, trunc: u32, i: usize) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(Monomial::form_gen(n, i), Rat::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    /// Adds one term, dropping it when past the truncation, merging and
    /// never storing zeros.
    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() || m.degree() > self.trunc as i64 {
            return;
        }
        debug_assert_eq!(m.base.len(), 2 * self.n as usize);
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    fn compat(&self, other: &WeylSeries) -> Result<()> {
        if self.n != other.n {
            return Err(CoreError::DimensionMismatch(self.n, other.n));
        }
        if self.trunc != other.trunc {
            return Err(CoreError::TruncationMismatch(self.trunc, other.trunc));
        }
        Ok(())
    }

    pub fn add(&self, other: &WeylSeries) -> Result<WeylSeries> {
        self.compat(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &WeylSeries) -> Result<WeylSeries> {
        self.compat(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        if k.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c.clone() * k);
        }
        out
    }

    /// Multiply by nu^l.
    pub fn mul_nu(&self, l: u32) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.nu += l;
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Exact division by nu. Errors when a nu^0 term is present.
    pub fn div_nu(&self) -> Result<WeylSeries> {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.nu == 0 {
                return Err(CoreError::NuDivision(m.to_string()));
            }
            let mut m2 = m.clone();
            m2.nu -= 1;
            out.terms.insert(m2, c.clone());
        }
        Ok(out)
    }

    /// The fiberwise Moyal product truncated to the common cutoff.
    ///
    /// f * g = sum_k (nu/2)^k / k! Lambda^{i1 j1} ... Lambda^{ik jk}
    ///         (d_{Z^{i.}} f) (d_{Z^{j.}} g),
    /// summed in multi-index form over the support of Lambda. Every output
    /// term has degree d(term_f) + d(term_g), so the sum over k is finite and
    /// whole term pairs are pruned against the truncation up front.
    pub fn moyal(&self, other: &WeylSeries, frame: &SymplecticFrame) -> Result<WeylSeries> {
        self.compat(other)?;
        if self.n != frame.n {
            return Err(CoreError::DimensionMismatch(self.n, frame.n));
        }
        let support = frame.lambda_support();
        let mut out = WeylSeries::zero(self.n, self.trunc);
        let half = crate::rational::rat(1, 2);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.degree() + mb.degree() > self.trunc as i64 {
                    continue;
                }
                if ma.forms & mb.forms != 0 {
                    continue;
                }
                contract_pair(&support, ma, ca, mb, cb, &half, &mut out);
            }
        }
        Ok(out)
    }

    /// f * g - g * f.
    pub fn star_commutator(
        &self,
        other: &WeylSeries,
        frame: &SymplecticFrame,
    ) -> Result<WeylSeries> {
        let fg = self.moyal(other, frame)?;
        let gf = other.moyal(self, frame)?;
        fg.sub(&gf)
    }

    /// Graded commutator: term pairs (u, v) contribute u*v - (-1)^{|u||v|} v*u
    /// with |.| the form degree. Agrees with `star_commutator` on form-free
    /// input.
    pub fn graded_commutator(
        &self,
        other: &WeylSeries,
        frame: &SymplecticFrame,
    ) -> Result<WeylSeries> {
        self.compat(other)?;
        let support = frame.lambda_support();
        let half = crate::rational::rat(1, 2);
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.degree() + mb.degree() > self.trunc as i64 {
                    continue;
                }
                if ma.forms & mb.forms != 0 {
                    continue;
                }
                contract_pair(&support, ma, ca, mb, cb, &half, &mut out);
                let sign = if (ma.form_degree() * mb.form_degree()) % 2 == 1 {
                    ca.clone() * cb
                } else {
                    -(ca.clone() * cb)
                };
                // second factor: -(-1)^{|u||v|} v*u
                contract_pair_signed(&support, mb, ma, &sign, &half, &mut out);
            }
        }
        Ok(out)
    }

    /// The canonical involution: nu -> -nu, Z -> Z, real coefficients fixed.
    pub fn involution(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            let c2 = if m.nu % 2 == 1 { -c.clone() } else { c.clone() };
            out.terms.insert(m.clone(), c2);
        }
        out
    }

    /// Max total degree over stored terms; None for the zero series
    /// (the "minus infinity" sentinel).
    pub fn total_degree(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    /// Min total degree over stored terms.
    pub fn min_degree(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    /// Drop all terms with d > new_n and carry the new cutoff. Idempotent,
    /// and also the way to re-tag a series with a larger cutoff.
    pub fn truncate(&self, new_n: u32) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, new_n);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    /// Secondary cutoff in plain nu-power (for DGLA use).
    pub fn truncate_nu(&self, max_nu: u32) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.nu <= max_nu {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// The d-degree-k homogeneous part.
    pub fn degree_part(&self, k: i64) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.degree() == k {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Coefficient series of nu^l (nu stripped).
    pub fn nu_part(&self, l: u32) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.nu == l {
                let mut m2 = m.clone();
                m2.nu = 0;
                out.terms.insert(m2, c.clone());
            }
        }
        out
    }

    pub fn max_nu_power(&self) -> u32 {
        self.terms.keys().map(|m| m.nu).max().unwrap_or(0)
    }

    /// Terms with fiber degree >= 1.
    pub fn fiber_positive(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.fiber_degree() > 0 {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Terms with no fiber variables and no forms (the center).
    pub fn central_part(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.is_central() {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Set Z = 0: keep only fiber-free terms.
    pub fn collapse_fiber(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.fiber_degree() == 0 {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn has_forms(&self) -> bool {
        self.terms.keys().any(|m| m.forms != 0)
    }

    pub fn max_form_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.form_degree()).max().unwrap_or(0)
    }

    /// Partial derivative in the fiber variable Z_l (0-based).
    pub fn d_fiber(&self, l: usize) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            let e = m.fiber[l];
            if e > 0 {
                let mut m2 = m.clone();
                m2.fiber[l] = e - 1;
                out.add_term(m2, c.clone() * Rat::from_integer(e.into()));
            }
        }
        out
    }

    /// Partial derivative in the base variable z_k (0-based).
    pub fn d_base(&self, k: usize) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            let e = m.base[k];
            if e > 0 {
                let mut m2 = m.clone();
                m2.base[k] = e - 1;
                out.add_term(m2, c.clone() * Rat::from_integer(e.into()));
            }
        }
        out
    }

    /// Base exterior derivative: a -> sum_k dz^k wedge d_{z^k} a.
    pub fn exterior_derivative(&self) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for k in 0..2 * self.n as usize {
            let da = self.d_base(k);
            for (m, c) in &da.terms {
                if m.forms & (1 << k) != 0 {
                    continue;
                }
                let sign = crate::monomial::wedge_sign(1 << k, m.forms);
                let mut m2 = m.clone();
                m2.forms |= 1 << k;
                out.add_term(
                    m2,
                    if sign > 0 { c.clone() } else { -c.clone() },
                );
            }
        }
        out
    }

    /// Wedge-multiply by dz_k on the left (0-based).
    pub fn wedge_form_left(&self, k: usize) -> WeylSeries {
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            if m.forms & (1 << k) != 0 {
                continue;
            }
            let sign = crate::monomial::wedge_sign(1 << k, m.forms);
            let mut m2 = m.clone();
            m2.forms |= 1 << k;
            out.add_term(m2, if sign > 0 { c.clone() } else { -c.clone() });
        }
        out
    }

    /// Substitute Z -> A Z (A rational 2n x 2n). Valid as an algebra map for
    /// symplectic A; callers enforce that where it matters.
    pub fn subst_fiber_linear(&self, a: &crate::matq::MatQ) -> WeylSeries {
        let dim = 2 * self.n as usize;
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            // expand prod_i (sum_j A^i_j Z_j)^{alpha_i}
            let mut acc: Vec<(Vec<u32>, Rat)> = vec![(vec![0; dim], c.clone())];
            for i in 0..dim {
                for _ in 0..m.fiber[i] {
                    let mut next: Vec<(Vec<u32>, Rat)> = Vec::new();
                    for (exp, coeff) in &acc {
                        for j in 0..dim {
                            let aij = &a[(i, j)];
                            if aij.is_zero() {
                                continue;
                            }
                            let mut e2 = exp.clone();
                            e2[j] += 1;
                            next.push((e2, coeff.clone() * aij.clone()));
                        }
                    }
                    acc = next;
                }
            }
            for (exp, coeff) in acc {
                let mut m2 = m.clone();
                m2.fiber = exp;
                out.add_term(m2, coeff);
            }
        }
        out
    }

    /// Substitute z -> M z and dz -> M dz (base pullback by the linear map M).
    pub fn subst_base_linear(&self, mmat: &crate::matq::MatQ) -> WeylSeries {
        let dim = 2 * self.n as usize;
        let mut out = WeylSeries::zero(self.n, self.trunc);
        for (m, c) in &self.terms {
            let mut acc: Vec<(Vec<u32>, u32, Rat)> = vec![(vec![0; dim], 0, c.clone())];
            for i in 0..dim {
                for _ in 0..m.base[i] {
                    let mut next = Vec::new();
                    for (exp, forms, coeff) in &acc {
                        for j in 0..dim {
                            let v = &mmat[(i, j)];
                            if v.is_zero() {
                                continue;
                            }
                            let mut e2 = exp.clone();
                            e2[j] += 1;
                            next.push((e2, *forms, coeff.clone() * v.clone()));
                        }
                    }
                    acc = next;
                }
            }
            // forms: dz^i -> sum_j M^i_j dz^j, expanded in mask order
            let mut forms_mask = m.forms;
            while forms_mask != 0 {
                let i = forms_mask.trailing_zeros() as usize;
                forms_mask &= forms_mask - 1;
                let mut next = Vec::new();
                for (exp, forms, coeff) in &acc {
                    for j in 0..dim {
                        let v = &mmat[(i, j)];
                        if v.is_zero() || forms & (1u32 << j) != 0 {
                            continue;
                        }
                        // append dz_j on the right of the accumulated mask
                        let sign = crate::monomial::wedge_sign(*forms, 1u32 << j);
                        let c2 = if sign > 0 {
                            coeff.clone() * v.clone()
                        } else {
                            -(coeff.clone() * v.clone())
                        };
                        next.push((exp.clone(), forms | (1u32 << j), c2));
                    }
                }
                acc = next;
            }
            for (exp, forms, coeff) in acc {
                let mut m2 = m.clone();
                m2.base = exp;
                m2.forms = forms;
                out.add_term(m2, coeff);
            }
        }
        out
    }

    /// Max |coefficient| (for defect reports).
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

/// Accumulates all Moyal contractions of one ordered monomial pair into out,
/// with coefficient ca*cb and the (nu/2)^k weights.
fn contract_pair(
    support: &[(usize, usize, Rat)],
    ma: &Monomial,
    ca: &Rat,
    mb: &Monomial,
    cb: &Rat,
    half: &Rat,
    out: &mut WeylSeries,
) {
    let c = ca.clone() * cb;
    contract_pair_signed(support, ma, mb, &c, half, out);
}

fn contract_pair_signed(
    support: &[(usize, usize, Rat)],
    ma: &Monomial,
    mb: &Monomial,
    coeff: &Rat,
    half: &Rat,
    out: &mut WeylSeries,
) {
    // recursion over Lambda's support entries, assigning a contraction count
    // to each; row capacities come from ma.fiber, columns from mb.fiber.
    fn rec(
        support: &[(usize, usize, Rat)],
        idx: usize,
        ra: &mut Vec<u32>,
        rb: &mut Vec<u32>,
        k: u32,
        factor: Rat,
        ma: &Monomial,
        mb: &Monomial,
        half: &Rat,
        out: &mut WeylSeries,
    ) {
        if idx == support.len() {
            // assemble the term: fibers ra/rb remain, weight (nu/2)^k already
            // folded except the nu power and 1/2^k
            if let Some((sign, mut m)) = ({
                let mut m1 = ma.clone();
                m1.fiber = ra.clone();
                let mut m2 = mb.clone();
                m2.fiber = rb.clone();
                m1.mul(&m2)
            }) {
                m.nu += k;
                let mut c = factor;
                for _ in 0..k {
                    c *= half.clone();
                }
                if sign < 0 {
                    c = -c;
                }
                out.add_term(m, c);
            }
            return;
        }
        let (i, j, lam) = &support[idx];
        let max_k = ra[*i].min(rb[*j]);
        // count = 0 branch
        rec(
            support,
            idx + 1,
            ra,
            rb,
            k,
            factor.clone(),
            ma,
            mb,
            half,
            out,
        );
        let mut f = factor;
        for step in 1..=max_k {
            // falling factorials accumulate as we peel one derivative at a
            // time from each side; 1/step! for the repeated entry
            f = f * lam.clone()
                * Rat::from_integer(ra[*i].into())
                * Rat::from_integer(rb[*j].into())
                / Rat::from_integer(step.into());
            ra[*i] -= 1;
            rb[*j] -= 1;
            rec(support, idx + 1, ra, rb, k + step, f.clone(), ma, mb, half, out);
        }
        // restore capacities
        let (i, j, _) = &support[idx];
        for _ in 1..=max_k {
            ra[*i] += 1;
            rb[*j] += 1;
        }
    }

    let mut ra = ma.fiber.clone();
    let mut rb = mb.fiber.clone();
    rec(
        support,
        0,
        &mut ra,
        &mut rb,
        0,
        coeff.clone(),
        ma,
        mb,
        half,
        out,
    );
}

impl fmt::Display for WeylSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono = m.to_string();
                if mono == "1" {
                    display(c)
                } else {
                    format!("{}*{}", display(c), mono)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_i};

    fn z(n: u32, t: u32, i: usize) -> WeylSeries {
        WeylSeries::fiber_gen(n, t, i)
    }

    /// Independent brute-force Moyal product: enumerates ordered k-tuples of
    /// index pairs instead of multi-index assignments.
    fn moyal_oracle(f: &WeylSeries, g: &WeylSeries, frame: &SymplecticFrame) -> WeylSeries {
        let dim = 2 * f.n as usize;
        let mut out = WeylSeries::zero(f.n, f.trunc);
        let max_k = f
            .iter()
            .map(|(m, _)| m.fiber_degree())
            .max()
            .unwrap_or(0)
            .min(g.iter().map(|(m, _)| m.fiber_degree()).max().unwrap_or(0))
            as usize;
        for k in 0..=max_k {
            // all ordered sequences of k pairs (i, j)
            let mut seqs: Vec<Vec<(usize, usize)>> = vec![vec![]];
            for _ in 0..k {
                let mut next = Vec::new();
                for s in &seqs {
                    for i in 0..dim {
                        for j in 0..dim {
                            if !frame.lambda_at(i, j).is_zero() {
                                let mut s2 = s.clone();
                                s2.push((i, j));
                                next.push(s2);
                            }
                        }
                    }
                }
                seqs = next;
            }
            for s in seqs {
                let mut df = f.clone();
                let mut dg = g.clone();
                let mut lam = Rat::one();
                for (i, j) in &s {
                    lam *= frame.lambda_at(*i, *j).clone();
                    df = df.d_fiber(*i);
                    dg = dg.d_fiber(*j);
                }
                if df.is_zero() || dg.is_zero() {
                    continue;
                }
                // pointwise product of df and dg, weight (nu/2)^k / k!
                let w = crate::rational::inv_factorial(k as u32) * lam
                    / Rat::from_integer(num_bigint::BigInt::from(2u64).pow(k as u32));
                for (m1, c1) in df.iter() {
                    for (m2, c2) in dg.iter() {
                        if let Some((sign, mut m)) = m1.mul(m2) {
                            m.nu += k as u32;
                            let mut c = c1.clone() * c2.clone() * w.clone();
                            if sign < 0 {
                                c = -c;
                            }
                            out.add_term(m, c);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn ccr_holds_for_both_conventions() {
        for n in 1..=3u32 {
            for frame in [SymplecticFrame::standard(n), SymplecticFrame::planar(n)] {
                for i in 1..=2 * n as usize {
                    for j in 1..=2 * n as usize {
                        let zi = z(n, 6, i);
                        let zj = z(n, 6, j);
                        let comm = zi.star_commutator(&zj, &frame).unwrap();
                        let expected = WeylSeries::nu(n, 6, 1)
                            .scale(frame.lambda_at(i - 1, j - 1));
                        assert_eq!(comm, expected, "CCR failed at n={n}, i={i}, j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn nu_is_central() {
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        let nu = WeylSeries::nu(n, 8, 1);
        let zi = z(n, 8, 1);
        assert!(zi.star_commutator(&nu, &frame).unwrap().is_zero());
        // [nu^k f, g] = nu^k [f, g]
        let f = z(n, 8, 1).moyal(&z(n, 8, 2), &frame).unwrap();
        let g = z(n, 8, 2);
        let lhs = f.mul_nu(2).star_commutator(&g, &frame).unwrap();
        let rhs = f.star_commutator(&g, &frame).unwrap().mul_nu(2);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn unit_is_identity() {
        let n = 2;
        let frame = SymplecticFrame::standard(n);
        let one = WeylSeries::one(n, 6);
        let mut f = z(n, 6, 1).moyal(&z(n, 6, 3), &frame).unwrap();
        f = f.add(&WeylSeries::base_gen(n, 6, 2).mul_nu(2)).unwrap();
        assert_eq!(f.moyal(&one, &frame).unwrap(), f);
        assert_eq!(one.moyal(&f, &frame).unwrap(), f);
    }

    #[test]
    fn squares_product_matches_hand_expansion() {
        // (Z1)^2 * (Z2)^2 at n = 1, Lambda^{12} = -1:
        // k=0: Z1^2 Z2^2; k=1: -2 nu Z1 Z2; k=2: nu^2/2.
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        let f = z(n, 8, 1).moyal(&z(n, 8, 1), &frame).unwrap();
        let g = z(n, 8, 2).moyal(&z(n, 8, 2), &frame).unwrap();
        assert_eq!(f, {
            let mut s = WeylSeries::zero(n, 8);
            let mut m = Monomial::one(n);
            m.fiber[0] = 2;
            s.add_term(m, rat_i(1));
            s
        });
        let prod = f.moyal(&g, &frame).unwrap();
        let mut expected = WeylSeries::zero(n, 8);
        let mut m0 = Monomial::one(n);
        m0.fiber = vec![2, 2];
        expected.add_term(m0, rat_i(1));
        let mut m1 = Monomial::one(n);
        m1.fiber = vec![1, 1];
        m1.nu = 1;
        expected.add_term(m1, rat_i(-2));
        let mut m2 = Monomial::one(n);
        m2.nu = 2;
        expected.add_term(m2, rat(1, 2));
        assert_eq!(prod, expected);
        // and the independent oracle agrees
        assert_eq!(prod, moyal_oracle(&f, &g, &frame));
    }

    #[test]
    fn commutator_with_square_matches_oracle() {
        // [Z1, (Z2)^2] = 2 nu Lambda^{12} Z2 = -2 nu Z2 at n=1 (split).
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        let f = z(n, 8, 1);
        let g = z(n, 8, 2).moyal(&z(n, 8, 2), &frame).unwrap();
        let comm = f.star_commutator(&g, &frame).unwrap();
        let mut expected = WeylSeries::zero(n, 8);
        let mut m = Monomial::one(n);
        m.nu = 1;
        m.fiber = vec![0, 1];
        expected.add_term(m, rat_i(-2));
        assert_eq!(comm, expected);
        let oracle = moyal_oracle(&f, &g, &frame)
            .sub(&moyal_oracle(&g, &f, &frame))
            .unwrap();
        assert_eq!(comm, oracle);
    }

    #[test]
    fn random_products_match_oracle_and_associate() {
        let mut rng = crate::sampling::rng(7);
        for n in 1..=2u32 {
            let frame = SymplecticFrame::standard(n);
            for _ in 0..12 {
                let f = crate::sampling::random_series(&mut rng, n, 8, 3, 2, 3);
                let g = crate::sampling::random_series(&mut rng, n, 8, 3, 2, 3);
                let h = crate::sampling::random_series(&mut rng, n, 8, 3, 2, 3);
                let fg = f.moyal(&g, &frame).unwrap();
                assert_eq!(fg, moyal_oracle(&f, &g, &frame));
                let lhs = fg.moyal(&h, &frame).unwrap();
                let rhs = f.moyal(&g.moyal(&h, &frame).unwrap(), &frame).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn product_is_degree_graded() {
        let mut rng = crate::sampling::rng(11);
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        for _ in 0..10 {
            let f = crate::sampling::random_series(&mut rng, n, 10, 3, 2, 3);
            let g = crate::sampling::random_series(&mut rng, n, 10, 3, 2, 3);
            // truncation commutes with the product
            for cut in [4u32, 6, 8] {
                let a = f.moyal(&g, &frame).unwrap().truncate(cut);
                let b = f
                    .truncate(cut)
                    .moyal(&g.truncate(cut), &frame)
                    .unwrap()
                    .truncate(cut);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn involution_basics() {
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        let nu = WeylSeries::nu(n, 6, 1);
        assert_eq!(nu.involution(), nu.neg());
        let mut rng = crate::sampling::rng(3);
        for _ in 0..8 {
            let f = crate::sampling::random_series(&mut rng, n, 8, 3, 2, 3);
            let g = crate::sampling::random_series(&mut rng, n, 8, 3, 2, 3);
            assert_eq!(f.involution().involution(), f);
            let lhs = f.moyal(&g, &frame).unwrap().involution();
            let rhs = g.involution().moyal(&f.involution(), &frame).unwrap();
            assert_eq!(lhs, rhs);
        }
        // bar(Z1 * Z2) = bar(Z2) * bar(Z1) term by term
        let p = z(n, 6, 1).moyal(&z(n, 6, 2), &frame).unwrap().involution();
        let q = z(n, 6, 2).moyal(&z(n, 6, 1), &frame).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn degree_and_truncate_examples() {
        let n = 1;
        let mut f = WeylSeries::zero(n, 12);
        let mut m = Monomial::one(n);
        m.nu = 2;
        m.fiber = vec![1, 0];
        f.add_term(m, rat_i(1));
        assert_eq!(f.total_degree(), Some(5));
        assert_eq!(WeylSeries::one(n, 4).total_degree(), Some(0));
        assert_eq!(WeylSeries::zero(n, 4).total_degree(), None);

        // nu*(Z1)^3 + Z2 -> max degree 5
        let mut g = WeylSeries::zero(n, 12);
        let mut m1 = Monomial::one(n);
        m1.nu = 1;
        m1.fiber = vec![3, 0];
        g.add_term(m1, rat_i(1));
        let mut m2 = Monomial::one(n);
        m2.fiber = vec![0, 1];
        g.add_term(m2.clone(), rat_i(1));
        assert_eq!(g.total_degree(), Some(5));

        // truncate(nu^2 + Z1, 1) = Z1
        let mut h = WeylSeries::nu(n, 12, 2);
        h.add_term(Monomial::fiber_gen(n, 1), rat_i(1));
        let t = h.truncate(1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.total_degree(), Some(1));
        // truncate to own degree is identity
        assert_eq!(g.truncate(g.total_degree().unwrap() as u32).terms, g.terms);
    }

    #[test]
    fn display_is_canonical() {
        let n = 1;
        let mut f = WeylSeries::zero(n, 8);
        let mut m = Monomial::one(n);
        m.nu = 2;
        m.base = vec![3, 0];
        f.add_term(m, rat(3, 2));
        f.add_term(Monomial::fiber_gen(n, 1), rat_i(-1));
        assert_eq!(f.to_string(), "-1*Z1 + 3/2*nu^2*z1^3");
    }
}

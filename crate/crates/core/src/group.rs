//! The automorphism-group calculus on the truncated algebra.
//!
//! Group elements act as exp(ad(H/nu)). Valid exponents have every
//! fiber-carrying term of total degree >= 3, which makes ad(H/nu) raise the
//! degree by at least one and truncates every series in sight. The group law
//! is the Baker-Campbell-Hausdorff sum, evaluated by Dynkin's formula with
//! left-normed bracket words.
//!
//! All nu-divisions here are exact: a commutator of Weyl series is always
//! divisible by nu. Internally every computation runs a few degrees above
//! the requested truncation so those divisions lose nothing.

use crate::continuation::{continuation_inverse, weyl_continuation};
use crate::error::CoreError;
use crate::frame::SymplecticFrame;
use crate::matq::MatQ;
use crate::monomial::Monomial;
use crate::poly::BasePolynomial;
use crate::rational::{rat_i, Rat};
use crate::series::WeylSeries;
use crate::Result;
use num_traits::{One, Zero};

/// Degree slack added internally so that dividing commutators by nu never
/// loses terms below the requested truncation.
const SLACK: u32 = 3;

/// A valid exponent raises degree under ad: every term with fiber content
/// must have total degree >= 3.
pub fn validate_exponent(h: &WeylSeries) -> Result<()> {
    for (m, _) in h.iter() {
        if m.fiber_degree() > 0 && m.degree() < 3 {
            return Err(CoreError::InvalidExponent(m.to_string(), m.degree()));
        }
    }
    Ok(())
}

/// (1/nu) [a, b], exact.
pub fn bracket_over_nu(
    a: &WeylSeries,
    b: &WeylSeries,
    frame: &SymplecticFrame,
) -> Result<WeylSeries> {
    a.star_commutator(b, frame)?.div_nu()
}

/// exp(ad(H/nu)) applied to a: sum_k (1/k!) ad^k, finite by degree raising.
pub fn ad_exp_apply_series(
    h: &WeylSeries,
    a: &WeylSeries,
    frame: &SymplecticFrame,
) -> Result<WeylSeries> {
    validate_exponent(h)?;
    let out_trunc = a.trunc;
    let t = out_trunc + SLACK;
    let hw = h.truncate(t);
    let mut acc = a.truncate(t);
    let mut out = acc.clone();
    let mut k = 1u32;
    loop {
        acc = bracket_over_nu(&hw, &acc, frame)?;
        if acc.is_zero() {
            break;
        }
        out = out.add(&acc.scale(&crate::rational::inv_factorial(k)))?;
        // guarded by degree raising; the +2 is paranoia against a bad frame
        if k > 2 * t + 2 {
            return Err(CoreError::InvalidExponent(
                "ad iteration failed to terminate".into(),
                -1,
            ));
        }
        // fold the factorial in incrementally instead? keep simple: acc is
        // the plain k-fold bracket, so scale per step.
        k += 1;
    }
    Ok(out.truncate(out_trunc))
}

/// Baker-Campbell-Hausdorff composition of exponents at the series level:
/// returns H with exp(ad(H/nu)) = exp(ad(H1/nu)) o exp(ad(H2/nu)).
///
/// Dynkin's formula: for each bracket word w in the letters {H1, H2}, the
/// left-normed bracket [w] (computed with (1/nu)[.,.]) enters with
/// coefficient sum over block decompositions of w into x^p y^q blocks of
/// (-1)^{m-1} / (m |w| prod p_i! q_i!). Words die once their length exceeds
/// the truncation budget because every bracket raises degree.
pub fn bch_compose_series(
    h1: &WeylSeries,
    h2: &WeylSeries,
    frame: &SymplecticFrame,
) -> Result<WeylSeries> {
    validate_exponent(h1)?;
    validate_exponent(h2)?;
    if h1.trunc != h2.trunc {
        return Err(CoreError::TruncationMismatch(h1.trunc, h2.trunc));
    }
    let out_trunc = h1.trunc;
    let t = out_trunc + SLACK;
    let a = h1.truncate(t);
    let b = h2.truncate(t);
    let mut total = a.add(&b)?;
    // words of length >= 2: DFS with the running left-normed bracket
    let max_len = (t as usize).saturating_sub(2).max(1);
    let letters = [&a, &b];
    let mut word: Vec<u8> = Vec::new();
    for first in 0..2u8 {
        word.push(first);
        dfs_words(
            &letters,
            frame,
            &mut word,
            letters[first as usize].clone(),
            max_len,
            &mut total,
        )?;
        word.pop();
    }
    Ok(total.truncate(out_trunc))
}

fn dfs_words(
    letters: &[&WeylSeries; 2],
    frame: &SymplecticFrame,
    word: &mut Vec<u8>,
    bracket: WeylSeries,
    max_len: usize,
    total: &mut WeylSeries,
) -> Result<()> {
    if word.len() >= max_len {
        return Ok(());
    }
    for next in 0..2u8 {
        let nb = bracket_over_nu(&bracket, letters[next as usize], frame)?;
        if nb.is_zero() {
            continue;
        }
        word.push(next);
        let coeff = dynkin_coefficient(word);
        if !coeff.is_zero() {
            *total = total.add(&nb.scale(&coeff))?;
        }
        dfs_words(letters, frame, word, nb, max_len, total)?;
        word.pop();
    }
    Ok(())
}

/// Total Dynkin coefficient of a bracket word (0 = first letter, 1 = second):
/// sum over decompositions into consecutive blocks of shape x^p y^q. Cuts are
/// mandatory at every 1->0 boundary and optional elsewhere.
fn dynkin_coefficient(word: &[u8]) -> Rat {
    let w = word.len();
    let mut optional = Vec::new();
    let mut mandatory = Vec::new();
    for p in 1..w {
        if word[p - 1] == 1 && word[p] == 0 {
            mandatory.push(p);
        } else {
            optional.push(p);
        }
    }
    let mut total = Rat::zero();
    let subsets = 1u64 << optional.len();
    for s in 0..subsets {
        let mut cuts: Vec<usize> = mandatory.clone();
        for (idx, &pos) in optional.iter().enumerate() {
            if s & (1 << idx) != 0 {
                cuts.push(pos);
            }
        }
        cuts.sort_unstable();
        let m = cuts.len() + 1;
        // factorial product over blocks
        let mut denom = Rat::from_integer((m as i64 * w as i64).into());
        let mut start = 0usize;
        let mut ok = true;
        for blk in 0..m {
            let end = if blk < cuts.len() { cuts[blk] } else { w };
            let p = word[start..end].iter().filter(|&&c| c == 0).count() as u32;
            let q = (end - start) as u32 - p;
            // shape validity is guaranteed by the mandatory cuts
            if p == 0 && q == 0 {
                ok = false;
                break;
            }
            denom *= crate::rational::factorial(p) * crate::rational::factorial(q);
            start = end;
        }
        if !ok {
            continue;
        }
        let sign = if m % 2 == 1 { rat_i(1) } else { rat_i(-1) };
        total += sign / denom;
    }
    total
}

// ---------------------------------------------------------------------------
// structured exponents H = g(nu^2) + nu^2 f^#(nu^2)
// ---------------------------------------------------------------------------

/// Coordinate of the identity component: a scalar part g(nu^2) (central on
/// the fiber algebra) plus nu^2 times the continuation of f(nu^2). Both
/// parts carry even nu powers only.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupExponent {
    pub g_part: BasePolynomial,
    pub f_part: BasePolynomial,
    pub frame: SymplecticFrame,
    pub trunc: u32,
}

impl GroupExponent {
    /// Builds the canonical representative of a level-`trunc` group element:
    /// the overlap between the two summands (z-free series, on which # is
    /// the identity) is carried by g, so f never has z-free terms, and both
    /// parts are trimmed to the nu-orders that are observable at this level
    /// (an f-term of nu-power 2j first acts at degree 4 + 4j, a g-term of
    /// nu-power l first shows on tau~ at degree 2l).
    pub fn new(
        g_part: BasePolynomial,
        f_part: BasePolynomial,
        frame: SymplecticFrame,
        trunc: u32,
    ) -> Result<Self> {
        if g_part.has_odd_nu() {
            return Err(CoreError::OddNuPower(g_part.to_string()));
        }
        if f_part.has_odd_nu() {
            return Err(CoreError::OddNuPower(f_part.to_string()));
        }
        let n = frame.n;
        let mut g = BasePolynomial::zero(n);
        for ((nu, e), c) in g_part.iter() {
            if 2 * nu <= trunc {
                g.add_term(*nu, e.clone(), c.clone());
            }
        }
        let mut f = BasePolynomial::zero(n);
        for ((nu, e), c) in f_part.iter() {
            if e.iter().all(|&x| x == 0) {
                if 2 * (nu + 2) <= trunc {
                    g.add_term(nu + 2, e.clone(), c.clone());
                }
            } else if 2 * nu + 4 <= trunc {
                f.add_term(*nu, e.clone(), c.clone());
            }
        }
        Ok(GroupExponent {
            g_part: g,
            f_part: f,
            frame,
            trunc,
        })
    }

    pub fn zero(frame: SymplecticFrame, trunc: u32) -> Self {
        let n = frame.n;
        GroupExponent {
            g_part: BasePolynomial::zero(n),
            f_part: BasePolynomial::zero(n),
            frame,
            trunc,
        }
    }

    /// H = g + nu^2 #f as a series at the given truncation.
    pub fn to_series_at(&self, trunc: u32) -> WeylSeries {
        let g = self.g_part.to_series(trunc);
        let f = weyl_continuation(&self.f_part, trunc).mul_nu(2);
        g.add(&f).expect("parts share frame data")
    }

    pub fn to_series(&self) -> WeylSeries {
        self.to_series_at(self.trunc)
    }

    /// Split a series back into (g, f): f is integrated from the
    /// fiber-linear part and shape-checked; the scalar remainder becomes g.
    /// The z-free nu^2-series ambiguity is resolved by putting constants
    /// into g. The series should be carried one degree above `trunc` so the
    /// top observable f-order is present.
    pub fn from_series(frame: &SymplecticFrame, w: &WeylSeries, trunc: u32) -> Result<Self> {
        let n = w.n;
        // partial derivatives of f from the |alpha| = 1 terms of nu^2 #f
        let mut partials = Vec::new();
        for k in 0..2 * n as usize {
            let mut pk = BasePolynomial::zero(n);
            for (m, c) in w.iter() {
                if m.fiber_degree() == 1 && m.fiber[k] == 1 {
                    if m.nu < 2 {
                        return Err(CoreError::ShapeCheck(format!(
                            "fiber term {} has nu-power < 2",
                            m
                        )));
                    }
                    pk.add_term(m.nu - 2, m.base.clone(), c.clone());
                }
            }
            partials.push(pk);
        }
        let f = crate::poly::integrate_gradient(&partials)?;
        let fs = weyl_continuation(&f, w.trunc).mul_nu(2);
        let g_series = w.sub(&fs)?;
        let g = BasePolynomial::from_series(&g_series).map_err(|_| {
            CoreError::ShapeCheck(format!(
                "residual after removing nu^2 #f is not scalar: {}",
                g_series.fiber_positive()
            ))
        })?;
        GroupExponent::new(g, f, frame.clone(), trunc)
    }

    /// Action on a series.
    pub fn apply(&self, a: &WeylSeries) -> Result<WeylSeries> {
        ad_exp_apply_series(&self.to_series_at(a.trunc + SLACK), a, &self.frame)
    }

    /// Group law: exp(ad(H/nu)) = exp(ad(H1/nu)) o exp(ad(H2/nu)).
    ///
    /// The scalar parts are central on the fiber algebra, so they add; the
    /// bracket tail of the BCH sum is a nu^2-weighted Weyl function and folds
    /// into f.
    pub fn compose(&self, other: &GroupExponent) -> Result<GroupExponent> {
        if self.trunc != other.trunc {
            return Err(CoreError::TruncationMismatch(self.trunc, other.trunc));
        }
        // carry one degree extra: terms of degree trunc+1 still act on the
        // generators at degree trunc
        let t = self.trunc + 1;
        let w = bch_compose_series(
            &self.to_series_at(t),
            &other.to_series_at(t),
            &self.frame,
        )?;
        GroupExponent::from_series(&self.frame, &w, self.trunc)
    }

    /// Inverse element: exp(ad(H/nu))^{-1} = exp(ad(-H/nu)).
    pub fn inverse(&self) -> GroupExponent {
        GroupExponent {
            g_part: self.g_part.neg(),
            f_part: self.f_part.neg(),
            frame: self.frame.clone(),
            trunc: self.trunc,
        }
    }

    /// Action on the contact generator surrogate tau~ = tau + z^i omega_ij Z^j:
    /// returns the Weyl-algebra part of exp(ad(H/nu))(tau~) - tau~. This is
    /// where the scalar part g becomes observable.
    pub fn tau_surrogate_action(&self) -> Result<WeylSeries> {
        let t = self.trunc + SLACK;
        let h = self.to_series_at(t);
        validate_exponent(&h)?;
        // (1/nu)[tau~, a] = D(a) + z^i d_{Z^i} a, with D the degree derivation
        let minus_t_h = tau_bracket(&h, &self.frame)?.neg();
        // exp(ad(H/nu))(tau~) = tau~ + sum_{k>=1} (1/k!) ad^{k-1}(-T(H))
        let mut acc = minus_t_h;
        let mut out = acc.scale(&crate::rational::inv_factorial(1));
        let mut k = 2u32;
        loop {
            acc = bracket_over_nu(&h, &acc, &self.frame)?;
            if acc.is_zero() {
                break;
            }
            out = out.add(&acc.scale(&crate::rational::inv_factorial(k)))?;
            k += 1;
            if k > 2 * t + 4 {
                return Err(CoreError::InvalidExponent(
                    "tau action failed to terminate".into(),
                    -1,
                ));
            }
        }
        Ok(out.truncate(self.trunc))
    }
}

/// (1/nu)[tau~, a] where tau~ = tau + z^i omega_{ij} Z^j: the degree
/// derivation (2l + |alpha| on each term) plus z^i d_{Z^i} (through
/// omega Lambda = 1).
pub fn tau_bracket(a: &WeylSeries, frame: &SymplecticFrame) -> Result<WeylSeries> {
    let mut out = WeylSeries::zero(a.n, a.trunc);
    for (m, c) in a.iter() {
        let d = m.degree();
        if d != 0 {
            out.add_term(m.clone(), c.clone() * rat_i(d));
        }
    }
    // z^i omega_{ij} Z^j commutator: omega_{ij} Lambda^{jl} z^i d_{Z^l}
    let dim = 2 * a.n as usize;
    for i in 0..dim {
        for l in 0..dim {
            let mut coeff = Rat::zero();
            for j in 0..dim {
                coeff += frame.omega[(i, j)].clone() * frame.lambda[(j, l)].clone();
            }
            if coeff.is_zero() {
                continue;
            }
            let da = a.d_fiber(l);
            for (m, c) in da.iter() {
                let mut m2 = m.clone();
                m2.base[i] += 1;
                out.add_term(m2, c.clone() * coeff.clone());
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// factorization of nu-automorphisms
// ---------------------------------------------------------------------------

/// Factorization output: images = A-hat o exp(ad((c + F)/nu)) with A
/// symplectic, c a scalar nu^2-series (always reported zero here: it is
/// invisible on the fiber algebra), and F a pure-fiber series whose terms
/// all have degree >= 3 and fiber content.
#[derive(Debug, Clone)]
pub struct AutomorphismData {
    pub linear: MatQ,
    pub c_part: BasePolynomial,
    pub f_part: WeylSeries,
}

/// Recover (A, c, F) from the images of the generators.
///
/// Degree 1 fixes A (the CCR force it symplectic); afterwards the degree-m
/// anomaly g^s of A-hat^{-1} o Phi is integrated to the unique F_{m+1} with
/// (1/nu)[Z^s, F_{m+1}] = g^s and peeled off; the BCH law combines the
/// peeled factors into a single exponent.
pub fn factorize_automorphism(
    images: &[WeylSeries],
    frame: &SymplecticFrame,
) -> Result<AutomorphismData> {
    let n = frame.n;
    let dim = 2 * n as usize;
    if images.len() != dim {
        return Err(CoreError::Invalid(format!(
            "expected {dim} generator images, got {}",
            images.len()
        )));
    }
    for im in images {
        if im.n != n {
            return Err(CoreError::DimensionMismatch(im.n, n));
        }
        for (m, _) in im.iter() {
            if m.base_degree() > 0 || m.forms != 0 {
                return Err(CoreError::Invalid(
                    "automorphism images must be pure fiber series".into(),
                ));
            }
        }
    }
    let trunc = images[0].trunc;

    // upfront CCR audit with degree-resolved reporting
    for i in 0..dim {
        for j in 0..dim {
            let comm = images[i].star_commutator(&images[j], frame)?;
            let expect = WeylSeries::nu(n, trunc, 1).scale(frame.lambda_at(i, j));
            let defect = comm.sub(&expect)?;
            if !defect.is_zero() {
                let deg = defect.min_degree().unwrap();
                return Err(CoreError::CcrViolation {
                    degree: deg,
                    detail: format!("[Phi(Z{}), Phi(Z{})] defect: {}", i + 1, j + 1, defect),
                });
            }
        }
    }

    // degree-1 part -> A
    let mut a = MatQ::zeros(dim, dim);
    for (s, im) in images.iter().enumerate() {
        for (m, c) in im.iter() {
            if m.degree() == 1 {
                let j = m.fiber.iter().position(|&e| e == 1).unwrap();
                a[(s, j)] = c.clone();
            }
        }
    }
    if !frame.is_symplectic_matrix(&a) {
        return Err(CoreError::NonSymplecticLinearPart);
    }
    let a_inv = a.inverse()?;

    let t = trunc + SLACK;
    let mut current: Vec<WeylSeries> = images
        .iter()
        .map(|im| im.truncate(t).subst_fiber_linear(&a_inv))
        .collect();

    let mut factors: Vec<WeylSeries> = Vec::new();
    for m_deg in 2..=t as i64 {
        let anomalies: Vec<WeylSeries> = current
            .iter()
            .enumerate()
            .map(|(s, cur)| {
                cur.sub(&WeylSeries::fiber_gen(n, t, s + 1))
                    .map(|d| d.degree_part(m_deg))
            })
            .collect::<Result<_>>()?;
        if anomalies.iter().all(|x| x.is_zero()) {
            continue;
        }
        // want (1/nu)[F, Z^s] = g^s, i.e. -Lambda^{s l} d_l F = g^s,
        // so d_l F = h_l with h_l = -omega_{l s} g^s
        let mut h = Vec::with_capacity(dim);
        for l in 0..dim {
            let mut hl = WeylSeries::zero(n, t);
            for (s, g) in anomalies.iter().enumerate() {
                let w = frame.omega[(l, s)].clone();
                if !w.is_zero() {
                    hl = hl.sub(&g.scale(&w))?;
                }
            }
            h.push(hl);
        }
        let f_next = integrate_fiber_gradient(&h, m_deg)?;
        validate_exponent(&f_next)?;
        // peel: current <- exp(ad(-F/nu)) o current
        let neg = f_next.neg();
        for cur in current.iter_mut() {
            *cur = ad_exp_apply_series(&neg, cur, frame)?;
        }
        factors.push(f_next);
    }
    for (s, cur) in current.iter().enumerate() {
        let res = cur.sub(&WeylSeries::fiber_gen(n, t, s + 1))?.truncate(trunc);
        if !res.is_zero() {
            return Err(CoreError::CcrViolation {
                degree: res.min_degree().unwrap(),
                detail: format!("unresolved residual on Z{}: {}", s + 1, res),
            });
        }
    }

    // combine: exp(ad F3) o exp(ad F4) o ... = exp(ad F), left fold
    let mut f = WeylSeries::zero(n, t);
    for factor in &factors {
        f = bch_compose_series(&f, factor, frame)?;
    }
    // central bracket residue acts trivially and is dropped; only |alpha|>0
    // terms are observable on the fiber algebra
    let f = f.fiber_positive().truncate(trunc);
    Ok(AutomorphismData {
        linear: a,
        c_part: BasePolynomial::zero(n),
        f_part: f,
    })
}

/// Images of the generators under A-hat o exp(ad(F/nu)).
pub fn realize_automorphism(
    data: &AutomorphismData,
    frame: &SymplecticFrame,
    trunc: u32,
) -> Result<Vec<WeylSeries>> {
    let n = frame.n;
    let dim = 2 * n as usize;
    let mut out = Vec::with_capacity(dim);
    for s in 1..=dim {
        let z = WeylSeries::fiber_gen(n, trunc, s);
        let moved = ad_exp_apply_series(&data.f_part.truncate(trunc + SLACK), &z, frame)?;
        out.push(moved.subst_fiber_linear(&data.linear));
    }
    Ok(out)
}

/// Solve d_{Z^l} F = h_l for a homogeneous-degree target: Euler integration
/// F = sum_l Z^l h_l / (fiber degree + 1), with the integrability check
/// d_k h_l = d_l h_k. Degree m_deg is only used in error reports.
fn integrate_fiber_gradient(h: &[WeylSeries], m_deg: i64) -> Result<WeylSeries> {
    let n = h[0].n;
    let t = h[0].trunc;
    let dim = 2 * n as usize;
    for k in 0..dim {
        for l in k + 1..dim {
            if h[k].d_fiber(l) != h[l].d_fiber(k) {
                return Err(CoreError::CcrViolation {
                    degree: m_deg,
                    detail: format!(
                        "anomaly at degree {m_deg} is not integrable: d_{}h_{} != d_{}h_{}",
                        l + 1,
                        k + 1,
                        k + 1,
                        l + 1
                    ),
                });
            }
        }
    }
    let mut f = WeylSeries::zero(n, t);
    for (l, hl) in h.iter().enumerate() {
        for (m, c) in hl.iter() {
            let p = m.fiber_degree() + 1;
            let mut m2 = m.clone();
            m2.fiber[l] += 1;
            f.add_term(m2, c.clone() / rat_i(p as i64));
        }
    }
    // defensive: the construction must reproduce the partials
    for (l, hl) in h.iter().enumerate() {
        if &f.d_fiber(l) != hl {
            return Err(CoreError::CcrViolation {
                degree: m_deg,
                detail: format!("integration check failed on component {}", l + 1),
            });
        }
    }
    Ok(f)
}

/// Convenience: the pure-fiber monomial series c nu^l Z^alpha.
pub fn fiber_monomial(n: u32, trunc: u32, nu: u32, fiber: Vec<u32>, c: Rat) -> WeylSeries {
    let mut m = Monomial::one(n);
    m.nu = nu;
    m.fiber = fiber;
    let mut s = WeylSeries::zero(n, trunc);
    s.add_term(m, c);
    s
}

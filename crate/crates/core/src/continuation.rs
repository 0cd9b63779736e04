//! Weyl continuation on a flat chart and the star product it recaptures.
//!
//! On the trivial chart the continuation is the Taylor shift
//! `f(z) -> f(z + Z)`; its image (the Weyl functions) is closed under the
//! fiberwise product, and collapsing Z -> 0 turns the fiber product back
//! into a star product on base polynomials.

use crate::error::CoreError;
use crate::frame::SymplecticFrame;
use crate::monomial::Monomial;
use crate::poly::BasePolynomial;
use crate::rational::{binomial, Rat};
use crate::series::WeylSeries;
use crate::Result;
use num_traits::One;

/// Taylor shift f(z) -> f(z + Z). Linear in f, unital, exact.
pub fn weyl_continuation(f: &BasePolynomial, trunc: u32) -> WeylSeries {
    let n = f.n;
    let dim = 2 * n as usize;
    let mut out = WeylSeries::zero(n, trunc);
    for ((nu, exp), c) in f.iter() {
        // expand prod_i (z_i + Z_i)^{e_i}
        let mut acc: Vec<(Vec<u32>, Vec<u32>, Rat)> =
            vec![(vec![0; dim], vec![0; dim], c.clone())];
        for i in 0..dim {
            let e = exp[i];
            if e == 0 {
                continue;
            }
            let mut next = Vec::new();
            for (b, z, coeff) in &acc {
                for k in 0..=e {
                    let mut b2 = b.clone();
                    let mut z2 = z.clone();
                    b2[i] += e - k;
                    z2[i] += k;
                    next.push((b2, z2, coeff.clone() * binomial(e, k)));
                }
            }
            acc = next;
        }
        for (b, z, coeff) in acc {
            let mut m = Monomial::one(n);
            m.nu = *nu;
            m.base = b;
            m.fiber = z;
            out.add_term(m, coeff);
        }
    }
    out
}

/// Inverse of the continuation: collapse Z -> 0 and read back a base
/// polynomial. The shape check verifies the input really was a parallel
/// section (the continuation of its own collapse); failure signals a bug in
/// the caller's product chain.
pub fn continuation_inverse(s: &WeylSeries) -> Result<BasePolynomial> {
    let collapsed = s.collapse_fiber();
    let f = BasePolynomial::from_series(&collapsed)?;
    let back = weyl_continuation(&f, s.trunc);
    if &back != s {
        return Err(CoreError::ShapeCheck(format!(
            "collapse/continue mismatch: {}",
            back.sub(s).map(|d| d.to_string()).unwrap_or_default()
        )));
    }
    Ok(f)
}

/// The star product recaptured from the fiberwise product:
/// f * g = collapse( #f moyal #g ).
///
/// Computed at an internal truncation budget wide enough that nothing is
/// dropped, so the result is exact; base polynomials are never truncated.
pub fn recaptured_star(
    f: &BasePolynomial,
    g: &BasePolynomial,
    frame: &SymplecticFrame,
) -> Result<BasePolynomial> {
    let t = exact_trunc_for(f, g);
    let sf = weyl_continuation(f, t);
    let sg = weyl_continuation(g, t);
    let prod = sf.moyal(&sg, frame)?;
    continuation_inverse(&prod)
}

/// Star commutator on base polynomials.
pub fn recaptured_commutator(
    f: &BasePolynomial,
    g: &BasePolynomial,
    frame: &SymplecticFrame,
) -> Result<BasePolynomial> {
    Ok(recaptured_star(f, g, frame)?.sub(&recaptured_star(g, f, frame)?))
}

/// Truncation budget that keeps the recaptured product of f and g exact:
/// the Moyal sum stops at the smaller fiber degree, and every nu power is
/// bounded by it as well.
pub fn exact_trunc_for(f: &BasePolynomial, g: &BasePolynomial) -> u32 {
    let df = f.degree().unwrap_or(0);
    let dg = g.degree().unwrap_or(0);
    let nus = f.max_nu_power() + g.max_nu_power();
    2 * (df + dg + nus) + 2
}

//! Deterministic random batteries.
//!
//! Everything randomized in the test and audit batteries flows through a
//! seeded ChaCha stream so runs are reproducible byte for byte.

use crate::matq::MatQ;
use crate::monomial::Monomial;
use crate::poly::BasePolynomial;
use crate::rational::{rat, Rat};
use crate::series::WeylSeries;
use crate::SymplecticFrame;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Seeded stream.
pub fn rng(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small nonzero rational with numerator in [-max, max] and denominator in
/// [1, 3].
pub fn small_rat(rng: &mut Stream, max: i64) -> Rat {
    let mut p = 0i64;
    while p == 0 {
        p = rng.gen_range(-max..=max);
    }
    let q = rng.gen_range(1..=3i64);
    rat(p, q)
}

/// Random Weyl series with the given number of terms, fiber degree cap and
/// base degree cap; nu powers bounded by the truncation budget.
pub fn random_series(
    rng: &mut Stream,
    n: u32,
    trunc: u32,
    terms: usize,
    base_deg: u32,
    fiber_deg: u32,
) -> WeylSeries {
    let dim = 2 * n as usize;
    let mut s = WeylSeries::zero(n, trunc);
    for _ in 0..terms {
        let mut m = Monomial::one(n);
        let fd = rng.gen_range(0..=fiber_deg);
        for _ in 0..fd {
            m.fiber[rng.gen_range(0..dim)] += 1;
        }
        let bd = rng.gen_range(0..=base_deg);
        for _ in 0..bd {
            m.base[rng.gen_range(0..dim)] += 1;
        }
        let nu_budget = (trunc as i64 - m.degree()) / 2;
        if nu_budget > 0 && rng.gen_bool(0.4) {
            m.nu = rng.gen_range(0..=nu_budget.min(2)) as u32;
        }
        s.add_term(m, small_rat(rng, 6));
    }
    s
}

/// Random base polynomial of total degree <= deg with nu powers <= nu_cap
/// (nu steps of 2 when even_nu).
pub fn random_base_poly(
    rng: &mut Stream,
    n: u32,
    terms: usize,
    deg: u32,
    nu_cap: u32,
    even_nu: bool,
) -> BasePolynomial {
    let dim = 2 * n as usize;
    let mut p = BasePolynomial::zero(n);
    for _ in 0..terms {
        let mut exp = vec![0u32; dim];
        let d = rng.gen_range(0..=deg);
        for _ in 0..d {
            exp[rng.gen_range(0..dim)] += 1;
        }
        let nu = if nu_cap == 0 {
            0
        } else if even_nu {
            2 * rng.gen_range(0..=nu_cap / 2)
        } else {
            rng.gen_range(0..=nu_cap)
        };
        p.add_term(nu, exp, small_rat(rng, 6));
    }
    p
}

/// Random symmetric rational matrix with small entries.
pub fn random_symmetric(rng: &mut Stream, dim: usize, max: i64) -> MatQ {
    let mut m = MatQ::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rat(rng.gen_range(-max..=max), rng.gen_range(1..=2i64));
            m[(i, j)] = v.clone();
            m[(j, i)] = v;
        }
    }
    m
}

/// Random element of the symplectic Lie algebra for the given frame:
/// X = Lambda^{-1} S with S symmetric, so that t(Lambda X) = Lambda X.
pub fn random_sp(rng: &mut Stream, frame: &SymplecticFrame, max: i64) -> MatQ {
    let s = random_symmetric(rng, frame.dim(), max);
    &frame.omega * &s
}

/// Random rational symplectic matrix via the Cayley transform of a small
/// sp element (retried until 1 + X is invertible).
pub fn random_symplectic(rng: &mut Stream, frame: &SymplecticFrame) -> MatQ {
    loop {
        let x = random_sp(rng, frame, 2).scale(&rat(1, 3));
        if let Ok(c) = crate::riccati::cayley(&x) {
            debug_assert!(frame.is_symplectic_matrix(&c));
            return c;
        }
    }
}

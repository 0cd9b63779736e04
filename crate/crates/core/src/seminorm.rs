//! Seminorms on nu-series of base polynomials and the quasi-multiplicativity
//! constant of the Moyal product.
//!
//! The seminorm of sum_l nu^l f_l over a box K is
//!     sum_{|alpha| + 2l <= i} sup_K |d^alpha f_l|,
//! with sup replaced by the max over a deterministic rational grid. Every
//! audit compares both sides of an inequality on the same grid, which keeps
//! the comparison exact in Q and internally consistent.

use crate::error::CoreError;
use crate::poly::BasePolynomial;
use crate::rational::{inv_factorial, rat, rat_i, Rat};
use crate::Result;
use num_traits::{Signed, Zero};

/// Axis-aligned box in the base variables.
#[derive(Debug, Clone)]
pub struct GridBox {
    /// Per-axis bounds (lo, hi), length 2n.
    pub bounds: Vec<(Rat, Rat)>,
    /// Points per axis (>= 1).
    pub points: u32,
}

impl GridBox {
    pub fn symmetric_unit(n: u32, points: u32) -> Self {
        GridBox {
            bounds: vec![(rat_i(-1), rat_i(1)); 2 * n as usize],
            points,
        }
    }

    fn axis_points(&self, axis: usize) -> Vec<Rat> {
        let (lo, hi) = &self.bounds[axis];
        if self.points <= 1 {
            return vec![lo.clone()];
        }
        let step = (hi.clone() - lo.clone()) / rat_i((self.points - 1) as i64);
        (0..self.points)
            .map(|j| lo.clone() + step.clone() * rat_i(j as i64))
            .collect()
    }

    /// All grid points (cartesian product, deterministic order).
    pub fn points_iter(&self) -> Vec<Vec<Rat>> {
        let mut pts: Vec<Vec<Rat>> = vec![vec![]];
        for axis in 0..self.bounds.len() {
            let axis_pts = self.axis_points(axis);
            let mut next = Vec::with_capacity(pts.len() * axis_pts.len());
            for p in &pts {
                for v in &axis_pts {
                    let mut p2 = p.clone();
                    p2.push(v.clone());
                    next.push(p2);
                }
            }
            pts = next;
        }
        pts
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, (lo, hi)) in self.bounds.iter().enumerate() {
            if lo > hi {
                return Err(CoreError::EmptyBox(axis));
            }
        }
        Ok(())
    }
}

/// Grid sup of |p| (nu ignored; p should be a single nu-order coefficient).
fn grid_sup(p: &BasePolynomial, grid: &[Vec<Rat>]) -> Rat {
    let mut m = Rat::zero();
    for pt in grid {
        let v = p.eval(pt, None).abs();
        if v > m {
            m = v;
        }
    }
    m
}

/// ||f||_{i,K} with the grid standing in for sup_K.
pub fn seminorm(f: &BasePolynomial, i: u32, k: &GridBox) -> Result<Rat> {
    k.validate()?;
    let grid = k.points_iter();
    let dim = 2 * f.n as usize;
    let mut total = Rat::zero();
    for l in 0..=(i / 2) {
        let fl = f.nu_part(l);
        if fl.is_zero() {
            continue;
        }
        let budget = i - 2 * l;
        for alpha in multi_indices(dim, budget) {
            let d = fl.d_multi(&alpha);
            if d.is_zero() {
                continue;
            }
            total += grid_sup(&d, &grid);
        }
    }
    Ok(total)
}

/// All multi-indices over `dim` slots with |alpha| <= cap.
pub fn multi_indices(dim: usize, cap: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for a in &out {
            let used: u32 = a.iter().sum();
            for v in 0..=(cap - used) {
                let mut a2 = a.clone();
                a2.push(v);
                next.push(a2);
            }
        }
        out = next;
    }
    out
}

/// The explicit quasi-multiplicativity constant: the sum over the admissible
/// index set
///   2k + 2l + 2|a| + 2|b| + |g| + |d| <= i
/// (a, b the Moyal contraction multi-indices over n slots each; g, d the
/// seminorm derivative multi-indices over n slots each; k, l the nu-orders)
/// of (1/2)^{|a|+|b|} / (a! b!) * sum_{z <= g, e <= d} C(g,z) C(d,e).
pub fn quasi_mult_constant(i: u32, n: u32) -> Rat {
    let half_dim = n as usize;
    let mut total = Rat::zero();
    // enumerate k, l first (they only consume budget)
    for k in 0..=(i / 2) {
        for l in 0..=(i / 2 - k).min(i / 2) {
            let after_kl = i as i64 - 2 * k as i64 - 2 * l as i64;
            if after_kl < 0 {
                continue;
            }
            for a in multi_indices(half_dim, (after_kl / 2) as u32) {
                let na: u32 = a.iter().sum();
                for b in multi_indices(half_dim, (after_kl / 2) as u32 - na.min((after_kl / 2) as u32)) {
                    let nb: u32 = b.iter().sum();
                    let after_ab = after_kl - 2 * na as i64 - 2 * nb as i64;
                    if after_ab < 0 {
                        continue;
                    }
                    let mut w = rat(1, 2);
                    w = pow_rat(&w, na + nb);
                    for &x in a.iter().chain(b.iter()) {
                        w = w * inv_factorial(x);
                    }
                    for g in multi_indices(half_dim, after_ab as u32) {
                        let ng: u32 = g.iter().sum();
                        for d in multi_indices(half_dim, after_ab as u32 - ng) {
                            // sum of binomials over sub-multi-indices is
                            // 2^{|g|} * 2^{|d|}
                            let nd: u32 = d.iter().sum();
                            let binom_sum = pow_rat(&rat_i(2), ng + nd);
                            total += w.clone() * binom_sum;
                        }
                    }
                }
            }
        }
    }
    total
}

fn pow_rat(r: &Rat, k: u32) -> Rat {
    let mut out = rat_i(1);
    for _ in 0..k {
        out *= r.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::recaptured_star;
    use crate::frame::SymplecticFrame;
    use crate::sampling;

    #[test]
    fn seminorm_of_zero_and_coordinate() {
        let n = 1;
        let k = GridBox::symmetric_unit(n, 33);
        assert!(seminorm(&BasePolynomial::zero(n), 3, &k).unwrap().is_zero());
        // ||z1||_{1,[-1,1]^2} = sup|z1| + sup|d1 z1| = 1 + 1 = 2
        let z1 = BasePolynomial::var(n, 1);
        assert_eq!(seminorm(&z1, 1, &k).unwrap(), rat_i(2));
    }

    #[test]
    fn empty_box_is_rejected() {
        let mut k = GridBox::symmetric_unit(1, 9);
        k.bounds[1] = (rat_i(1), rat_i(-1));
        assert!(seminorm(&BasePolynomial::one(1), 0, &k).is_err());
    }

    #[test]
    fn constant_examples_and_monotonicity() {
        assert_eq!(quasi_mult_constant(0, 1), rat_i(1));
        let mut prev = Rat::zero();
        for i in 0..=4 {
            let c = quasi_mult_constant(i, 1);
            assert!(c >= prev, "monotone at i = {i}");
            prev = c;
        }
    }

    /// Independent enumeration: nested scalar loops at n = 1 with the inner
    /// binomial sums spelled out.
    fn constant_oracle_n1(i: u32) -> Rat {
        let mut total = Rat::zero();
        let ii = i as i64;
        for k in 0..=ii / 2 {
            for l in 0..=ii / 2 {
                for a in 0..=ii / 2 {
                    for b in 0..=ii / 2 {
                        for g in 0..=ii {
                            for d in 0..=ii {
                                if 2 * k + 2 * l + 2 * a + 2 * b + g + d > ii {
                                    continue;
                                }
                                let mut w = pow_rat(&rat(1, 2), (a + b) as u32)
                                    * inv_factorial(a as u32)
                                    * inv_factorial(b as u32);
                                let mut bs = Rat::zero();
                                for z in 0..=g {
                                    for e in 0..=d {
                                        bs += crate::rational::binomial(g as u32, z as u32)
                                            * crate::rational::binomial(d as u32, e as u32);
                                    }
                                }
                                w *= bs;
                                total += w;
                            }
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn constant_matches_enumeration_oracle() {
        for i in 0..=4 {
            assert_eq!(quasi_mult_constant(i, 1), constant_oracle_n1(i), "i = {i}");
        }
    }

    #[test]
    fn product_seminorm_bounded_by_constant() {
        let n = 1;
        let frame = SymplecticFrame::standard(n);
        let k = GridBox::symmetric_unit(n, 17);
        let mut rng = sampling::rng(79);
        for i in 0..=3u32 {
            let c = quasi_mult_constant(i, n);
            for _ in 0..6 {
                let f = sampling::random_base_poly(&mut rng, n, 3, 2, 1, false);
                let g = sampling::random_base_poly(&mut rng, n, 3, 2, 1, false);
                let fg = recaptured_star(&f, &g, &frame).unwrap();
                let lhs = seminorm(&fg, i, &k).unwrap();
                let rhs = c.clone() * seminorm(&f, i, &k).unwrap() * seminorm(&g, i, &k).unwrap();
                assert!(lhs <= rhs, "i={i}: {lhs} > {rhs}");
            }
        }
    }
}

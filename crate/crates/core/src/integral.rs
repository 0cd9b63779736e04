//! The product integral of a curve of group exponents.
//!
//! For a curve X(t) of exponents on [0, 1], the mesh-m product integral is
//! the right-ordered product
//!     exp(X(t_{m-1}) dt) * ... * exp(X(t_1) dt) * exp(X(t_0) dt)
//! over the uniform left-endpoint partition, composed through the BCH law.
//! Mesh values are exact rationals; coefficients of the mesh-m exponent are
//! polynomials in 1/m, which is what the extrapolation in the test suite
//! exploits.

use crate::error::CoreError;
use crate::group::GroupExponent;
use crate::poly::BasePolynomial;
use crate::rational::Rat;
use crate::Result;
use num_bigint::BigInt;

/// Polynomial curve of exponents: X(t) = sum_j t^j coeffs[j].
#[derive(Debug, Clone)]
pub struct ExponentCurve {
    pub coeffs: Vec<GroupExponent>,
}

impl ExponentCurve {
    pub fn new(coeffs: Vec<GroupExponent>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CoreError::Invalid(
                "curve needs at least one coefficient".into(),
            ));
        }
        let t0 = coeffs[0].trunc;
        if coeffs.iter().any(|c| c.trunc != t0) {
            return Err(CoreError::TruncationMismatch(t0, 0));
        }
        Ok(ExponentCurve { coeffs })
    }

    /// Exact evaluation at rational time.
    pub fn eval(&self, t: &Rat) -> GroupExponent {
        let mut g = BasePolynomial::zero(self.coeffs[0].frame.n);
        let mut f = BasePolynomial::zero(self.coeffs[0].frame.n);
        let mut power = Rat::from_integer(BigInt::from(1));
        for c in &self.coeffs {
            g = g.add(&c.g_part.scale(&power));
            f = f.add(&c.f_part.scale(&power));
            power *= t.clone();
        }
        GroupExponent::new(g, f, self.coeffs[0].frame.clone(), self.coeffs[0].trunc)
            .expect("curve coefficients are valid exponents")
    }
}

/// Right-ordered product of exp(X(t_i)/m) over t_i = i/m, i = 0..m-1.
pub fn product_integral(curve: &ExponentCurve, mesh_m: u32) -> Result<GroupExponent> {
    if mesh_m == 0 {
        return Err(CoreError::Invalid("mesh must be >= 1".into()));
    }
    let dt = Rat::new(BigInt::from(1), BigInt::from(mesh_m));
    let mut acc: Option<GroupExponent> = None;
    for i in 0..mesh_m {
        let t = Rat::new(BigInt::from(i), BigInt::from(mesh_m));
        let step = curve.eval(&t);
        let step = GroupExponent::new(
            step.g_part.scale(&dt),
            step.f_part.scale(&dt),
            step.frame.clone(),
            step.trunc,
        )?;
        acc = Some(match acc {
            // later factors multiply on the left
            Some(prev) => step.compose(&prev)?,
            None => step,
        });
    }
    Ok(acc.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::SymplecticFrame;
    use crate::rational::rat;
    use crate::sampling;

    #[test]
    fn constant_curve_reproduces_its_exponent() {
        // all factors commute, so the product is exp(X * sum dt) = exp(X)
        let frame = SymplecticFrame::standard(1);
        let mut rng = sampling::rng(71);
        let f = sampling::random_base_poly(&mut rng, 1, 3, 3, 0, true);
        let h = GroupExponent::new(BasePolynomial::zero(1), f, frame, 8).unwrap();
        let curve = ExponentCurve::new(vec![h.clone()]).unwrap();
        for m in [1u32, 4, 7] {
            let p = product_integral(&curve, m).unwrap();
            assert_eq!(p, h, "mesh {m}");
        }
    }

    #[test]
    fn linear_curve_mesh_value_is_exact_riemann_sum() {
        // X(t) = t H: commuting case; the mesh-m value is H (m-1)/(2m).
        let frame = SymplecticFrame::standard(1);
        let mut rng = sampling::rng(73);
        let f = sampling::random_base_poly(&mut rng, 1, 2, 2, 0, true);
        let h = GroupExponent::new(BasePolynomial::zero(1), f, frame.clone(), 8).unwrap();
        let zero = GroupExponent::zero(frame, 8);
        let curve = ExponentCurve::new(vec![zero, h.clone()]).unwrap();
        let p = product_integral(&curve, 64).unwrap();
        assert_eq!(p.f_part, h.f_part.scale(&rat(63, 128)));
    }
}

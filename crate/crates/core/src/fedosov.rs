//! Fedosov calculus on a chart: the fiber-lowering differential delta, its
//! normalized homotopy inverse, the covariant derivative, the recursive
//! construction of the connection term r, flatness audits and flat sections.
//!
//! Conventions: delta = (1/nu) ad(omega_{ij} dz^i Z^j) collapses to
//! dz^i /\ d_{Z^i} because omega Lambda = 1; delta^{-1} carries the 1/(p+q)
//! normalization that makes delta delta^{-1} + delta^{-1} delta + pi = id
//! hold on the nose. Form degree is capped by the chart dimension, so no
//! overflow state is reachable.

use crate::error::CoreError;
use crate::frame::SymplecticFrame;
use crate::monomial::Monomial;
use crate::poly::BasePolynomial;
use crate::rational::{rat, rat_i, Rat};
use crate::series::WeylSeries;
use crate::Result;
use num_traits::Zero;

/// Degree slack for internal computations (nu divisions and products).
const SLACK: u32 = 4;

/// Connection data on the chart. `gamma[k][i][j]` holds Gamma^k_{ij},
/// symmetric in (i, j); lowering the upper index with omega must give a
/// totally symmetric tensor (the symplectic-connection condition), which is
/// validated at construction.
#[derive(Debug, Clone)]
pub struct FedosovState {
    pub frame: SymplecticFrame,
    pub gamma: Vec<Vec<Vec<Rat>>>,
    pub r_omega: WeylSeries,
    pub trunc: u32,
    pub r: Option<WeylSeries>,
}

impl FedosovState {
    pub fn new(
        frame: SymplecticFrame,
        gamma: Vec<Vec<Vec<Rat>>>,
        r_omega: WeylSeries,
        trunc: u32,
    ) -> Result<Self> {
        let dim = frame.dim();
        if gamma.len() != dim || gamma.iter().any(|g| g.len() != dim || g.iter().any(|r| r.len() != dim)) {
            return Err(CoreError::Invalid(format!(
                "gamma must be {dim}x{dim}x{dim}"
            )));
        }
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if gamma[k][i][j] != gamma[k][j][i] {
                        return Err(CoreError::Invalid(format!(
                            "gamma^{}_{{{},{}}} not symmetric in the lower indices",
                            k + 1,
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        // lowered tensor must be totally symmetric
        let lower = |i: usize, j: usize, k: usize, frame: &SymplecticFrame| -> Rat {
            (0..dim)
                .map(|l| frame.omega[(i, l)].clone() * gamma[l][j][k].clone())
                .sum()
        };
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = lower(i, j, k, &frame);
                    let b = lower(j, i, k, &frame);
                    let c = lower(k, j, i, &frame);
                    if a != b || a != c {
                        return Err(CoreError::Invalid(
                            "lowered Christoffel tensor is not totally symmetric".into(),
                        ));
                    }
                }
            }
        }
        if r_omega.n != frame.n {
            return Err(CoreError::DimensionMismatch(r_omega.n, frame.n));
        }
        Ok(FedosovState {
            frame,
            gamma,
            r_omega,
            trunc,
            r: None,
        })
    }

    /// Flat chart state: Gamma = 0.
    pub fn flat(frame: SymplecticFrame, r_omega: WeylSeries, trunc: u32) -> Result<Self> {
        let dim = frame.dim();
        Self::new(frame, vec![vec![vec![Rat::zero(); dim]; dim]; dim], r_omega, trunc)
    }

    /// The fiber-quadratic connection one-form
    /// Gamma~ = (1/2) omega_{il} Gamma^l_{jk} Z^i Z^j dz^k.
    pub fn gamma_tilde(&self, trunc: u32) -> WeylSeries {
        let n = self.frame.n;
        let dim = self.frame.dim();
        let mut s = WeylSeries::zero(n, trunc);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let mut c = Rat::zero();
                    for l in 0..dim {
                        c += self.frame.omega[(i, l)].clone() * self.gamma[l][j][k].clone();
                    }
                    if c.is_zero() {
                        continue;
                    }
                    let mut m = Monomial::one(n);
                    m.fiber[i] += 1;
                    m.fiber[j] += 1;
                    m.forms = 1 << k;
                    s.add_term(m, c * rat(1, 2));
                }
            }
        }
        s
    }

    pub fn has_gamma(&self) -> bool {
        self.gamma
            .iter()
            .any(|g| g.iter().any(|r| r.iter().any(|c| !c.is_zero())))
    }

    /// Curvature of the bare connection: R = d Gamma~ + (1/nu) Gamma~ * Gamma~.
    /// This is the fiber-quadratic 2-form the recursion expects as input when
    /// Gamma /= 0.
    pub fn connection_curvature(&self, trunc: u32) -> Result<WeylSeries> {
        let gt = self.gamma_tilde(trunc + SLACK);
        let quad = gt.moyal(&gt, &self.frame)?.div_nu()?;
        Ok(gt.exterior_derivative().add(&quad)?.truncate(trunc))
    }
}

/// delta a = omega_{ij} Lambda^{jl} dz^i /\ d_{Z^l} a: lowers fiber degree by
/// one, raises form degree by one, squares to zero.
pub fn delta(a: &WeylSeries, frame: &SymplecticFrame) -> WeylSeries {
    let dim = frame.dim();
    let mut out = WeylSeries::zero(a.n, a.trunc);
    for i in 0..dim {
        for l in 0..dim {
            let mut c = Rat::zero();
            for j in 0..dim {
                c += frame.omega[(i, j)].clone() * frame.lambda[(j, l)].clone();
            }
            if c.is_zero() {
                continue;
            }
            let d = a.d_fiber(l).wedge_form_left(i).scale(&c);
            out = out.add(&d).expect("same frame");
        }
    }
    out
}

/// The normalized homotopy inverse: on a monomial of fiber degree p and form
/// degree q, (1/(p+q)) sum_k Z^k iota_k, and 0 on the (0,0) stratum.
pub fn delta_inv(a: &WeylSeries, _frame: &SymplecticFrame) -> WeylSeries {
    let mut out = WeylSeries::zero(a.n, a.trunc);
    for (m, c) in a.iter() {
        let p = m.fiber_degree();
        let q = m.form_degree();
        if p + q == 0 {
            continue;
        }
        let scale = rat_i(1) / rat_i((p + q) as i64);
        let mut mask = m.forms;
        while mask != 0 {
            let k = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            // iota_k: remove dz_k with the sign of its position in the mask
            let below = (m.forms & ((1u32 << k) - 1)).count_ones();
            let sign = if below % 2 == 0 { rat_i(1) } else { rat_i(-1) };
            let mut m2 = m.clone();
            m2.forms &= !(1u32 << k);
            m2.fiber[k] += 1;
            out.add_term(m2, c.clone() * sign * scale.clone());
        }
    }
    out
}

/// Projection onto the fiber-free, form-free stratum.
pub fn pi_center(a: &WeylSeries) -> WeylSeries {
    a.central_part()
}

/// Covariant derivative: base exterior derivative plus the Christoffel
/// action (1/nu) [Gamma~, .] (a graded derivation of the fiber product).
pub fn nabla(a: &WeylSeries, state: &FedosovState) -> Result<WeylSeries> {
    let d = a.exterior_derivative();
    if !state.has_gamma() {
        return Ok(d);
    }
    let gt = state.gamma_tilde(a.trunc + 2);
    let br = gt
        .graded_commutator(&a.truncate(a.trunc + 2), &state.frame)?
        .div_nu()?
        .truncate(a.trunc);
    d.add(&br)
}

/// r = sum r_k solving delta r = R_omega + nabla r + (1/nu) r * r with
/// delta^{-1} r = 0 and degree floor 3, built degree by degree:
/// r_{k+1} = delta^{-1}(R^{(k)} + (nabla r)^{(k)} + ((1/nu) r * r)^{(k)}).
pub fn fedosov_recursion(state: &FedosovState) -> Result<WeylSeries> {
    let n = state.frame.n;
    let t = state.trunc + SLACK;
    let r_omega = state.r_omega.truncate(t);
    let mut r = WeylSeries::zero(n, t);
    for k in 2..=state.trunc as i64 {
        let nr = nabla(&r, state)?;
        let quad = r.moyal(&r, &state.frame)?.div_nu()?;
        let rhs = r_omega
            .degree_part(k)
            .add(&nr.degree_part(k))?
            .add(&quad.degree_part(k))?;
        if rhs.is_zero() {
            continue;
        }
        let next = delta_inv(&rhs, &state.frame);
        r = r.add(&next)?;
    }
    let r = r.truncate(state.trunc);
    // normalization invariants
    if !delta_inv(&r, &state.frame).is_zero() {
        return Err(CoreError::Invalid(
            "recursion output violates delta^{-1} r = 0".into(),
        ));
    }
    if let Some(d) = r.min_degree() {
        if d < 3 {
            return Err(CoreError::Invalid(format!(
                "recursion output has degree {d} < 3"
            )));
        }
    }
    Ok(r)
}

/// delta r - R_omega - nabla r - (1/2 nu)[r, r], truncated to the degrees the
/// recursion has determined (<= trunc - 1). Zero iff the connection
/// nabla - delta + ad(r/nu) is flat to order.
pub fn flatness_defect(state: &FedosovState, r: &WeylSeries) -> Result<WeylSeries> {
    let t = state.trunc + SLACK;
    let rr = r.truncate(t);
    let quad = rr.moyal(&rr, &state.frame)?.div_nu()?;
    let defect = delta(&rr, &state.frame)
        .sub(&state.r_omega.truncate(t))?
        .sub(&nabla(&rr, state)?)?
        .sub(&quad)?;
    Ok(defect.truncate(state.trunc.saturating_sub(1)))
}

/// The full covariant derivative D = nabla - delta + (1/nu)[r, .].
pub fn covariant_derivative(
    a: &WeylSeries,
    state: &FedosovState,
    r: &WeylSeries,
) -> Result<WeylSeries> {
    let t = a.trunc;
    let braces = r
        .truncate(t + 2)
        .graded_commutator(&a.truncate(t + 2), &state.frame)?
        .div_nu()?
        .truncate(t);
    nabla(a, state)?.sub(&delta(a, &state.frame))?.add(&braces)
}

/// The unique parallel section with central part f, built by the
/// delta^{-1} fixed point: a = f + delta^{-1}(nabla a + (1/nu)[r, a]).
pub fn flat_section(
    f: &BasePolynomial,
    state: &FedosovState,
    r: &WeylSeries,
) -> Result<WeylSeries> {
    let t = state.trunc + SLACK;
    let f0 = f.to_series(t);
    let rr = r.truncate(t);
    let mut a = f0.clone();
    loop {
        let br = rr.graded_commutator(&a, &state.frame)?.div_nu()?;
        let next = f0.add(&delta_inv(&nabla(&a, state)?.add(&br)?, &state.frame))?;
        if next == a {
            break;
        }
        a = next;
    }
    Ok(a.truncate(state.trunc))
}

/// The star product recaptured from flat sections:
/// f * g = pi_center(sigma^{-1}(f) *fiber sigma^{-1}(g)).
pub fn flat_product(
    f: &BasePolynomial,
    g: &BasePolynomial,
    state: &FedosovState,
    r: &WeylSeries,
) -> Result<BasePolynomial> {
    let sf = flat_section(f, state, r)?.truncate(state.trunc + SLACK);
    let sg = flat_section(g, state, r)?.truncate(state.trunc + SLACK);
    let prod = sf.moyal(&sg, &state.frame)?;
    BasePolynomial::from_series(&pi_center(&prod).truncate(state.trunc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    fn frame1() -> SymplecticFrame {
        SymplecticFrame::standard(1)
    }

    /// Random section with fiber, base and form content.
    fn random_section(rng: &mut sampling::Stream, n: u32, trunc: u32) -> WeylSeries {
        use rand::Rng;
        let mut s = sampling::random_series(rng, n, trunc, 4, 2, 3);
        // sprinkle form factors
        let dim = 2 * n as usize;
        let mut withforms = WeylSeries::zero(n, trunc);
        for (m, c) in s.iter() {
            let mut m2 = m.clone();
            if rng.gen_bool(0.5) {
                m2.forms = 1 << rng.gen_range(0..dim);
                if rng.gen_bool(0.3) && dim > 1 {
                    m2.forms |= 1 << rng.gen_range(0..dim);
                }
            }
            withforms.add_term(m2, c.clone());
        }
        s = withforms;
        s
    }

    #[test]
    fn delta_basics() {
        let frame = frame1();
        // delta of a scalar is zero
        let c = WeylSeries::one(1, 6);
        assert!(delta(&c, &frame).is_zero());
        // delta(Z^i) agrees with the direct graded-commutator oracle
        let lam = {
            // omega_{ij} dz^i Z^j
            let mut s = WeylSeries::zero(1, 8);
            for i in 0..2 {
                for j in 0..2 {
                    if !frame.omega[(i, j)].is_zero() {
                        let mut m = Monomial::one(1);
                        m.fiber[j] = 1;
                        m.forms = 1 << i;
                        s.add_term(m, frame.omega[(i, j)].clone());
                    }
                }
            }
            s
        };
        let mut rng = sampling::rng(101);
        for i in 1..=2 {
            let z = WeylSeries::fiber_gen(1, 8, i);
            let oracle = lam.graded_commutator(&z, &frame).unwrap().div_nu().unwrap();
            assert_eq!(delta(&z, &frame), oracle);
        }
        for _ in 0..10 {
            let a = random_section(&mut rng, 1, 8);
            let oracle = lam.graded_commutator(&a, &frame).unwrap().div_nu().unwrap();
            assert_eq!(delta(&a, &frame), oracle);
            assert!(delta(&delta(&a, &frame), &frame).is_zero());
        }
    }

    #[test]
    fn delta_inv_basics() {
        let frame = frame1();
        // scalar with no fiber or form content maps to zero
        let s = WeylSeries::nu(1, 6, 2);
        assert!(delta_inv(&s, &frame).is_zero());
        let mut rng = sampling::rng(103);
        for _ in 0..10 {
            let a = random_section(&mut rng, 1, 8);
            assert!(delta_inv(&delta_inv(&a, &frame), &frame).is_zero());
        }
    }

    #[test]
    fn hodge_decomposition_is_exact() {
        let mut rng = sampling::rng(107);
        for n in 1..=2u32 {
            let frame = SymplecticFrame::standard(n);
            for _ in 0..15 {
                let a = random_section(&mut rng, n, 8);
                let lhs = delta(&delta_inv(&a, &frame), &frame)
                    .add(&delta_inv(&delta(&a, &frame), &frame))
                    .unwrap()
                    .add(&pi_center(&a))
                    .unwrap();
                assert_eq!(lhs, a);
            }
        }
    }

    fn const_gamma_state(trunc: u32) -> FedosovState {
        // totally symmetric lowered tensor at n = 1 with mixed components
        // (a single dz-component would have zero curvature):
        // T_{112} = T_{121} = T_{211} = 1, T_{111} = 1, raised through
        // Gamma^l_{jk} = Lambda^{li} T_{ijk}.
        let frame = frame1();
        let dim = 2;
        let mut t = vec![vec![vec![Rat::zero(); dim]; dim]; dim];
        t[0][0][0] = rat_i(1);
        for (i, j, k) in [(0, 0, 1), (0, 1, 0), (1, 0, 0)] {
            t[i][j][k] = rat_i(1);
        }
        let mut gamma = vec![vec![vec![Rat::zero(); dim]; dim]; dim];
        for l in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    gamma[l][j][k] = (0..dim)
                        .map(|i| frame.lambda[(l, i)].clone() * t[i][j][k].clone())
                        .sum();
                }
            }
        }
        let r_omega = WeylSeries::zero(1, trunc);
        let mut st = FedosovState::new(frame, gamma, r_omega, trunc).unwrap();
        let r = st.connection_curvature(trunc).unwrap();
        st.r_omega = r;
        st
    }

    #[test]
    fn nabla_flat_and_leibniz() {
        let frame = frame1();
        let st = FedosovState::flat(frame.clone(), WeylSeries::zero(1, 8), 8).unwrap();
        // flat case: plain exterior derivative
        let mut a = WeylSeries::base_gen(1, 8, 1);
        a = crate::series::WeylSeries::fiber_gen(1, 8, 2).moyal(&a, &frame).unwrap();
        let na = nabla(&a, &st).unwrap();
        assert_eq!(na, a.exterior_derivative());
        assert!(nabla(&na, &st).unwrap().is_zero()); // d^2 = 0

        // Leibniz for the connection with Christoffels, on form-free sections
        let stg = const_gamma_state(8);
        let mut rng = sampling::rng(109);
        for _ in 0..6 {
            let f = sampling::random_series(&mut rng, 1, 8, 3, 2, 2);
            let g = sampling::random_series(&mut rng, 1, 8, 3, 2, 2);
            let fg = f.moyal(&g, &stg.frame).unwrap();
            let lhs = nabla(&fg, &stg).unwrap();
            let rhs = nabla(&f, &stg)
                .unwrap()
                .moyal(&g, &stg.frame)
                .unwrap()
                .add(&f.moyal(&nabla(&g, &stg).unwrap(), &stg.frame).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn recursion_zero_curvature_gives_zero() {
        let frame = frame1();
        let st = FedosovState::flat(frame, WeylSeries::zero(1, 8), 8).unwrap();
        let r = fedosov_recursion(&st).unwrap();
        assert!(r.is_zero());
        assert!(flatness_defect(&st, &r).unwrap().is_zero());
    }

    #[test]
    fn recursion_central_perturbation_is_flat() {
        // R_omega = nu^2 * (constant closed base 2-form)
        let frame = frame1();
        let mut r_omega = WeylSeries::zero(1, 8);
        let mut m = Monomial::one(1);
        m.nu = 2;
        m.forms = 0b11;
        r_omega.add_term(m, rat(2, 3));
        let st = FedosovState::flat(frame, r_omega, 8).unwrap();
        let r = fedosov_recursion(&st).unwrap();
        assert!(!r.is_zero());
        assert!(r.min_degree().unwrap() >= 3);
        assert!(delta_inv(&r, &st.frame).is_zero());
        let defect = flatness_defect(&st, &r).unwrap();
        assert!(defect.is_zero(), "defect: {defect}");
    }

    #[test]
    fn recursion_quadratic_curvature_is_flat() {
        let st = const_gamma_state(8);
        assert!(!st.r_omega.is_zero());
        let r = fedosov_recursion(&st).unwrap();
        let defect = flatness_defect(&st, &r).unwrap();
        assert!(defect.is_zero(), "defect: {defect}");
        // and the full covariant derivative squares to zero on sections
        let mut rng = sampling::rng(113);
        for _ in 0..4 {
            let f = sampling::random_base_poly(&mut rng, 1, 3, 2, 0, false);
            let a = flat_section(&f, &st, &r).unwrap();
            let da = covariant_derivative(&a, &st, &r).unwrap();
            assert!(da.truncate(st.trunc - 1).is_zero(), "Da: {da}");
        }
    }

    #[test]
    fn first_recursion_step_matches_hand_expansion() {
        // r_3 = delta^{-1} R for a single quadratic-fiber monomial:
        // R = Z1 Z2 dz1 dz2 has p = 2, q = 2, so the weight is 1/4 and
        // iota_1 dz1dz2 = dz2, iota_2 dz1dz2 = -dz1:
        // delta^{-1} R = (1/4)(Z1^2 Z2 dz2 - Z1 Z2^2 dz1).
        let frame = frame1();
        let mut r_omega = WeylSeries::zero(1, 8);
        let mut m = Monomial::one(1);
        m.fiber = vec![1, 1];
        m.forms = 0b11;
        r_omega.add_term(m, rat_i(1));
        let r3 = delta_inv(&r_omega, &frame);
        let mut expected = WeylSeries::zero(1, 8);
        let mut m1 = Monomial::one(1);
        m1.fiber = vec![2, 1];
        m1.forms = 0b10;
        expected.add_term(m1, rat(1, 4));
        let mut m2 = Monomial::one(1);
        m2.fiber = vec![1, 2];
        m2.forms = 0b01;
        expected.add_term(m2, rat(-1, 4));
        assert_eq!(r3, expected);
    }

    #[test]
    fn defect_localizes_mutations() {
        let frame = frame1();
        let mut r_omega = WeylSeries::zero(1, 8);
        let mut m = Monomial::one(1);
        m.nu = 2;
        m.forms = 0b11;
        r_omega.add_term(m, rat_i(1));
        let st = FedosovState::flat(frame, r_omega, 8).unwrap();
        let r = fedosov_recursion(&st).unwrap();
        // perturb by one spurious degree-6 term (not delta-closed)
        let mut bad = r.clone();
        let mut spurious = Monomial::one(1);
        spurious.nu = 2;
        spurious.fiber = vec![0, 2];
        spurious.forms = 0b01;
        bad.add_term(spurious, rat_i(1));
        let defect = flatness_defect(&st, &bad).unwrap();
        assert!(!defect.is_zero());
        // the mutation is degree 6; delta of it shows at degree 5
        assert_eq!(defect.min_degree(), Some(5));
    }

    #[test]
    fn flat_sections_reduce_to_continuations_in_the_flat_case() {
        let frame = frame1();
        let st = FedosovState::flat(frame, WeylSeries::zero(1, 10), 10).unwrap();
        let r = fedosov_recursion(&st).unwrap();
        let mut rng = sampling::rng(127);
        for _ in 0..5 {
            let f = sampling::random_base_poly(&mut rng, 1, 3, 3, 0, false);
            let a = flat_section(&f, &st, &r).unwrap();
            assert_eq!(a, crate::continuation::weyl_continuation(&f, 10));
        }
        // sigma^{-1}(1) = 1
        let one = flat_section(&BasePolynomial::one(1), &st, &r).unwrap();
        assert_eq!(one, WeylSeries::one(1, 10));
    }

    #[test]
    fn flat_product_is_a_star_product_under_curvature() {
        let frame = frame1();
        let mut r_omega = WeylSeries::zero(1, 10);
        let mut m = Monomial::one(1);
        m.nu = 2;
        m.forms = 0b11;
        r_omega.add_term(m, rat(1, 2));
        let st = FedosovState::flat(frame.clone(), r_omega, 10).unwrap();
        let r = fedosov_recursion(&st).unwrap();
        let mut rng = sampling::rng(131);
        for _ in 0..4 {
            let f = sampling::random_base_poly(&mut rng, 1, 2, 2, 0, false);
            let g = sampling::random_base_poly(&mut rng, 1, 2, 2, 0, false);
            let h = sampling::random_base_poly(&mut rng, 1, 2, 2, 0, false);
            // nu^0 part is the pointwise product
            let fg = flat_product(&f, &g, &st, &r).unwrap();
            assert_eq!(fg.nu_part(0), f.mul(&g));
            // nu^1 part of the commutator is the Poisson bracket (times 1)
            let gf = flat_product(&g, &f, &st, &r).unwrap();
            assert_eq!(fg.sub(&gf).nu_part(1), f.poisson(&g, &frame));
            // associativity through the truncation (nu-degrees <= trunc/2)
            let lhs = flat_product(&flat_product(&f, &g, &st, &r).unwrap(), &h, &st, &r).unwrap();
            let rhs = flat_product(&f, &flat_product(&g, &h, &st, &r).unwrap(), &st, &r).unwrap();
            let cut = st.trunc / 2;
            for l in 0..=cut {
                assert_eq!(lhs.nu_part(l), rhs.nu_part(l), "nu^{l}");
            }
            // the fiber product of two flat sections is again parallel
            let sf = flat_section(&f, &st, &r).unwrap().truncate(st.trunc + 2);
            let sg = flat_section(&g, &st, &r).unwrap().truncate(st.trunc + 2);
            let prod = sf.moyal(&sg, &st.frame).unwrap().truncate(st.trunc);
            let dp = covariant_derivative(&prod, &st, &r).unwrap();
            assert!(dp.truncate(st.trunc - 2).is_zero(), "product not parallel: {dp}");
        }
    }
}

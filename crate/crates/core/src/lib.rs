//! Exact-arithmetic kernel for formal deformation quantization on a Darboux
//! chart of R^2n.
//!
//! The crate is organized around a truncated Weyl algebra with exact rational
//! coefficients: base variables `z1..z2n`, fiber generators `Z1..Z2n`, the
//! formal parameter `nu` and form generators `dz1..dz2n`, graded by
//! `d(nu^l Z^alpha) = 2l + |alpha|`. Everything else is built on top of the
//! fiberwise Moyal product:
//!
//! * [`poly`]/[`continuation`] — base polynomials, Weyl continuation and the
//!   recaptured star product on the chart;
//! * [`group`] — exponents of inner automorphisms, their action, the BCH
//!   group law and the factorization of nu-automorphisms;
//! * [`seminorm`]/[`integral`] — seminorm audits and the product integral;
//! * [`starexp`]/[`riccati`] — star exponentials of quadratic forms by three
//!   routes (term-by-term, closed form, Riccati ODE);
//! * [`fedosov`] — delta/delta^{-1} calculus, the recursive connection term
//!   and flat sections;
//! * [`lift`] — CCR defects and order-by-order repair for polynomial
//!   symplectomorphisms, the lift fixed-point equation, composition cocycles;
//! * [`dgla`] — Schouten/Gerstenhaber brackets, Hochschild coboundary and
//!   Maurer–Cartan defect checkers.

pub mod dgla;
pub mod error;
pub mod fedosov;
pub mod frame;
pub mod group;
pub mod integral;
pub mod lift;
pub mod matq;
pub mod monomial;
pub mod poly;
pub mod continuation;
pub mod rational;
pub mod riccati;
pub mod sampling;
pub mod seminorm;
pub mod series;
pub mod starexp;

pub use error::CoreError;
pub use frame::{LambdaConvention, SymplecticFrame};
pub use monomial::Monomial;
pub use poly::BasePolynomial;
pub use rational::Rat;
pub use series::WeylSeries;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

//! Symplectic frame data: the CCR matrix Lambda and the symplectic form.
//!
//! Two conventions coexist in the literature and both are used here, so the
//! frame carries Lambda explicitly rather than hard-coding either block form.
//! The pairing is fixed so that [Z^i, Z^j] = nu Lambda^{ij} holds exactly,
//! and omega is stored as Lambda^{-1} so that omega_{ij} Lambda^{jl} = delta_i^l.

use crate::error::CoreError;
use crate::matq::MatQ;
use crate::rational::Rat;
use crate::Result;
use num_traits::Zero;

/// Which block form Lambda takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaConvention {
    /// Lambda = [[0, -1_n], [1_n, 0]] (the default).
    Split,
    /// Lambda = [[0, 1_n], [-1_n, 0]] (used by the star-exponential toolkit).
    Planar,
    /// Caller-supplied matrix.
    Explicit,
}

/// A Darboux-chart frame: half-dimension n, the CCR matrix Lambda and the
/// matrix omega of the symplectic form, with omega * Lambda = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticFrame {
    pub n: u32,
    pub convention: LambdaConvention,
    pub lambda: MatQ,
    pub omega: MatQ,
}

impl SymplecticFrame {
    /// Default frame: Lambda = [[0, -1_n], [1_n, 0]].
    pub fn standard(n: u32) -> Self {
        let d = n as usize;
        let lambda = MatQ::from_fn(2 * d, 2 * d, |i, j| {
            if i < d && j == i + d {
                -Rat::from_integer(1.into())
            } else if i >= d && j == i - d {
                Rat::from_integer(1.into())
            } else {
                Rat::zero()
            }
        });
        let omega = lambda.inverse().expect("block Lambda is invertible");
        SymplecticFrame {
            n,
            convention: LambdaConvention::Split,
            lambda,
            omega,
        }
    }

    /// The opposite block convention, Lambda = [[0, 1_n], [-1_n, 0]].
    pub fn planar(n: u32) -> Self {
        let d = n as usize;
        let lambda = MatQ::from_fn(2 * d, 2 * d, |i, j| {
            if i < d && j == i + d {
                Rat::from_integer(1.into())
            } else if i >= d && j == i - d {
                -Rat::from_integer(1.into())
            } else {
                Rat::zero()
            }
        });
        let omega = lambda.inverse().expect("block Lambda is invertible");
        SymplecticFrame {
            n,
            convention: LambdaConvention::Planar,
            lambda,
            omega,
        }
    }

    /// Frame with an explicit antisymmetric invertible Lambda.
    pub fn from_lambda(n: u32, lambda: MatQ) -> Result<Self> {
        if lambda.rows != 2 * n as usize || lambda.cols != 2 * n as usize {
            return Err(CoreError::Invalid(format!(
                "Lambda must be {0}x{0}",
                2 * n
            )));
        }
        if !lambda.is_antisymmetric() {
            return Err(CoreError::NotAntisymmetric);
        }
        let omega = lambda.inverse()?;
        Ok(SymplecticFrame {
            n,
            convention: LambdaConvention::Explicit,
            lambda,
            omega,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n as usize
    }

    /// Lambda^{ij} (0-based indices).
    pub fn lambda_at(&self, i: usize, j: usize) -> &Rat {
        &self.lambda[(i, j)]
    }

    /// The nonzero entries of Lambda as (i, j, value), 0-based.
    pub fn lambda_support(&self) -> Vec<(usize, usize, Rat)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if !self.lambda[(i, j)].is_zero() {
                    out.push((i, j, self.lambda[(i, j)].clone()));
                }
            }
        }
        out
    }

    /// Check tA * Lambda-compatible pairing: A is symplectic when
    /// A Lambda tA = Lambda (equivalently tA omega A = omega).
    pub fn is_symplectic_matrix(&self, a: &MatQ) -> bool {
        if a.rows != self.dim() || a.cols != self.dim() {
            return false;
        }
        &(&(a * &self.lambda) * &a.transpose()) == &self.lambda
    }
}

//! Dense matrices over the exact rationals.
//!
//! Small sizes only (2n <= 8 in practice); Gauss-Jordan is plenty.

use crate::error::CoreError;
use crate::rational::Rat;
use crate::Result;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatQ {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl MatQ {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatQ {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| Rat::from_integer(rows[i][j].into()))
    }

    pub fn transpose(&self) -> MatQ {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self[(i, j)] == -self[(j, i)].clone()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn scale(&self, k: &Rat) -> MatQ {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * k)
    }

    /// Gauss-Jordan inverse. Errors on singular input.
    pub fn inverse(&self) -> Result<MatQ> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = MatQ::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or(CoreError::SingularMatrix)?;
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() / p.clone();
                inv[(col, j)] = inv[(col, j)].clone() / p.clone();
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    for j in 0..n {
                        let av = a[(col, j)].clone();
                        let iv = inv[(col, j)].clone();
                        a[(r, j)] = a[(r, j)].clone() - f.clone() * av;
                        inv[(r, j)] = inv[(r, j)].clone() - f.clone() * iv;
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by fraction-full Gaussian elimination.
    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let pivot = match (col..n).find(|&r| !a[(r, col)].is_zero()) {
                Some(p) => p,
                None => return Rat::zero(),
            };
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)].clone();
            det *= p.clone();
            for r in col + 1..n {
                if !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone() / p.clone();
                    for j in col..n {
                        let v = a[(col, j)].clone();
                        a[(r, j)] = a[(r, j)].clone() - f.clone() * v;
                    }
                }
            }
        }
        det
    }

    pub fn trace(&self) -> Rat {
        (0..self.rows).map(|i| self[(i, i)].clone()).sum()
    }

    /// Max |entry|, used in defect reports.
    pub fn max_abs(&self) -> Rat {
        let mut m = Rat::zero();
        for v in &self.data {
            let a = v.abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }
}

impl std::ops::Index<(usize, usize)> for MatQ {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for MatQ {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &MatQ {
    type Output = MatQ;
    fn add(self, rhs: &MatQ) -> MatQ {
        MatQ::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() + rhs[(i, j)].clone()
        })
    }
}

impl Sub for &MatQ {
    type Output = MatQ;
    fn sub(self, rhs: &MatQ) -> MatQ {
        MatQ::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() - rhs[(i, j)].clone()
        })
    }
}

impl Mul for &MatQ {
    type Output = MatQ;
    fn mul(self, rhs: &MatQ) -> MatQ {
        assert_eq!(self.cols, rhs.rows);
        MatQ::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols)
                .map(|k| self[(i, k)].clone() * rhs[(k, j)].clone())
                .sum()
        })
    }
}

impl Neg for &MatQ {
    type Output = MatQ;
    fn neg(self) -> MatQ {
        MatQ::from_fn(self.rows, self.cols, |i, j| -self[(i, j)].clone())
    }
}

impl fmt::Display for MatQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| crate::rational::display(&self[(i, j)]))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_i;

    #[test]
    fn inverse_round_trip() {
        let m = MatQ::from_i64(&[&[1, 2], &[3, 5]]);
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, MatQ::identity(2));
    }

    #[test]
    fn singular_detected() {
        let m = MatQ::from_i64(&[&[1, 2], &[2, 4]]);
        assert!(m.inverse().is_err());
        assert!(m.det().is_zero());
    }

    #[test]
    fn det_matches_cofactor() {
        let m = MatQ::from_i64(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        // 2*(12-1) - 1*(4-0) = 18
        assert_eq!(m.det(), rat_i(18));
    }
}

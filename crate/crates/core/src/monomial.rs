//! Monomials of the truncated Weyl algebra.
//!
//! A monomial is `nu^l * z^base * Z^fiber * dz^mask` with the form part kept
//! as a bitmask in canonical ascending order. The total degree counts only
//! the deformation content: `d = 2l + |fiber|`.

use std::cmp::Ordering;
use std::fmt;

/// One monomial. `base` and `fiber` have length `2n`; `forms` is a bitmask
/// over `dz1..dz2n` (bit i-1 for dz_i), stored sorted ascending with the sign
/// normalized away into the coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub nu: u32,
    pub base: Vec<u32>,
    pub fiber: Vec<u32>,
    pub forms: u32,
}

impl Monomial {
    /// The constant monomial 1 in half-dimension n.
    pub fn one(n: u32) -> Self {
        Monomial {
            nu: 0,
            base: vec![0; 2 * n as usize],
            fiber: vec![0; 2 * n as usize],
            forms: 0,
        }
    }

    /// nu^l.
    pub fn nu_pow(n: u32, l: u32) -> Self {
        let mut m = Self::one(n);
        m.nu = l;
        m
    }

    /// Fiber generator Z_i (1-based).
    pub fn fiber_gen(n: u32, i: usize) -> Self {
        let mut m = Self::one(n);
        m.fiber[i - 1] = 1;
        m
    }

    /// Base variable z_i (1-based).
    pub fn base_gen(n: u32, i: usize) -> Self {
        let mut m = Self::one(n);
        m.base[i - 1] = 1;
        m
    }

    /// Form generator dz_i (1-based).
    pub fn form_gen(n: u32, i: usize) -> Self {
        let mut m = Self::one(n);
        m.forms = 1 << (i - 1);
        m
    }

    /// Total degree d = 2 nu + |fiber|.
    pub fn degree(&self) -> i64 {
        2 * self.nu as i64 + self.fiber.iter().map(|&e| e as i64).sum::<i64>()
    }

    /// Fiber degree |alpha|.
    pub fn fiber_degree(&self) -> u32 {
        self.fiber.iter().sum()
    }

    /// Base degree.
    pub fn base_degree(&self) -> u32 {
        self.base.iter().sum()
    }

    /// Form degree (number of dz factors).
    pub fn form_degree(&self) -> u32 {
        self.forms.count_ones()
    }

    /// True when the monomial carries neither fiber variables nor forms.
    pub fn is_central(&self) -> bool {
        self.fiber_degree() == 0 && self.forms == 0
    }

    /// Product of the commuting parts (nu, base, fiber add; forms wedge).
    /// Returns the sign of the form reordering, or None when the wedge dies.
    pub fn mul(&self, other: &Monomial) -> Option<(i32, Monomial)> {
        if self.forms & other.forms != 0 {
            return None;
        }
        let sign = wedge_sign(self.forms, other.forms);
        let m = Monomial {
            nu: self.nu + other.nu,
            base: self
                .base
                .iter()
                .zip(&other.base)
                .map(|(a, b)| a + b)
                .collect(),
            fiber: self
                .fiber
                .iter()
                .zip(&other.fiber)
                .map(|(a, b)| a + b)
                .collect(),
            forms: self.forms | other.forms,
        };
        Some((sign, m))
    }
}

/// Sign of sorting the concatenation (mask_a, mask_b) into ascending order,
/// assuming the masks are disjoint: (-1)^{#{(i,j) in a x b : j < i}}.
pub fn wedge_sign(a: u32, b: u32) -> i32 {
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        // bits of a strictly above j
        inversions += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Canonical order: nu power, then fiber exponents lexicographically, then
/// base exponents, then form mask. Keeps serialization bit-stable.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nu
            .cmp(&other.nu)
            .then_with(|| self.fiber.cmp(&other.fiber))
            .then_with(|| self.base.cmp(&other.base))
            .then_with(|| self.forms.cmp(&other.forms))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.nu == 1 {
            parts.push("nu".into());
        } else if self.nu > 1 {
            parts.push(format!("nu^{}", self.nu));
        }
        for (i, &e) in self.base.iter().enumerate() {
            if e == 1 {
                parts.push(format!("z{}", i + 1));
            } else if e > 1 {
                parts.push(format!("z{}^{}", i + 1, e));
            }
        }
        for (i, &e) in self.fiber.iter().enumerate() {
            if e == 1 {
                parts.push(format!("Z{}", i + 1));
            } else if e > 1 {
                parts.push(format!("Z{}^{}", i + 1, e));
            }
        }
        let mut forms = self.forms;
        while forms != 0 {
            let i = forms.trailing_zeros();
            parts.push(format!("dz{}", i + 1));
            forms &= forms - 1;
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        // dz1 ^ dz2 keeps order, dz2 ^ dz1 flips.
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        // dz1dz3 ^ dz2: dz2 passes dz3 only.
        assert_eq!(wedge_sign(0b101, 0b010), -1);
        assert_eq!(wedge_sign(0, 0b111), 1);
    }

    #[test]
    fn wedge_dies_on_repeat() {
        let n = 1;
        let a = Monomial::form_gen(n, 1);
        assert!(a.mul(&a).is_none());
    }

    #[test]
    fn degree_counts_nu_and_fiber_only() {
        let mut m = Monomial::one(2);
        m.nu = 2;
        m.fiber[0] = 1;
        m.base[3] = 7;
        m.forms = 0b1;
        assert_eq!(m.degree(), 5);
    }
}

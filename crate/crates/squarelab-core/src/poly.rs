//! Polynomials of degree at most three in the Bernoulli parameter p.

use std::fmt;
use std::ops::Add;

use crate::exact::{ExactScalar, Rational};

/// Cubic polynomial `c0 + c1 p + c2 p^2 + c3 p^3` with exact coefficients.
/// Houses the third-moment polynomial of randomized projections, which never
/// exceeds degree three.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyP {
    coeffs: [ExactScalar; 4],
}

impl PolyP {
    pub fn zero() -> Self {
        PolyP {
            coeffs: std::array::from_fn(|_| ExactScalar::zero()),
        }
    }

    pub fn from_coeffs(coeffs: [ExactScalar; 4]) -> Self {
        PolyP { coeffs }
    }

    /// `c1 p + c2 p^2`
    pub fn quadratic(c1: ExactScalar, c2: ExactScalar) -> Self {
        PolyP {
            coeffs: [ExactScalar::zero(), c1, c2, ExactScalar::zero()],
        }
    }

    /// `c1 p + c2 p^2 + c3 p^3`
    pub fn cubic(c1: ExactScalar, c2: ExactScalar, c3: ExactScalar) -> Self {
        PolyP {
            coeffs: [ExactScalar::zero(), c1, c2, c3],
        }
    }

    pub fn coeff(&self, k: usize) -> &ExactScalar {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[ExactScalar; 4] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        (0..4).rev().find(|&k| !self.coeffs[k].is_zero()).unwrap_or(0)
    }

    /// Horner evaluation at a rational point, exact.
    pub fn eval(&self, p: &Rational) -> ExactScalar {
        let ps = ExactScalar::from_rational(p.clone());
        let mut acc = self.coeffs[3].clone();
        for k in (0..3).rev() {
            acc = &(&acc * &ps) + &self.coeffs[k];
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn coeff_strings(&self) -> [String; 4] {
        std::array::from_fn(|k| self.coeffs[k].to_string())
    }
}

impl Add<&PolyP> for &PolyP {
    type Output = PolyP;
    fn add(self, rhs: &PolyP) -> PolyP {
        PolyP {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] + &rhs.coeffs[k]),
        }
    }
}

impl fmt::Display for PolyP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c0, c1, c2, c3] = &self.coeffs;
        write!(f, "({c0}) + ({c1})p + ({c2})p^2 + ({c3})p^3")
    }
}

impl fmt::Debug for PolyP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

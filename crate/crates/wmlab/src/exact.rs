//! Exact rational polynomial arithmetic for the nonanalyticity certificates:
//! Taylor coefficients of rational functions reduce to polynomial algebra
//! and power-series division over arbitrary-precision rationals.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};

pub type Rat = Ratio<BigInt>;

pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Ratio::from_integer(BigInt::from(n))
}

/// Dense polynomial with rational coefficients, ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct RatPoly(pub Vec<Rat>);

impl RatPoly {
    pub fn constant(c: Rat) -> Self {
        RatPoly(vec![c])
    }

    /// a + b·u
    pub fn linear(a: Rat, b: Rat) -> Self {
        RatPoly(vec![a, b])
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        let mut out = vec![Rat::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly(out)
    }

    pub fn pow(&self, mut e: u32) -> RatPoly {
        let mut base = self.clone();
        let mut acc = RatPoly::constant(Rat::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.0.get(k).cloned().unwrap_or_else(Rat::zero)
    }
}

/// Power-series quotient num/den to the requested number of coefficients;
/// den must have a nonzero constant term.
pub fn series_div(num: &RatPoly, den: &RatPoly, terms: usize) -> Vec<Rat> {
    assert!(!den.0.is_empty() && !den.0[0].is_zero(), "division by u");
    let mut out = Vec::with_capacity(terms);
    for k in 0..terms {
        let mut acc = num.coeff(k);
        for (j, c) in out.iter().enumerate().take(k) {
            let dk: Rat = den.coeff(k - j);
            acc -= dk * c;
        }
        out.push(acc / den.0[0].clone());
    }
    out
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space dimension of the wave map domain together with the derived
/// Sobolev order m = (d+3)/2 that the stability norms live at.
///
/// Only odd d ≥ 3 are admitted; everything downstream relies on
/// (d−1)/2, (d−3)/2 and m being integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    d: u32,
}

impl Dimension {
    pub fn new(d: u32) -> Result<Self> {
        if d < 3 || d % 2 == 0 {
            return Err(Error::InvalidDimension(d as i64));
        }
        Ok(Dimension { d })
    }

    /// Space dimension d.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Sobolev order m = (d+3)/2 of the first component.
    pub fn m(&self) -> u32 {
        (self.d + 3) / 2
    }

    pub fn d_f64(&self) -> f64 {
        self.d as f64
    }

    /// d − 2 as a float; the profile argument scale squared.
    pub fn dm2(&self) -> f64 {
        (self.d - 2) as f64
    }

    /// √(d−2), the profile argument scale.
    pub fn sqrt_dm2(&self) -> f64 {
        self.dm2().sqrt()
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={}", self.d)
    }
}

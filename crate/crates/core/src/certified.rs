use serde::{Deserialize, Serialize};

/// A floating-point value together with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

impl Certified {
    pub const fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub const fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    /// Midpoint of `[lo, hi]` with half-width as error.
    pub fn bracket(lo: f64, hi: f64) -> Self {
        Self {
            value: 0.5 * (lo + hi),
            error: 0.5 * (hi - lo).abs(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.value - self.error
    }

    pub fn hi(&self) -> f64 {
        self.value + self.error
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.error
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

impl std::ops::Add for Certified {
    type Output = Certified;

    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// Sum of nonnegative terms with a Higham-style rounding bound folded into
/// the error.
pub(crate) fn rounding_allowance(sum: f64, terms: usize) -> f64 {
    sum.abs() * terms as f64 * f64::EPSILON
}

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

pub use num_complex::Complex64;

/// Vector element type. Matrices are always real; vectors may be real or complex.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn zero() -> Self {
        Self::default()
    }

    /// Squared magnitude.
    fn norm_sqr(self) -> f64;

    /// Sum of real and imaginary parts, used for checksums.
    fn component_sum(self) -> f64;

    /// Bytes per element on the wire.
    const BYTES: usize;
}

impl Scalar for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn component_sum(self) -> f64 {
        self
    }
    const BYTES: usize = 8;
}

impl Scalar for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn component_sum(self) -> f64 {
        self.re + self.im
    }
    const BYTES: usize = 16;
}

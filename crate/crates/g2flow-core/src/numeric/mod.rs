//! Small numerical toolkit: finite differences, an embedded Runge–Kutta
//! integrator with dense output and events, adaptive quadrature, bracketed
//! root finding and local polynomial interpolation.

use core::fmt;

pub mod fd;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;

#[derive(Debug, Clone, PartialEq)]
pub enum NumericError {
    GridTooShort { needed: usize, got: usize },
    LengthMismatch { left: usize, right: usize },
    NonMonotoneGrid { index: usize },
    NoSignChange { a: f64, b: f64 },
    MaxIterations,
    StepSizeUnderflow { t: f64 },
    NonFinite { t: f64 },
    Quadrature { estimate: f64, error: f64 },
    EmptyInterval,
}

impl fmt::Display for NumericError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use NumericError::*;
        match self {
            GridTooShort { needed, got } => write!(f, "grid has {got} points, need at least {needed}"),
            LengthMismatch { left, right } => write!(f, "array lengths differ: {left} vs {right}"),
            NonMonotoneGrid { index } => write!(f, "grid not strictly increasing at index {index}"),
            NoSignChange { a, b } => write!(f, "no sign change on [{a}, {b}]"),
            MaxIterations => write!(f, "iteration limit reached"),
            StepSizeUnderflow { t } => write!(f, "step size underflow at t = {t}"),
            NonFinite { t } => write!(f, "non-finite state at t = {t}"),
            Quadrature { estimate, error } => {
                write!(f, "quadrature did not converge (estimate {estimate}, error {error:e})")
            }
            EmptyInterval => write!(f, "empty interval"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NumericError {}

pub(crate) fn check_grid(t: &[f64]) -> Result<(), NumericError> {
    for i in 1..t.len() {
        if !(t[i] > t[i - 1]) {
            return Err(NumericError::NonMonotoneGrid { index: i });
        }
    }
    Ok(())
}

/// `n` equally spaced points on [a, b], both ends included.
pub fn linspace(a: f64, b: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            let mut v: alloc::vec::Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

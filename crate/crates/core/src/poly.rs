//! Polynomials in normalized time `s = t / t_f` with exact time derivatives.

use std::ops::{Add, Mul};

use thiserror::Error;

pub const MAX_DEGREE: usize = 11;
pub const MAX_DERIVATIVE: u8 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("non-finite coefficient c_{0}")]
    NonFinite(usize),
    #[error("duration must be positive, got {0} s")]
    InvalidDuration(f64),
    #[error("derivative order {0} not supported (max {MAX_DERIVATIVE})")]
    OrderTooHigh(u8),
}

/// `p(t) = sum_j c_j (t / t_f)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coefficients: Vec<f64>,
    duration: f64,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>, duration: f64) -> Result<Self, PolyError> {
        if coefficients.len() > MAX_DEGREE + 1 {
            return Err(PolyError::DegreeTooHigh(coefficients.len() - 1));
        }
        if let Some(j) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite(j));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(PolyError::InvalidDuration(duration));
        }
        Ok(Self { coefficients, duration })
    }

    pub fn zero(duration: f64) -> Self {
        Self {
            coefficients: vec![0.0],
            duration,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// `d^order p / dt^order` at time `t`.
    pub fn eval(&self, t: f64, order: u8) -> Result<f64, PolyError> {
        if order > MAX_DERIVATIVE {
            return Err(PolyError::OrderTooHigh(order));
        }
        Ok(self.eval_unchecked(t, order))
    }

    pub(crate) fn eval_unchecked(&self, t: f64, order: u8) -> f64 {
        self.eval_normalized(t / self.duration, order) / self.duration.powi(order as i32)
    }

    /// Derivative with respect to `s`, evaluated at `s`.
    pub fn eval_normalized(&self, s: f64, order: u8) -> f64 {
        let r = order as usize;
        if self.coefficients.len() <= r {
            return 0.0;
        }
        let mut acc = 0.0;
        for (j, c) in self.coefficients.iter().enumerate().skip(r).rev() {
            acc = acc * s + c * falling_factorial(j, r);
        }
        acc
    }

    /// Value and first three time derivatives.
    pub fn jet(&self, t: f64) -> [f64; 4] {
        [
            self.eval_unchecked(t, 0),
            self.eval_unchecked(t, 1),
            self.eval_unchecked(t, 2),
            self.eval_unchecked(t, 3),
        ]
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(
            self.duration, other.duration,
            "polynomials over different durations cannot be combined"
        );
        let n = self.coefficients.len().max(other.coefficients.len());
        let coefficients = (0..n)
            .map(|j| {
                self.coefficients.get(j).copied().unwrap_or(0.0)
                    + sign * other.coefficients.get(j).copied().unwrap_or(0.0)
            })
            .collect();
        Self {
            coefficients,
            duration: self.duration,
        }
    }
}

/// `j! / (j - r)!`, i.e. the coefficient of `s^(j-r)` in `d^r s^j / ds^r`.
pub(crate) fn falling_factorial(j: usize, r: usize) -> f64 {
    if r > j {
        return 0.0;
    }
    ((j - r + 1)..=j).fold(1.0, |acc, k| acc * k as f64)
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1.0)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: f64) -> Polynomial {
        Polynomial {
            coefficients: self.coefficients.iter().map(|c| c * rhs).collect(),
            duration: self.duration,
        }
    }
}

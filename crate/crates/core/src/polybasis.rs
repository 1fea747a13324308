//! Polynomial bases for the least-squares fit.
//!
//! Both families are evaluated by their three-term recurrence. The pair of
//! running values is renormalized by powers of two whenever it grows past
//! `2^RESCALE_BITS`, with the removed factor kept in a log accumulator, so
//! no intermediate value overflows even where the final one would.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

const RESCALE_BITS: i32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `H_k(x/scale)` with `∫ H_j H_k exp(-x^2) dx = delta_jk`.
    HermiteOrthonormal,
    /// Chebyshev `T_k(x/scale)`.
    ScaledChebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub kind: BasisKind,
    /// Argument scaling; polynomials are evaluated at `x / scale`.
    pub scale: f64,
    pub max_degree: usize,
}

impl BasisDescriptor {
    pub fn new(kind: BasisKind, scale: f64, max_degree: usize) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParams(format!("basis scale must be > 0, got {scale}")));
        }
        Ok(BasisDescriptor { kind, scale, max_degree })
    }

    pub fn hermite(max_degree: usize) -> Self {
        BasisDescriptor { kind: BasisKind::HermiteOrthonormal, scale: 1.0, max_degree }
    }

    fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.max_degree {
            Err(Error::DegreeOutOfRange { degree, max: self.max_degree })
        } else {
            Ok(())
        }
    }
}

/// Multiplicative window `exp(-|x/scale|^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub alpha: f64,
    pub scale: f64,
}

impl Weight {
    pub fn new(alpha: f64, scale: f64) -> Self {
        Weight { alpha, scale }
    }

    /// `|x/scale|^alpha`, the negated log of the weight.
    pub fn exponent(&self, x: f64) -> f64 {
        (x / self.scale).abs().powf(self.alpha)
    }

    pub fn value(&self, x: f64) -> f64 {
        (-self.exponent(x)).exp()
    }
}

/// Scalars the recurrences run over: `f64` and `Complex64`.
pub trait BasisScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl BasisScalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl BasisScalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

/// Runs the recurrence of `kind` at `y`, calling `emit(k, value, log_scale)`
/// with `P_k(y) = value * exp(log_scale)` for `k = 0..=up_to`.
fn run_recurrence<T: BasisScalar>(
    kind: BasisKind,
    y: T,
    up_to: usize,
    mut log_scale: f64,
    mut emit: impl FnMut(usize, T, f64),
) {
    let p0 = match kind {
        BasisKind::HermiteOrthonormal => PI.powf(-0.25),
        BasisKind::ScaledChebyshev => 1.0,
    };
    let mut prev = T::from_real(0.0);
    let mut cur = T::from_real(p0);
    emit(0, cur, log_scale);
    let big = 2f64.powi(RESCALE_BITS);
    let shrink = 2f64.powi(-RESCALE_BITS);
    for k in 0..up_to {
        let next = match kind {
            BasisKind::HermiteOrthonormal => {
                let kf = k as f64;
                y * cur * (2.0 / (kf + 1.0)).sqrt() - prev * (kf / (kf + 1.0)).sqrt()
            }
            BasisKind::ScaledChebyshev => {
                if k == 0 {
                    y * cur
                } else {
                    y * cur * 2.0 - prev
                }
            }
        };
        prev = cur;
        cur = next;
        if cur.magnitude() > big {
            cur = cur * shrink;
            prev = prev * shrink;
            log_scale += RESCALE_BITS as f64 * LN_2;
        }
        emit(k + 1, cur, log_scale);
    }
}

fn unscale<T: BasisScalar>(value: T, log_scale: f64) -> T {
    if log_scale == 0.0 {
        value
    } else {
        value * log_scale.exp()
    }
}

/// `P_degree(x)` of the basis.
pub fn eval_basis<T: BasisScalar>(desc: &BasisDescriptor, degree: usize, x: T) -> Result<T> {
    desc.check_degree(degree)?;
    let y = x * (1.0 / desc.scale);
    let mut out = T::from_real(0.0);
    run_recurrence(desc.kind, y, degree, 0.0, |k, v, s| {
        if k == degree {
            out = unscale(v, s);
        }
    });
    Ok(out)
}

/// `[P_0(x), ..., P_up_to(x)]`.
pub fn eval_all<T: BasisScalar>(desc: &BasisDescriptor, x: T, up_to: usize) -> Result<Vec<T>> {
    desc.check_degree(up_to)?;
    let y = x * (1.0 / desc.scale);
    let mut out = Vec::with_capacity(up_to + 1);
    run_recurrence(desc.kind, y, up_to, 0.0, |_, v, s| out.push(unscale(v, s)));
    Ok(out)
}

/// `sum_k coefficients[k] P_k(x)`.
pub fn eval_series<T: BasisScalar>(desc: &BasisDescriptor, coefficients: &[f64], x: T) -> Result<T> {
    if coefficients.is_empty() {
        return Ok(T::from_real(0.0));
    }
    let up_to = coefficients.len() - 1;
    desc.check_degree(up_to)?;
    let y = x * (1.0 / desc.scale);
    let mut sum = T::from_real(0.0);
    run_recurrence(desc.kind, y, up_to, 0.0, |k, v, s| {
        sum = sum + unscale(v, s) * coefficients[k];
    });
    Ok(sum)
}

/// Design-matrix row `[w(x) P_0(x), ..., w(x) P_up_to(x)]`. The weight
/// enters as the starting log scale, so large `|x|` yields clean underflow
/// to zero instead of `0 * inf`.
pub fn eval_weighted_row(
    desc: &BasisDescriptor,
    x: f64,
    weight: &Weight,
    up_to: usize,
) -> Result<Vec<f64>> {
    desc.check_degree(up_to)?;
    let mut out = Vec::with_capacity(up_to + 1);
    run_recurrence(desc.kind, x / desc.scale, up_to, -weight.exponent(x), |_, v, s| {
        out.push(v * s.exp())
    });
    Ok(out)
}

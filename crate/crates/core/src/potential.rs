//! Ullman equilibrium density for the weight `exp(-|x|^alpha)`, its
//! logarithmic potential, and the exponent functions built from it.
//!
//! The density is written as `v(t) = sqrt(1 - t^2) g(t)` with
//!
//! ```text
//! g(t) = (alpha/pi) ∫_0^1 y(u)^(alpha-2) du,   y(u) = sqrt(t^2 + u^2 (1 - t^2)),
//! ```
//!
//! which removes the inverse square-root singularity of the defining
//! integral. Potentials are integrated in `t = cos(theta)`, where the
//! density becomes `sin(theta)^2 g(cos theta)` and only the logarithm (and,
//! for non-even `alpha`, a mild kink of `g` at `t = 0`) needs break points.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalars::{beta_alpha, robin_constant, DegreePlan};

const DEFAULT_TOLERANCE: f64 = 1e-10;
const DEFAULT_MAX_PANELS: usize = 4000;
const INNER_REL_TOL: f64 = 1e-14;

/// How [`PotentialEvaluator::delta`] computes `delta` off the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMethod {
    /// Closed form for `alpha = 2`, quadrature otherwise.
    Auto,
    /// Always integrate.
    Quadrature,
}

/// Evaluates the Ullman density and its potential for one `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct PotentialEvaluator {
    alpha: f64,
    tolerance: f64,
    max_panels: usize,
    method: DeltaMethod,
}

impl PotentialEvaluator {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 2.0) {
            return Err(Error::InvalidParams(format!("alpha must be >= 2, got {alpha}")));
        }
        Ok(PotentialEvaluator {
            alpha,
            tolerance: DEFAULT_TOLERANCE,
            max_panels: DEFAULT_MAX_PANELS,
            method: DeltaMethod::Auto,
        })
    }

    /// Absolute tolerance for potentials.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        assert!(tolerance > 0.0, "tolerance must be positive");
        self.tolerance = tolerance;
        self
    }

    pub fn with_method(mut self, method: DeltaMethod) -> Self {
        self.method = method;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `g(t) = v(t) / sqrt(1 - t^2)`.
    fn density_factor(&self, t: f64) -> f64 {
        let power = self.alpha - 2.0;
        if power == 0.0 {
            return 2.0 / PI;
        }
        let t2 = t * t;
        let c = 1.0 - t2;
        let inner = quadrature::integrate(
            |u: f64| (t2 + u * u * c).powf(0.5 * power),
            0.0,
            1.0,
            &[],
            1e-16,
            INNER_REL_TOL,
            200,
        );
        self.alpha / PI * inner.value
    }

    /// Ullman density at `t`, `|t| <= 1`.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t.abs() <= 1.0) {
            return Err(Error::Domain(format!("Ullman density needs |t| <= 1, got {t}")));
        }
        Ok((1.0 - t * t).sqrt() * self.density_factor(t))
    }

    /// Total mass of the density; equals 1 up to quadrature error.
    pub fn mass(&self) -> f64 {
        quadrature::integrate(
            |theta: f64| {
                let s = theta.sin();
                s * s * self.density_factor(theta.cos())
            },
            0.0,
            PI,
            &[FRAC_PI_2],
            self.tolerance * 1e-2,
            0.0,
            self.max_panels,
        )
        .value
    }

    /// `U(z) = ∫ log|z - t| v(t) dt` by adaptive quadrature.
    pub fn log_potential(&self, z: Complex64) -> f64 {
        let (x, y) = (z.re, z.im);
        let mut breaks = vec![FRAC_PI_2];
        if x.abs() < 1.0 {
            breaks.push(x.acos());
        }
        let log_dist = |theta: f64| {
            // z - cos(theta), written to avoid cancellation near t = ±1.
            let dx = if x >= 0.0 {
                let h = (0.5 * theta).sin();
                (x - 1.0) + 2.0 * h * h
            } else {
                let h = (0.5 * theta).cos();
                (x + 1.0) - 2.0 * h * h
            };
            dx.hypot(y).ln()
        };
        quadrature::integrate(
            |theta: f64| {
                let s = theta.sin();
                if s == 0.0 {
                    return 0.0;
                }
                log_dist(theta) * s * s * self.density_factor(theta.cos())
            },
            0.0,
            PI,
            &breaks,
            self.tolerance,
            0.0,
            self.max_panels,
        )
        .value
    }

    /// Right-hand side of the Frostman identity, `|beta x|^alpha + F_alpha`.
    pub fn frostman_value(&self, x: f64) -> f64 {
        (beta_alpha(self.alpha) * x).abs().powf(self.alpha) + robin_constant(self.alpha)
    }

    /// `delta(z) = U(z) - F_alpha`. Real points of `[-1, 1]` use the
    /// Frostman identity exactly.
    pub fn delta(&self, z: Complex64) -> f64 {
        if z.im == 0.0 && z.re.abs() <= 1.0 {
            return (beta_alpha(self.alpha) * z.re).abs().powf(self.alpha);
        }
        if self.method == DeltaMethod::Auto && self.alpha == 2.0 {
            return delta_alpha2_closed_form(z);
        }
        self.delta_quadrature(z)
    }

    /// `delta` through the potential integral, never the closed form.
    pub fn delta_quadrature(&self, z: Complex64) -> f64 {
        self.log_potential(z) + 1.0 / self.alpha + LN_2
    }
}

/// Ullman density `v_alpha(t)`.
pub fn ullman_density(alpha: f64, t: f64) -> Result<f64> {
    PotentialEvaluator::new(alpha)?.density(t)
}

/// Logarithmic potential `U(alpha; z)` at the default tolerance.
pub fn log_potential(alpha: f64, z: Complex64) -> Result<f64> {
    Ok(PotentialEvaluator::new(alpha)?.log_potential(z))
}

/// `delta(alpha; z) = U(z) - F_alpha`.
pub fn delta(alpha: f64, z: Complex64) -> Result<f64> {
    Ok(PotentialEvaluator::new(alpha)?.delta(z))
}

/// `sqrt(z^2 - 1)` on the branch with `sqrt(z^2 - 1)/z -> 1` at infinity,
/// cut along `[-1, 1]`.
pub fn sqrt_z2_minus_1(z: Complex64) -> Complex64 {
    (z - 1.0).sqrt() * (z + 1.0).sqrt()
}

/// `delta` for `alpha = 2`:
/// `log|z + sqrt(z^2-1)| + Re(z^2 - z sqrt(z^2-1))`.
///
/// Uses `z^2 - z s = z / (z + s)` (since `(z - s)(z + s) = 1`) so the real
/// part does not cancel for large `|z|`.
pub fn delta_alpha2_closed_form(z: Complex64) -> f64 {
    let s = sqrt_z2_minus_1(z);
    let w = z + s;
    w.norm().ln() + (z / w).re
}

/// Hölder exponent `gamma(z) = 1 - delta(z)/q` in the rescaled variable
/// `z / a_n`.
pub fn gamma_exponent(plan: &DegreePlan, z: Complex64) -> Result<f64> {
    let eval = PotentialEvaluator::new(plan.params.alpha)?;
    Ok(1.0 - eval.delta(z) / plan.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{degree_plan, ProblemParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn semicircle_density() {
        for &t in &[-1.0, -0.7, 0.0, 0.2, 0.99, 1.0] {
            let v = ullman_density(2.0, t).unwrap();
            assert!((v - 2.0 / PI * (1.0 - t * t).sqrt()).abs() < 1e-15);
        }
        assert_eq!(ullman_density(2.0, 1.0).unwrap(), 0.0);
        assert!(ullman_density(2.0, 1.01).is_err());
    }

    #[test]
    fn density_alpha4_oracles() {
        // Closed form (4/(3 pi)) (1 + 2 t^2) sqrt(1 - t^2).
        let t: f64 = 0.3;
        let closed = 4.0 / (3.0 * PI) * (1.0 + 2.0 * t * t) * (1.0 - t * t).sqrt();
        // Independent route: y = sqrt(t^2 + s^2), s in [0, sqrt(1 - t^2)].
        let top = (1.0 - t * t).sqrt();
        let alt = 4.0 / PI
            * quadrature::integrate(|s: f64| t * t + s * s, 0.0, top, &[], 1e-16, 1e-15, 50).value;
        let v = ullman_density(4.0, t).unwrap();
        assert!((v - closed).abs() < 1e-14);
        assert!((v - alt).abs() < 1e-14);
    }

    #[test]
    fn density_even_and_nonnegative() {
        let eval = PotentialEvaluator::new(3.0).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let a = eval.density(t).unwrap();
            let b = eval.density(-t).unwrap();
            assert!(a >= 0.0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn frostman_points() {
        let eval = PotentialEvaluator::new(2.0).unwrap();
        let f2 = 0.5f64.ln() - 0.5;
        assert!((eval.log_potential(c(0.0, 0.0)) - f2).abs() < 1e-9);
        assert!((eval.log_potential(c(1.0, 0.0)) - (1.0 + f2)).abs() < 1e-9);
        assert!((eval.delta_quadrature(c(0.5, 0.0)) - 0.25).abs() < 1e-9);
        assert_eq!(eval.delta(c(0.5, 0.0)), 0.25);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let eval = PotentialEvaluator::new(2.0).unwrap();
        let z = c(3.0, 0.0);
        let s8 = 8f64.sqrt();
        let expected = (3.0 + s8).ln() + (9.0 - 3.0 * s8);
        assert!((delta_alpha2_closed_form(z) - expected).abs() < 1e-12);
        assert!((eval.delta_quadrature(z) - expected).abs() < 1e-8);
        for &z in &[c(-1.2, 0.3), c(0.0, 1.5), c(5.0, -4.0), c(-0.3, -0.05)] {
            let d = delta_alpha2_closed_form(z) - eval.delta_quadrature(z);
            assert!(d.abs() < 1e-8, "z = {z}: {d}");
        }
    }

    #[test]
    fn branch_is_asymptotic_to_z() {
        for &z in &[c(1e4, 0.0), c(-1e4, 0.0), c(0.0, 1e4), c(3e3, -7e3)] {
            let r = sqrt_z2_minus_1(z) / z;
            assert!((r - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn delta_symmetry_and_origin() {
        let eval = PotentialEvaluator::new(3.0).unwrap();
        assert_eq!(eval.delta(c(0.0, 0.0)), 0.0);
        let z = c(1.3, 0.7);
        let d = eval.delta(z);
        assert!((d - eval.delta(-z)).abs() < 1e-12);
        assert!((d - eval.delta(z.conj())).abs() < 1e-12);
    }

    #[test]
    fn gamma_exponent_basics() {
        let p = ProblemParams::new(2.0, 0.3 * 2f64.sqrt(), 1.0).unwrap();
        let plan = degree_plan(&p, 1e-5).unwrap();
        assert_eq!(gamma_exponent(&plan, c(0.0, 0.0)).unwrap(), 1.0);
        let x = 0.6;
        let g = gamma_exponent(&plan, c(x, 0.0)).unwrap();
        assert!((g - (1.0 - x * x / plan.q)).abs() < 1e-15);
        // decreasing along a ray
        let mut prev = 2.0;
        for i in 0..20 {
            let r = 0.25 * i as f64;
            let g = gamma_exponent(&plan, c(r * 0.6, r * 0.8)).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }
}

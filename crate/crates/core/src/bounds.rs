//! Pointwise error envelope, region thresholds, and the dark object that
//! witnesses the envelope from below.
//!
//! All points `z` are in data units. With `s` the pipeline's unit scale and
//! `t = z/s`, the envelope is
//!
//! ```text
//! eps * exp(|t|^alpha)                  t real, |t| <= a_n
//! eps^(1 - delta(t / a_n) / q)          |t| <= r_n otherwise
//! exp(tau' |t|^lambda)                  |t| > r_n
//! ```
//!
//! which for the Hermite pipeline reads `eps e^{z^2/2}`, then
//! `eps^(1 - delta(z/sqrt(2n))/q)` up to `|z| = n/tau`, then `e^{tau|z|}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::fitting::Pipeline;
use crate::polybasis::{eval_series, eval_weighted_row, BasisDescriptor, Weight};
use crate::potential::PotentialEvaluator;
use crate::quadrature::GaussHermite;
use crate::scalars::{ln_gamma, q_from_log, DegreePlan, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Approximation,
    Extrapolation,
    Forbidden,
}

impl RegionLabel {
    /// 1, 2 or 3.
    pub fn index(&self) -> u8 {
        match self {
            RegionLabel::Approximation => 1,
            RegionLabel::Extrapolation => 2,
            RegionLabel::Forbidden => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundProfile {
    pub plan: DegreePlan,
    pub pipeline: Pipeline,
    pub potential: PotentialEvaluator,
}

impl BoundProfile {
    pub fn new(plan: DegreePlan, pipeline: Pipeline) -> Result<Self> {
        let potential = PotentialEvaluator::new(plan.params.alpha)?;
        Ok(BoundProfile { plan, pipeline, potential })
    }

    /// Edge of the approximation region, `s a_n`.
    pub fn window_edge(&self) -> f64 {
        self.pipeline.unit_scale() * self.plan.a_n
    }

    /// Edge of the forbidden region, `s r_n`.
    pub fn forbidden_edge(&self) -> f64 {
        self.pipeline.unit_scale() * self.plan.r_n
    }

    pub fn region(&self, z: Complex64) -> RegionLabel {
        let r = z.norm();
        if z.im == 0.0 && r <= self.window_edge() {
            RegionLabel::Approximation
        } else if r <= self.forbidden_edge() {
            RegionLabel::Extrapolation
        } else {
            RegionLabel::Forbidden
        }
    }

    /// `gamma(z) = 1 - delta(z / (s a_n)) / q`.
    pub fn gamma(&self, z: Complex64) -> f64 {
        1.0 - self.potential.delta(z / self.window_edge()) / self.plan.q
    }

    /// Region and natural log of the envelope at `z`.
    pub fn log_envelope(&self, z: Complex64) -> (RegionLabel, f64) {
        let p = &self.plan.params;
        let t = z.norm() / self.pipeline.unit_scale();
        let log_eps = self.plan.eps.ln();
        let region = self.region(z);
        let value = match region {
            RegionLabel::Approximation => log_eps + t.powf(p.alpha),
            RegionLabel::Extrapolation => self.gamma(z) * log_eps,
            RegionLabel::Forbidden => p.tau * t.powf(p.lambda),
        };
        (region, value)
    }

    /// Region and envelope value at `z`.
    pub fn envelope(&self, z: Complex64) -> (RegionLabel, f64) {
        let (region, log) = self.log_envelope(z);
        (region, log.exp())
    }
}

fn hermite_params(tau: f64) -> Result<ProblemParams> {
    ProblemParams::new(2.0, tau * SQRT_2, 1.0)
}

/// Solves `L = a q(L)` for `L = log(1/eps) > 0`, Hermite pipeline with data
/// type `tau`. Plain iteration contracts (its derivative at the fixed point
/// is `1/(1 + W)`); bisection is the fallback.
pub fn solve_threshold(a: f64, tau: f64) -> Result<f64> {
    let params = hermite_params(tau)?;
    let h = |l: f64| -> Result<f64> { Ok(l - a * q_from_log(&params, l)?) };
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("threshold coefficient must be > 0, got {a}")));
    }

    let mut l = a;
    for _ in 0..200 {
        let next = a * q_from_log(&params, l)?;
        if !(next > 0.0) {
            break;
        }
        let done = (next - l).abs() <= 1e-14 * next;
        l = next;
        if done {
            return Ok(l);
        }
    }

    // Bisection: h < 0 near 0 exactly when a fixed point exists.
    let mut lo = 1e-12;
    if h(lo)? >= 0.0 {
        return Err(Error::NoFixedPoint { z0: a });
    }
    let mut hi = a.max(1.0);
    while h(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoFixedPoint { z0: a });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Perturbation levels at which `z0` leaves the approximation region
/// (`eps = exp(-q z0^2/2)`) and the extrapolation region
/// (`eps = exp(-q tau z0)`), for the Hermite pipeline with type `tau`.
pub fn region_thresholds(z0: f64, tau: f64) -> Result<(f64, f64)> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(Error::Domain(format!("z0 must be > 0, got {z0}")));
    }
    let l12 = solve_threshold(0.5 * z0 * z0, tau).map_err(|e| relabel(e, z0))?;
    let l23 = solve_threshold(tau * z0, tau).map_err(|e| relabel(e, z0))?;
    Ok(((-l12).exp(), (-l23).exp()))
}

fn relabel(e: Error, z0: f64) -> Error {
    match e {
        Error::NoFixedPoint { .. } => Error::NoFixedPoint { z0 },
        other => other,
    }
}

/// Which coefficient set a [`DarkObject`] evaluates with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    /// The closed form as printed matched the projection.
    Printed,
    /// The closed-form projection `π^{1/4} e^{τ²/4} τ^k (1+(-1)^k) / (2 sqrt(2^k k!))`,
    /// confirmed by quadrature.
    Projection,
    /// Raw Gauss-Hermite projections.
    Quadrature,
}

/// Agreement between the coefficient routes, on well-resolved coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCheck {
    pub source: CoefficientSource,
    /// Max relative gap between printed closed form and quadrature.
    pub printed_vs_quadrature: f64,
    /// Max relative gap between the projection closed form and quadrature.
    pub projection_vs_quadrature: f64,
    /// Median of printed / quadrature.
    pub printed_ratio: f64,
    pub compared: usize,
}

const AGREEMENT: f64 = 1e-8;
/// Coefficients below this fraction of `c_0` are at quadrature noise level.
const RESOLVED: f64 = 1e-6;

/// `cosh(tau z) - sum_{k<n} c_k H_k(z)` in the orthonormal Hermite basis.
#[derive(Debug, Clone)]
pub struct DarkObject {
    pub tau: f64,
    pub n: usize,
    pub coefficients: Vec<f64>,
    pub check: CoefficientCheck,
    basis: Option<BasisDescriptor>,
}

/// `log(π^{1/4} e^{τ²/4} τ^k / sqrt(2^k k!))`.
fn log_coefficient_magnitude(tau: f64, k: usize) -> f64 {
    let kf = k as f64;
    0.25 * PI.ln() + 0.25 * tau * tau + kf * tau.ln()
        - 0.5 * (kf * std::f64::consts::LN_2 + ln_gamma(kf + 1.0))
}

/// Coefficient `k` as printed: `e^{τ²/4} τ^k π^{1/4} (1+(-1)^k) / sqrt(2^k k!)`.
pub fn printed_coefficient(tau: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 * log_coefficient_magnitude(tau, k).exp()
    }
}

/// `∫ cosh(tau x) H_k(x) e^{-x^2} dx` in closed form.
pub fn projection_coefficient(tau: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        log_coefficient_magnitude(tau, k).exp()
    }
}

/// Projections of `cosh(tau x)` on `H_0..H_{n-1}` by an `nodes`-point
/// Gauss-Hermite rule.
pub fn quadrature_coefficients(tau: f64, n: usize, nodes: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let rule = GaussHermite::new(nodes);
    let desc = BasisDescriptor::hermite(n - 1);
    // e^{-x^2} H_k(x) = e^{-x^2/2} psi_k(x), psi_k the Hermite function.
    let half = Weight::new(2.0, SQRT_2);
    let mut c = vec![0.0; n];
    for (&x, &w) in rule.nodes.iter().zip(&rule.scaled_weights) {
        let psi = eval_weighted_row(&desc, x, &half, n - 1).expect("degree within basis");
        let f = w * (-0.5 * x * x).exp() * (tau * x).cosh();
        for (ck, pk) in c.iter_mut().zip(psi) {
            *ck += f * pk;
        }
    }
    c
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

impl DarkObject {
    pub fn new(tau: f64, n: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParams(format!("tau must be > 0, got {tau}")));
        }
        let printed: Vec<f64> = (0..n).map(|k| printed_coefficient(tau, k)).collect();
        let closed: Vec<f64> = (0..n).map(|k| projection_coefficient(tau, k)).collect();
        let quad = quadrature_coefficients(tau, n, (n + 60).max(80));

        let floor = RESOLVED * quad.first().map_or(0.0, |c| c.abs());
        let resolved: Vec<usize> = (0..n).filter(|&k| k % 2 == 0 && quad[k].abs() > floor).collect();
        let rel = |a: &[f64]| {
            resolved
                .iter()
                .map(|&k| ((a[k] - quad[k]) / quad[k]).abs())
                .fold(0.0, f64::max)
        };
        let printed_vs_quadrature = rel(&printed);
        let projection_vs_quadrature = rel(&closed);
        let printed_ratio = median(resolved.iter().map(|&k| printed[k] / quad[k]).collect());

        let (source, coefficients) = if printed_vs_quadrature <= AGREEMENT {
            (CoefficientSource::Printed, printed)
        } else if projection_vs_quadrature <= AGREEMENT {
            (CoefficientSource::Projection, closed)
        } else {
            (CoefficientSource::Quadrature, quad)
        };
        Ok(DarkObject {
            tau,
            n,
            coefficients,
            check: CoefficientCheck {
                source,
                printed_vs_quadrature,
                projection_vs_quadrature,
                printed_ratio,
                compared: resolved.len(),
            },
            basis: n.checked_sub(1).map(BasisDescriptor::hermite),
        })
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        let head = match &self.basis {
            Some(desc) => eval_series(desc, &self.coefficients, z).expect("degree within basis"),
            None => Complex64::new(0.0, 0.0),
        };
        (z * self.tau).cosh() - head
    }
}

/// Dark object for a Hermite-pipeline plan, at data type `tau`.
pub fn dark_object(tau: f64, plan: &DegreePlan, z: Complex64) -> Result<Complex64> {
    Ok(DarkObject::new(tau, plan.n)?.value(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::Pipeline;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sample_profile() -> BoundProfile {
        let params = ProblemParams::new(2.0, 0.3, 1.0).unwrap();
        let plan = Pipeline::Hermite.plan(&params, 1e-5).unwrap();
        BoundProfile::new(plan, Pipeline::Hermite).unwrap()
    }

    #[test]
    fn hermite_envelope_cases() {
        let p = sample_profile();
        assert!((p.window_edge() - 10f64.sqrt()).abs() < 1e-14);
        assert!((p.forbidden_edge() - 5.0 / 0.3).abs() < 1e-12);
        let (r, v) = p.envelope(c(0.0));
        assert_eq!(r, RegionLabel::Approximation);
        assert!((v - 1e-5).abs() < 1e-20);
        let (r, v) = p.envelope(c(2.5));
        assert_eq!(r, RegionLabel::Approximation);
        assert!((v - 1e-5 * (2.5f64 * 2.5 / 2.0).exp()).abs() < 1e-15 * v);
        let (r, v) = p.envelope(c(-20.0));
        assert_eq!(r, RegionLabel::Forbidden);
        assert!((v - 6f64.exp()).abs() < 1e-12 * v);
        assert_eq!(p.region(Complex64::new(1.0, 1.0)), RegionLabel::Extrapolation);
        let z = c(8.0);
        let expected = 1e-5f64.powf(1.0 - crate::potential::delta_alpha2_closed_form(c(8.0 / 10f64.sqrt())) / p.plan.q);
        assert!((p.envelope(z).1 - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn generic_envelope_past_forbidden_edge() {
        let params = ProblemParams::new(3.0, 0.7, 2.0).unwrap();
        let plan = Pipeline::Generic.plan(&params, 1e-6).unwrap();
        let p = BoundProfile::new(plan, Pipeline::Generic).unwrap();
        let z = c(plan.r_n * (1.0 + 1e-9));
        let (r, v) = p.envelope(z);
        assert_eq!(r, RegionLabel::Forbidden);
        assert!((v - (0.7 * z.re * z.re).exp()).abs() < 1e-12 * v);
    }

    #[test]
    fn threshold_residuals() {
        let params = hermite_params(0.15).unwrap();
        let (e12, e23) = region_thresholds(4.0, 0.15).unwrap();
        let q12 = q_from_log(&params, -e12.ln()).unwrap();
        assert!((e12.ln() + q12 * 8.0).abs() < 1e-8);
        let q23 = q_from_log(&params, -e23.ln()).unwrap();
        assert!((e23.ln() + q23 * 0.15 * 4.0).abs() < 1e-8);
        assert!(region_thresholds(-1.0, 0.15).is_err());
    }

    #[test]
    fn printed_coefficients_are_twice_the_projection() {
        let d = DarkObject::new(0.3, 12).unwrap();
        assert_eq!(d.check.source, CoefficientSource::Projection);
        assert!((d.check.printed_ratio - 2.0).abs() < 1e-8);
        assert!(d.check.projection_vs_quadrature < 1e-10);
        assert!(d.coefficients.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }

    #[test]
    fn dark_object_even_and_real() {
        let d = DarkObject::new(0.3, 5).unwrap();
        for &x in &[0.0, 0.7, 3.0, 12.0] {
            let a = d.value(c(x));
            let b = d.value(c(-x));
            assert_eq!(a.im, 0.0);
            assert!((a.re - b.re).abs() <= 1e-14 * a.re.abs().max(1e-300) + 1e-300);
        }
        assert_eq!(DarkObject::new(0.3, 0).unwrap().value(c(1.0)), c(0.3f64.cosh()));
    }
}

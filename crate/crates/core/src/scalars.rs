//! Closed-form constants of the weighted approximation problem and the
//! Lambert-W degree rule.
//!
//! Everything downstream (grids, bounds, experiments) takes its numbers from
//! a [`DegreePlan`], which is produced here from a [`ProblemParams`] triple and
//! a perturbation level `eps`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2};

use crate::error::{Error, Result};

const LAMBERT_MAX_ITER: usize = 50;
const LAMBERT_REL_STEP: f64 = 1e-15;

/// Window exponent `alpha`, type `tau` and order `lambda` of the function
/// class being extrapolated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl ProblemParams {
    pub fn new(alpha: f64, tau: f64, lambda: f64) -> Result<Self> {
        let p = ProblemParams { alpha, tau, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ProblemParams { alpha, tau, lambda } = *self;
        if !(alpha.is_finite() && tau.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if alpha < 2.0 {
            return Err(Error::InvalidParams(format!("alpha must be >= 2, got {alpha}")));
        }
        if lambda < 1.0 {
            return Err(Error::InvalidParams(format!("lambda must be >= 1, got {lambda}")));
        }
        if alpha <= lambda {
            return Err(Error::InvalidParams(format!(
                "alpha must exceed lambda, got alpha = {alpha}, lambda = {lambda}"
            )));
        }
        if tau <= 0.0 {
            return Err(Error::InvalidParams(format!("tau must be > 0, got {tau}")));
        }
        Ok(())
    }

    /// `mu = 1/lambda - 1/alpha`, the super-geometric decay exponent of the
    /// best approximation error.
    pub fn mu(&self) -> f64 {
        1.0 / self.lambda - 1.0 / self.alpha
    }
}

/// All derived quantities for one perturbation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreePlan {
    pub params: ProblemParams,
    pub eps: f64,
    /// Lambert-W scale `q(eps)`.
    pub q: f64,
    /// Polynomial degree.
    pub n: usize,
    /// Mhaskar-Rakhmanov-Saff number of `n`.
    pub a_n: f64,
    /// Maximal extrapolation radius.
    pub r_n: f64,
    pub rho: f64,
    pub mu: f64,
    pub beta_alpha: f64,
    /// Modified Robin constant `F_alpha`.
    pub robin: f64,
}

impl DegreePlan {
    /// Edge of the extrapolation region in the rescaled variable `z / a_n`.
    pub fn scaled_radius(&self) -> f64 {
        self.r_n / self.a_n
    }

    /// `log(rho^k k^{-mu k})`, the log of the best-approximation decay at degree `k`.
    pub fn log_decay(&self, k: usize) -> f64 {
        log_decay(self.rho, self.mu, k)
    }

    /// Same plan with the degree forced to `n`; `a_n` and `r_n` follow `n`,
    /// while `eps` and `q` are kept.
    pub fn with_degree(&self, n: usize) -> DegreePlan {
        let nf = n as f64;
        let p = self.params;
        DegreePlan {
            n,
            a_n: self.beta_alpha * nf.powf(1.0 / p.alpha),
            r_n: (nf / (p.tau * p.lambda)).powf(1.0 / p.lambda),
            ..*self
        }
    }
}

pub(crate) fn log_decay(rho: f64, mu: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    k * rho.ln() - mu * k * k.ln()
}

/// Principal branch of the Lambert W function for `x >= 0`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "lambert_w is only defined here for x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    if x > E {
        // Solve w + ln w = ln x; stays finite for any representable x.
        let lx = x.ln();
        let mut w = lx - lx.ln();
        for _ in 0..LAMBERT_MAX_ITER {
            let g = w + w.ln() - lx;
            let g1 = 1.0 + 1.0 / w;
            let g2 = -1.0 / (w * w);
            let step = g / (g1 - 0.5 * g * g2 / g1);
            w -= step;
            if step.abs() <= LAMBERT_REL_STEP * w.abs() {
                break;
            }
        }
        return Ok(w);
    }

    let mut w = if x < 0.25 { x * (1.0 - x) } else { x.ln_1p() };
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= LAMBERT_REL_STEP * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// Natural log of the Gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `beta_alpha = {2^(alpha-2) Gamma(alpha/2)^2 / Gamma(alpha)}^(1/alpha)`,
/// evaluated through log-Gamma.
pub fn beta_alpha(alpha: f64) -> f64 {
    let log_inner = (alpha - 2.0) * LN_2 + 2.0 * ln_gamma(alpha / 2.0) - ln_gamma(alpha);
    (log_inner / alpha).exp()
}

/// Modified Robin constant `F_alpha = log(1/2) - 1/alpha`.
pub fn robin_constant(alpha: f64) -> f64 {
    -LN_2 - 1.0 / alpha
}

/// `rho = (beta_alpha/2) (tau lambda)^(1/lambda) exp(1/lambda - 1/alpha)`.
pub fn rho(params: &ProblemParams) -> f64 {
    let ProblemParams { alpha, tau, lambda } = *params;
    0.5 * beta_alpha(alpha) * (tau * lambda).powf(1.0 / lambda) * params.mu().exp()
}

/// `q(eps) = mu W(rho^(-1/mu) log(1/eps) / mu)`.
pub fn q_scale(params: &ProblemParams, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    q_from_log(params, -eps.ln())
}

/// `q` as a function of `L = log(1/eps) > 0`, usable where `eps` itself
/// would underflow.
pub fn q_from_log(params: &ProblemParams, log_inv_eps: f64) -> Result<f64> {
    if !(log_inv_eps > 0.0) {
        return Err(Error::Domain(format!("log(1/eps) must be > 0, got {log_inv_eps}")));
    }
    let mu = params.mu();
    let arg = (-rho(params).ln() / mu).exp() * log_inv_eps / mu;
    Ok(mu * lambert_w(arg)?)
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange(eps))
    }
}

/// Degree plan for perturbation level `eps`: the largest `n` with
/// `rho^n n^(-mu n) >= eps`, computed as `floor(log(1/eps) / q)`.
pub fn degree_plan(params: &ProblemParams, eps: f64) -> Result<DegreePlan> {
    params.validate()?;
    check_eps(eps)?;
    let mu = params.mu();
    let rho = rho(params);
    let q = q_scale(params, eps)?;
    let exact = -eps.ln() / q;
    let mut n = exact.floor();
    // `exact` solves rho^n n^(-mu n) = eps; snap values sitting on an
    // integer up to absorb rounding in q.
    if exact - n > 1.0 - 1e-10 {
        n += 1.0;
    }
    if n < 1.0 {
        return Err(Error::NoExtrapolation { eps });
    }
    let n = n as usize;
    let beta = beta_alpha(params.alpha);
    let nf = n as f64;
    Ok(DegreePlan {
        params: *params,
        eps,
        q,
        n,
        a_n: beta * nf.powf(1.0 / params.alpha),
        r_n: (nf / (params.tau * params.lambda)).powf(1.0 / params.lambda),
        rho,
        mu,
        beta_alpha: beta,
        robin: robin_constant(params.alpha),
    })
}

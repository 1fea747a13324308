//! Soft extrapolation of entire functions of finite order and type from
//! noisy samples taken under a super-exponentially decaying window.
//!
//! The pipeline is: [`scalars::degree_plan`] picks the polynomial degree from
//! the perturbation level, [`fitting::extrapolate`] builds or validates the
//! sampling grid and solves the weighted least-squares problem, and
//! [`bounds`] evaluates the pointwise error envelope the fit is expected to
//! satisfy.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod fitting;
mod linalg;
pub mod polybasis;
pub mod potential;
pub mod quadrature;
pub mod scalars;

pub use error::{Error, Result};
pub use scalars::{degree_plan, DegreePlan, ProblemParams};

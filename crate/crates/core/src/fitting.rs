//! Sampling grids and the weighted least-squares extrapolant.
//!
//! Given samples `g(x_j) = w(x_j) f(x_j) + noise` on a decreasing grid, the
//! fit minimizes
//!
//! ```text
//! sum_{j=1}^{M-1} (g(x_j) - w(x_j) P(x_j))^2 (x_j - x_{j+1})
//! ```
//!
//! over polynomials of degree `n`. The last node only closes the final
//! spacing and carries no residual term.
//!
//! Two pipelines share this code. `Generic` works directly in the variable
//! of the weight `exp(-|x|^alpha)` with a Chebyshev basis. `Hermite` takes
//! samples under `exp(-x^2/2)` and fits in the orthonormal Hermite basis;
//! its plan lives in `t = x/sqrt(2)` with type `tau * sqrt(2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::polybasis::{eval_series, eval_weighted_row, BasisDescriptor, BasisKind, Weight};
use crate::scalars::{degree_plan, DegreePlan, ProblemParams};

/// Default `c_1` in the spacing condition `max gap <= c_1 n^(1/alpha - 1)`.
pub const DEFAULT_DENSITY_CONSTANT: f64 = 3.0;
pub const DEFAULT_OVERSAMPLING: f64 = 2.0;
/// Relative slack on the extent inclusions, for grids hitting the endpoints.
const EXTENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Generic,
    Hermite,
}

impl Pipeline {
    /// Data units per plan unit: `x = unit_scale * t`.
    pub fn unit_scale(&self) -> f64 {
        match self {
            Pipeline::Generic => 1.0,
            Pipeline::Hermite => SQRT_2,
        }
    }

    /// Maps user parameters (data units) to the plan's parameters.
    pub fn plan_params(&self, params: &ProblemParams) -> Result<ProblemParams> {
        params.validate()?;
        match self {
            Pipeline::Generic => Ok(*params),
            Pipeline::Hermite => {
                if params.alpha != 2.0 || params.lambda != 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "the Hermite pipeline needs alpha = 2 and lambda = 1, got alpha = {}, lambda = {}",
                        params.alpha, params.lambda
                    )));
                }
                ProblemParams::new(2.0, params.tau * SQRT_2, 1.0)
            }
        }
    }

    /// Degree plan for user parameters.
    pub fn plan(&self, params: &ProblemParams, eps: f64) -> Result<DegreePlan> {
        degree_plan(&self.plan_params(params)?, eps)
    }

    /// Type `tau` in data units.
    pub fn data_tau(&self, plan: &DegreePlan) -> f64 {
        plan.params.tau / self.unit_scale().powf(plan.params.lambda)
    }

    /// Sampling window `exp(-|x/unit_scale|^alpha)` in data units.
    pub fn weight(&self, plan: &DegreePlan) -> Weight {
        Weight::new(plan.params.alpha, self.unit_scale())
    }

    /// Fitting basis for degree `plan.n`, in data units. The Chebyshev
    /// basis loses full rank on the weighted grid around degree 20.
    // TODO: orthonormalize on the sampling grid (discrete Stieltjes) so the
    // generic pipeline reaches the degrees the Hermite pipeline does.
    pub fn basis(&self, plan: &DegreePlan) -> BasisDescriptor {
        match self {
            Pipeline::Generic => BasisDescriptor {
                kind: BasisKind::ScaledChebyshev,
                scale: 2.0 * plan.a_n,
                max_degree: plan.n,
            },
            Pipeline::Hermite => BasisDescriptor::hermite(plan.n),
        }
    }

    /// Half-width of the grid produced by [`build_grid`], in data units:
    /// `(4/3) a_n` for the generic pipeline and `sqrt(2n)` for Hermite.
    pub fn grid_half_width(&self, plan: &DegreePlan) -> f64 {
        match self {
            Pipeline::Generic => 4.0 / 3.0 * plan.a_n,
            Pipeline::Hermite => (2.0 * plan.n as f64).sqrt(),
        }
    }
}

/// Samples on a strictly decreasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl SampleSet {
    /// Sorts the pairs into decreasing node order; nodes must be distinct
    /// and everything finite.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidSamples(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidSamples("at least two samples are required".into()));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("nodes and values must be finite".into()));
        }
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 <= w[1].0) {
            return Err(Error::InvalidSamples(format!("duplicate node {}", w[0].0)));
        }
        let (nodes, values) = pairs.into_iter().unzip();
        Ok(SampleSet { nodes, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reads a CSV with header columns `x` and `g` (any order, extra
    /// columns ignored).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidSamples(format!("missing column `{name}`")))
        };
        let (ix, ig) = (find("x")?, find("g")?);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                let field = record.get(i).unwrap_or("").trim();
                field.parse::<f64>().map_err(|_| {
                    Error::InvalidSamples(format!("row {}: cannot parse `{field}`", line + 2))
                })
            };
            nodes.push(parse(ix)?);
            values.push(parse(ig)?);
        }
        SampleSet::new(nodes, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "g"])?;
        for (x, g) in self.nodes.iter().zip(&self.values) {
            w.write_record([format!("{x:.16e}"), format!("{g:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equispaced decreasing grid of `max(ceil(oversampling * n), n + 2)` nodes
/// over the pipeline's window, in data units. The floor of `n + 2` leaves
/// `n + 1` residual rows. Endpoints are exact.
pub fn build_grid(plan: &DegreePlan, pipeline: Pipeline, oversampling: f64) -> Result<Vec<f64>> {
    if !(oversampling >= 1.0 && oversampling.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "oversampling must be >= 1, got {oversampling}"
        )));
    }
    let m = ((oversampling * plan.n as f64).ceil() as usize).max(plan.n + 2);
    let half = pipeline.grid_half_width(plan);
    let last = (m - 1) as f64;
    Ok((0..m).map(|j| half * (1.0 - 2.0 * j as f64 / last)).collect())
}

/// Outcome of the sampling conditions for a grid in plan units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// `[-(4/3) a_n, (4/3) a_n] ⊆ [x_M, x_1] ⊆ [-2 a_n, 2 a_n]`.
    pub extent_ok: bool,
    pub density_ok: bool,
    pub max_gap: f64,
    pub required_gap: f64,
    /// Endpoints of `Delta_n(2, alpha, 1/8)`.
    pub delta_window: (f64, f64),
    /// Whether the grid spans `delta_window`.
    pub delta_window_covered: bool,
}

impl GridReport {
    pub fn ok(&self) -> bool {
        self.extent_ok && self.density_ok
    }
}

/// Lower bound for `A(alpha, eta)` in the endpoint-concentration estimate.
pub fn endpoint_constant(alpha: f64, eta: f64) -> f64 {
    let c = 2.0 / 3.0 * alpha * 2f64.powf(alpha - 2.0).min(1.0 / (alpha - 1.0));
    let two_minus_sqrt3 = 2.0 - 3f64.sqrt();
    let inner = ((2.0 / (two_minus_sqrt3 * two_minus_sqrt3)).ln() + (1.0 / eta).ln()) / c;
    inner.powf(2.0 / 3.0)
}

/// `Delta_n(p, alpha, eta)` half-width, `a_n (1 + A / (p n)^(2/3))`.
pub fn delta_window_half_width(plan: &DegreePlan, p: f64, eta: f64) -> f64 {
    let a = endpoint_constant(plan.params.alpha, eta);
    plan.a_n * (1.0 + a / (p * plan.n as f64).powf(2.0 / 3.0))
}

/// Checks extent and spacing of `nodes` (plan units, strictly decreasing).
pub fn validate_grid(nodes: &[f64], plan: &DegreePlan, density_constant: f64) -> GridReport {
    let a_n = plan.a_n;
    let (first, last) = match (nodes.first(), nodes.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => (f64::NAN, f64::NAN),
    };
    let slack = EXTENT_SLACK * a_n;
    let inner = 4.0 / 3.0 * a_n;
    let outer = 2.0 * a_n;
    let extent_ok = last <= -inner + slack
        && first >= inner - slack
        && last >= -outer - slack
        && first <= outer + slack;
    let max_gap = nodes.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let nf = plan.n as f64;
    let required_gap = density_constant * nf.powf(1.0 / plan.params.alpha - 1.0);
    let half = delta_window_half_width(plan, 2.0, 0.125);
    GridReport {
        extent_ok,
        density_ok: nodes.len() >= 2 && max_gap <= required_gap * (1.0 + EXTENT_SLACK),
        max_gap,
        required_gap,
        delta_window: (-half, half),
        delta_window_covered: last <= -half + slack && first >= half - slack,
    }
}

/// Degree-`n` extrapolant in data units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub pipeline: Pipeline,
    pub basis: BasisDescriptor,
    pub coefficients: Vec<f64>,
    pub plan: DegreePlan,
}

impl FittedModel {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FittedModel = serde_json::from_str(text)?;
        if model.coefficients.is_empty() || model.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSamples("model coefficients must be finite".into()));
        }
        Ok(model)
    }
}

/// Least-squares fit in an explicit basis and weight; the degree is
/// `basis.max_degree`. Grid conditions are not checked here.
pub fn fit_in_basis(samples: &SampleSet, basis: &BasisDescriptor, weight: &Weight) -> Result<Vec<f64>> {
    let unknowns = basis.max_degree + 1;
    let rows = samples.len() - 1;
    if rows < unknowns {
        return Err(Error::Underdetermined { rows, unknowns });
    }
    let x = samples.nodes();
    let g = samples.values();
    let mut a = Matrix::zeros(rows, unknowns);
    let mut b = Vec::with_capacity(rows);
    for j in 0..rows {
        let s = (x[j] - x[j + 1]).sqrt();
        let row: Vec<f64> = eval_weighted_row(basis, x[j], weight, basis.max_degree)?
            .into_iter()
            .map(|v| v * s)
            .collect();
        a.set_row(j, &row);
        b.push(g[j] * s);
    }
    least_squares(a, b)
}

/// Degree-`plan.n` weighted least-squares fit.
pub fn fit(samples: &SampleSet, plan: &DegreePlan, pipeline: Pipeline) -> Result<FittedModel> {
    let basis = pipeline.basis(plan);
    let coefficients = fit_in_basis(samples, &basis, &pipeline.weight(plan))?;
    Ok(FittedModel { pipeline, basis, coefficients, plan: *plan })
}

/// Value of the extrapolant at `z` (data units).
pub fn evaluate(model: &FittedModel, z: Complex64) -> Complex64 {
    eval_series(&model.basis, &model.coefficients, z)
        .expect("coefficient count is bounded by the basis degree")
}

pub fn evaluate_real(model: &FittedModel, x: f64) -> f64 {
    eval_series(&model.basis, &model.coefficients, x)
        .expect("coefficient count is bounded by the basis degree")
}

/// The discrete functional minimized by [`fit`], for coefficients in the
/// model's basis.
pub fn discrete_functional(samples: &SampleSet, model: &FittedModel, coefficients: &[f64]) -> f64 {
    let weight = model.pipeline.weight(&model.plan);
    let x = samples.nodes();
    let g = samples.values();
    (0..samples.len() - 1)
        .map(|j| {
            let p = eval_series(&model.basis, coefficients, x[j]).expect("degree within basis");
            let r = g[j] - weight.value(x[j]) * p;
            r * r * (x[j] - x[j + 1])
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub pipeline: Pipeline,
    pub density_constant: f64,
    /// Fit even when the grid fails the extent or spacing check.
    pub allow_invalid_grid: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            pipeline: Pipeline::Generic,
            density_constant: DEFAULT_DENSITY_CONSTANT,
            allow_invalid_grid: false,
        }
    }
}

impl FitConfig {
    /// The Hermite pipeline on its own window `[-sqrt(2n), sqrt(2n)]`,
    /// which in plan units is `[-a_n, a_n]` and so never meets the
    /// `(4/3) a_n` extent rule; the check is reported but not enforced.
    pub fn hermite() -> Self {
        FitConfig { pipeline: Pipeline::Hermite, allow_invalid_grid: true, ..Default::default() }
    }
}

/// Plan, grid check and fit in one step. `params` are in data units.
pub fn extrapolate(
    samples: &SampleSet,
    params: &ProblemParams,
    eps: f64,
    config: &FitConfig,
) -> Result<(FittedModel, DegreePlan, GridReport)> {
    let pipeline = config.pipeline;
    let plan = pipeline.plan(params, eps)?;
    let s = pipeline.unit_scale();
    let plan_nodes: Vec<f64> = samples.nodes().iter().map(|x| x / s).collect();
    let report = validate_grid(&plan_nodes, &plan, config.density_constant);
    if !report.ok() && !config.allow_invalid_grid {
        return Err(Error::GridRejected(format!(
            "extent_ok = {}, density_ok = {} (max gap {:.4e}, allowed {:.4e})",
            report.extent_ok, report.density_ok, report.max_gap, report.required_gap
        )));
    }
    let model = fit(samples, &plan, pipeline)?;
    Ok((model, plan, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite_plan(tau: f64, eps: f64) -> DegreePlan {
        Pipeline::Hermite.plan(&ProblemParams::new(2.0, tau, 1.0).unwrap(), eps).unwrap()
    }

    #[test]
    fn hermite_pipeline_scalars() {
        let plan = hermite_plan(0.3, 1e-5);
        assert_eq!(plan.n, 5);
        assert!((Pipeline::Hermite.data_tau(&plan) - 0.3).abs() < 1e-15);
        let grid = build_grid(&plan, Pipeline::Hermite, 2.0).unwrap();
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], 10f64.sqrt());
        assert_eq!(grid[9], -10f64.sqrt());
        let bad = ProblemParams::new(3.0, 0.3, 1.0).unwrap();
        assert!(Pipeline::Hermite.plan(&bad, 1e-5).is_err());
    }

    #[test]
    fn grid_examples() {
        let p = ProblemParams::new(2.0, 0.5, 1.0).unwrap();
        let plan = degree_plan(&p, 1e-8).unwrap().with_degree(10);
        let grid = build_grid(&plan, Pipeline::Generic, 2.0).unwrap();
        assert_eq!(grid.len(), 20);
        let report = validate_grid(&grid, &plan, DEFAULT_DENSITY_CONSTANT);
        assert!(report.extent_ok && report.density_ok);
        let gap = 8.0 / 3.0 * plan.a_n / 19.0;
        assert!((report.max_gap - gap).abs() < 1e-14);

        let one = plan.with_degree(1);
        let three = build_grid(&one, Pipeline::Generic, 2.0).unwrap();
        let h = 4.0 / 3.0 * one.a_n;
        assert_eq!(three, vec![h, 0.0, -h]);

        let wide = [2.0 * plan.a_n, -2.0 * plan.a_n];
        let r = validate_grid(&wide, &plan, DEFAULT_DENSITY_CONSTANT);
        assert!(r.extent_ok && !r.density_ok);

        let narrow: Vec<f64> = (0..200).map(|j| plan.a_n * (1.0 - j as f64 / 99.5)).collect();
        assert!(!validate_grid(&narrow, &plan, DEFAULT_DENSITY_CONSTANT).extent_ok);
        assert_eq!(build_grid(&one, Pipeline::Generic, 1.0).unwrap().len(), 3);
        assert!(build_grid(&one, Pipeline::Generic, 0.5).is_err());
    }

    #[test]
    fn endpoint_constant_value() {
        // alpha = 2: c = 4/3, inner = (log(2/(2-sqrt3)^2) + log 8) * 3/4.
        let inner = ((2.0 / (2.0 - 3f64.sqrt()).powi(2)).ln() + 8f64.ln()) * 0.75;
        assert!((endpoint_constant(2.0, 0.125) - inner.powf(2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn samples_are_sorted_and_checked() {
        let s = SampleSet::new(vec![-1.0, 2.0, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.nodes(), &[2.0, 0.5, -1.0]);
        assert_eq!(s.values(), &[2.0, 3.0, 1.0]);
        assert!(SampleSet::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(SampleSet::new(vec![1.0], vec![0.0]).is_err());
        assert!(SampleSet::new(vec![1.0, 0.0], vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn zero_data_and_underdetermined() {
        let plan = hermite_plan(0.3, 1e-5);
        let grid = build_grid(&plan, Pipeline::Hermite, 2.0).unwrap();
        let s = SampleSet::new(grid.clone(), vec![0.0; grid.len()]).unwrap();
        let model = fit(&s, &plan, Pipeline::Hermite).unwrap();
        assert_eq!(model.coefficients, vec![0.0; 6]);
        assert_eq!(evaluate(&model, Complex64::new(3.0, 4.0)), Complex64::new(0.0, 0.0));

        let short = SampleSet::new(grid[..6].to_vec(), vec![0.0; 6]).unwrap();
        assert!(matches!(
            fit(&short, &plan, Pipeline::Hermite),
            Err(Error::Underdetermined { rows: 5, unknowns: 6 })
        ));
    }

    #[test]
    fn grid_gate() {
        let params = ProblemParams::new(2.0, 0.3, 1.0).unwrap();
        let plan = Pipeline::Hermite.plan(&params, 1e-5).unwrap();
        let grid = build_grid(&plan, Pipeline::Hermite, 2.0).unwrap();
        let s = SampleSet::new(grid.clone(), vec![0.0; grid.len()]).unwrap();
        let strict = FitConfig { pipeline: Pipeline::Hermite, ..Default::default() };
        assert!(matches!(extrapolate(&s, &params, 1e-5, &strict), Err(Error::GridRejected(_))));
        let (_, _, report) = extrapolate(&s, &params, 1e-5, &FitConfig::hermite()).unwrap();
        assert!(!report.extent_ok);
        assert!(matches!(
            extrapolate(&s, &ProblemParams::new(2.0, 0.01, 1.0).unwrap(), 0.5, &FitConfig::hermite()),
            Err(Error::NoExtrapolation { .. })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let plan = hermite_plan(0.3, 1e-5);
        let model = FittedModel {
            pipeline: Pipeline::Hermite,
            basis: BasisDescriptor::hermite(5),
            coefficients: vec![1.0, -0.5, 0.25, 0.0, 1e-300, 3.0],
            plan,
        };
        let back = FittedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}

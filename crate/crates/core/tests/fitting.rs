use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use softextrap::experiment::{model_function_f_tau_real, windowed_samples, NoiseModel};
use softextrap::fitting::{
    build_grid, discrete_functional, evaluate, evaluate_real, extrapolate, fit, validate_grid,
    FitConfig, FittedModel, Pipeline, SampleSet, DEFAULT_DENSITY_CONSTANT,
};
use softextrap::polybasis::{eval_series, BasisDescriptor, BasisKind};
use softextrap::{DegreePlan, Error, ProblemParams};

fn hermite_plan(tau: f64, eps: f64) -> DegreePlan {
    Pipeline::Hermite.plan(&ProblemParams::new(2.0, tau, 1.0).unwrap(), eps).unwrap()
}

fn noisy_f_tau(plan: &DegreePlan, tau: f64, seed: u64, trial: u64) -> SampleSet {
    let nodes = build_grid(plan, Pipeline::Hermite, 2.0).unwrap();
    let noise = NoiseModel::new(plan.eps, seed).unwrap().draw(trial, nodes.len());
    windowed_samples(Pipeline::Hermite, plan, &nodes, |x| model_function_f_tau_real(tau, x), &noise)
        .unwrap()
}

fn random_coefficients(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..=n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[test]
fn generic_pipeline_reproduces_polynomials() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for alpha in [3.0, 4.0] {
        let base = Pipeline::Generic.plan(&ProblemParams::new(alpha, 0.5, 1.5).unwrap(), 1e-6).unwrap();
        for n in 2..=15 {
            let plan = base.with_degree(n);
            let nodes = build_grid(&plan, Pipeline::Generic, 2.0).unwrap();
            assert!(validate_grid(&nodes, &plan, DEFAULT_DENSITY_CONSTANT).ok());
            let desc = Pipeline::Generic.basis(&plan);
            let w = Pipeline::Generic.weight(&plan);
            for _ in 0..5 {
                let c = random_coefficients(&mut rng, n);
                let values = nodes.iter().map(|&x| w.value(x) * eval_series(&desc, &c, x).unwrap()).collect();
                let model = fit(&SampleSet::new(nodes.clone(), values).unwrap(), &plan, Pipeline::Generic).unwrap();
                let h = nodes[0];
                let (mut err, mut scale) = (0.0f64, 0.0f64);
                for i in 0..20 {
                    let x = -h + 2.0 * h * (i as f64 + 0.5) / 20.0;
                    let p = eval_series(&desc, &c, x).unwrap();
                    err = err.max((w.value(x) * (evaluate_real(&model, x) - p)).abs());
                    scale = scale.max((w.value(x) * p).abs());
                }
                assert!(err <= 1e-8 * scale, "alpha={alpha} n={n}: {err:e} vs {scale:e}");
            }
        }
    }
}

#[test]
fn rank_deficiency_is_reported_with_a_degree() {
    let base = Pipeline::Generic.plan(&ProblemParams::new(2.0, 0.5, 1.0).unwrap(), 1e-6).unwrap();
    let plan = base.with_degree(40);
    let nodes = build_grid(&plan, Pipeline::Generic, 2.0).unwrap();
    let samples = SampleSet::new(nodes.clone(), vec![1.0; nodes.len()]).unwrap();
    match fit(&samples, &plan, Pipeline::Generic) {
        Err(Error::RankDeficient { degree }) => assert!(degree <= 40),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn fit_minimizes_the_discrete_functional() {
    let plan = hermite_plan(0.3, 1e-5);
    let samples = noisy_f_tau(&plan, 0.3, 3, 0);
    let model = fit(&samples, &plan, Pipeline::Hermite).unwrap();
    let best = discrete_functional(&samples, &model, &model.coefficients);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..20 {
        let q: Vec<f64> = model
            .coefficients
            .iter()
            .map(|c| c + 1e-6 * rng.random_range(-1.0..=1.0))
            .collect();
        assert!(discrete_functional(&samples, &model, &q) >= best);
    }
}

#[test]
fn fit_is_linear_in_the_data() {
    let plan = hermite_plan(0.3, 1e-8);
    let nodes = build_grid(&plan, Pipeline::Hermite, 2.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let g1: Vec<f64> = nodes.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
    let g2: Vec<f64> = nodes.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
    let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
    let fit_of = |g: Vec<f64>| fit(&SampleSet::new(nodes.clone(), g).unwrap(), &plan, Pipeline::Hermite).unwrap();
    let (m1, m2, m12) = (fit_of(g1), fit_of(g2), fit_of(sum));
    for k in 0..=plan.n {
        let lhs = m12.coefficients[k];
        let rhs = m1.coefficients[k] + m2.coefficients[k];
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "k={k}");
    }
}

/// Monomial coefficients of each basis polynomial up to degree `n`,
/// built by running the recurrence on coefficient vectors.
fn monomial_table(desc: &BasisDescriptor, n: usize) -> Vec<Vec<f64>> {
    let s = 1.0 / desc.scale;
    let mut table: Vec<Vec<f64>> = Vec::new();
    let p0 = match desc.kind {
        BasisKind::HermiteOrthonormal => std::f64::consts::PI.powf(-0.25),
        BasisKind::ScaledChebyshev => 1.0,
    };
    let mut first = vec![0.0; n + 1];
    first[0] = p0;
    table.push(first);
    for k in 0..n {
        let (a, b) = match desc.kind {
            BasisKind::HermiteOrthonormal => {
                let kf = k as f64;
                ((2.0 / (kf + 1.0)).sqrt(), (kf / (kf + 1.0)).sqrt())
            }
            BasisKind::ScaledChebyshev => (if k == 0 { 1.0 } else { 2.0 }, 1.0),
        };
        let mut next = vec![0.0; n + 1];
        for m in 0..n {
            next[m + 1] += a * s * table[k][m];
        }
        if k > 0 {
            for m in 0..=n {
                next[m] -= b * table[k - 1][m];
            }
        }
        table.push(next);
    }
    table
}

#[test]
fn evaluation_matches_horner_after_monomial_conversion() {
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let herm = hermite_plan(0.3, 1e-5);
    let generic_base = Pipeline::Generic.plan(&ProblemParams::new(3.0, 0.5, 1.0).unwrap(), 1e-6).unwrap();
    for n in 1..=15 {
        for (pipeline, plan) in [(Pipeline::Hermite, herm.with_degree(n)), (Pipeline::Generic, generic_base.with_degree(n))] {
            let basis = pipeline.basis(&plan);
            let coefficients = random_coefficients(&mut rng, n);
            let table = monomial_table(&basis, n);
            let mono: Vec<f64> = (0..=n)
                .map(|m| (0..=n).map(|k| coefficients[k] * table[k][m]).sum())
                .collect();
            let model = FittedModel { pipeline, basis, coefficients, plan };
            for _ in 0..10 {
                let z = Complex64::from_polar(rng.random_range(0.0..=5.0), rng.random_range(0.0..std::f64::consts::TAU));
                let horner = mono.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
                let v = evaluate(&model, z);
                assert!((v - horner).norm() <= 1e-10 * horner.norm(), "{pipeline:?} n={n} z={z}: {v} vs {horner}");
            }
        }
    }
}

#[test]
fn single_coefficient_model() {
    let plan = hermite_plan(0.3, 1e-5);
    let basis = Pipeline::Hermite.basis(&plan);
    let z = Complex64::new(1.7, -0.4);
    for k in 0..=plan.n {
        let mut coefficients = vec![0.0; plan.n + 1];
        coefficients[k] = 2.5;
        let model = FittedModel { pipeline: Pipeline::Hermite, basis, coefficients, plan };
        let pk = softextrap::polybasis::eval_basis(&basis, k, z).unwrap();
        assert!((evaluate(&model, z) - pk * 2.5).norm() <= 1e-15 * pk.norm().max(1.0));
    }
}

#[test]
fn weighted_error_on_window_tracks_eps_plus_decay() {
    for eps in [1e-4, 1e-6, 1e-8] {
        let plan = hermite_plan(0.3, eps);
        let samples = noisy_f_tau(&plan, 0.3, 17, 0);
        let model = fit(&samples, &plan, Pipeline::Hermite).unwrap();
        let w = Pipeline::Hermite.weight(&plan);
        let h = (2.0 * plan.n as f64).sqrt();
        let worst = (0..=2000)
            .map(|i| {
                let x = -h + 2.0 * h * i as f64 / 2000.0;
                (w.value(x) * (model_function_f_tau_real(0.3, x) - evaluate_real(&model, x))).abs()
            })
            .fold(0.0, f64::max);
        let target = eps + plan.log_decay(plan.n).exp();
        assert!(worst <= 10.0 * target, "eps={eps:e}: {worst:e} vs {target:e}");
    }
}

#[test]
fn end_to_end_inside_window() {
    let params = ProblemParams::new(2.0, 0.3, 1.0).unwrap();
    let eps = 1e-5;
    let plan = Pipeline::Hermite.plan(&params, eps).unwrap();
    let h = (2.0 * plan.n as f64).sqrt();
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let samples = noisy_f_tau(&plan, 0.3, 99, trial);
        let (model, plan2, report) = extrapolate(&samples, &params, eps, &FitConfig::hermite()).unwrap();
        assert_eq!(plan2, plan);
        assert!(report.density_ok);
        for i in 0..=100 {
            let z = -h + 2.0 * h * i as f64 / 100.0;
            let err = (model_function_f_tau_real(0.3, z) - evaluate_real(&model, z)).abs();
            worst = worst.max(err / (eps * (z * z / 2.0).exp()));
        }
    }
    assert!(worst <= 10.0, "max error / (eps e^(z^2/2)) = {worst}");
}

#[test]
fn sample_csv_round_trip_and_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let plan = hermite_plan(0.3, 1e-5);
    let samples = noisy_f_tau(&plan, 0.3, 1, 0);
    let path = dir.path().join("s.csv");
    samples.write_csv(&path).unwrap();
    assert_eq!(SampleSet::read_csv(&path).unwrap(), samples);

    let swapped = dir.path().join("swapped.csv");
    std::fs::write(&swapped, "g,extra,x\n0.5,a,-1\n0.25,b,1\n").unwrap();
    let s = SampleSet::read_csv(&swapped).unwrap();
    assert_eq!(s.nodes(), &[1.0, -1.0]);
    assert_eq!(s.values(), &[0.25, 0.5]);

    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, "x,y\n1,2\n0,1\n").unwrap();
    assert!(matches!(SampleSet::read_csv(&missing), Err(Error::InvalidSamples(_))));
}

#[test]
fn fitted_model_survives_json() {
    let plan = hermite_plan(0.3, 1e-5);
    let model = fit(&noisy_f_tau(&plan, 0.3, 4, 2), &plan, Pipeline::Hermite).unwrap();
    let back = FittedModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
    let z = Complex64::new(7.0, 2.0);
    assert_eq!(evaluate(&back, z), evaluate(&model, z));
}

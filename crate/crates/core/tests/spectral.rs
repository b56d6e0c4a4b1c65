use nalgebra::{DMatrix, SymmetricEigen};
use nlkpp_core::spectral::{
    certificate_check, default_initials, lyapunov_exponent, pe_lower_bounds, principal_eigenvalue_static,
    relation_audit, AuditOptions, CertificateKind, LyapunovOptions, Provenance, TestFunction,
};
use nlkpp_core::{
    ApCoefficient, BoundaryShift, Dispersal, Domain, KernelFamily, KernelOptions, Model, SpatialProfile, TemporalMode,
};
use std::f64::consts::{PI, TAU};

fn wrapped_gaussian(z: f64, sigma: f64, period: f64) -> f64 {
    (-40..=40)
        .map(|m| {
            let y = z + m as f64 * period;
            (-(y * y) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
        })
        .sum()
}

/// Dense eigensolve of the periodized operator plus `diag(a)` on a uniform
/// circle grid, row-normalized like the solver's kernel.
fn dense_torus_eigenvalue(n: usize, sigma: f64, a: &[f64]) -> f64 {
    let h = TAU / n as f64;
    let row: Vec<f64> = (0..n).map(|j| wrapped_gaussian(j as f64 * h, sigma, TAU) * h).collect();
    let mass: f64 = row.iter().sum();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = (j + n - i) % n;
        row[d] / mass + if i == j { a[i] } else { 0.0 }
    });
    SymmetricEigen::new(m).eigenvalues.max()
}

fn circle(n: usize) -> (Domain, Dispersal) {
    let d = Domain::circle(0.0, TAU, n).unwrap();
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 1.0 }, &KernelOptions::default()).unwrap();
    (d, op)
}

#[test]
fn power_iteration_matches_dense_eigensolve() {
    let (d, op) = circle(48);
    let a = ApCoefficient::from_profile(SpatialProfile::cosine(1.0, 1.0, 1.0, 0.0));
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let pair = principal_eigenvalue_static(&model).unwrap();
    let dense = dense_torus_eigenvalue(48, 1.0, &a.time_mean().sample(&d));
    assert!((pair.lambda - dense).abs() < 1e-9, "{} vs {dense}", pair.lambda);
    assert!(pair.vector.iter().all(|v| *v > 0.0));
    assert!(pair.lambda >= 2.0);
}

#[test]
fn neumann_shift_gives_zero_for_zero_growth() {
    // (K - K1)·1 = 0, and the operator is a generator of a Markov semigroup.
    let d = Domain::interval(0.0, 1.0, 41).unwrap();
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 0.2 }, &KernelOptions::default()).unwrap();
    let model = Model::linear(&op, &ApCoefficient::constant(0.0), BoundaryShift::Neumann).unwrap();
    let pair = principal_eigenvalue_static(&model).unwrap();
    assert!(pair.lambda.abs() < 1e-10, "{}", pair.lambda);
}

#[test]
fn lyapunov_of_static_problem_is_the_eigenvalue() {
    let (d, op) = circle(32);
    let a = ApCoefficient::from_profile(SpatialProfile::cosine(-0.5, 0.7, 1.0, 0.3));
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let eig = principal_eigenvalue_static(&model).unwrap().lambda;
    let r = lyapunov_exponent(&model, &default_initials(&d), &LyapunovOptions::default()).unwrap();
    assert!((r.estimate - eig).abs() < 1e-3, "{} vs {eig}", r.estimate);
    assert!(r.converged);
}

#[test]
fn space_independent_growth_is_one_plus_mean() {
    let (d, op) = circle(32);
    let a = ApCoefficient::constant(-0.3).with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(0.6)));
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let opts = LyapunovOptions { horizon: 40.0 * TAU, renorm: TAU / 8.0, ..Default::default() };
    let r = lyapunov_exponent(&model, &default_initials(&d), &opts).unwrap();
    assert!((r.estimate - 0.7).abs() < 1e-6, "{}", r.estimate);
}

#[test]
fn analytic_lower_bounds_on_torus() {
    let (_, op) = circle(32);
    let a = ApCoefficient::from_profile(SpatialProfile::cosine(1.0, 1.0, 1.0, 0.0));
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let bounds = pe_lower_bounds(&model, &a);
    let get = |p: Provenance| bounds.iter().find(|b| b.provenance == p).map(|b| b.value);
    assert!((get(Provenance::SupTimeMean).unwrap() - 2.0).abs() < 1e-12);
    assert!((get(Provenance::MeanPlusOne).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn constant_certificate_is_exact_for_constant_growth() {
    let (d, op) = circle(16);
    let a = ApCoefficient::constant(0.25);
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let phi = TestFunction::Constant.sample(&a, &d, 0.0, 0.1, 50);
    assert!(certificate_check(&phi, &model, 1.25, CertificateKind::Lower, 1e-9).unwrap().passed);
    assert!(certificate_check(&phi, &model, 1.25, CertificateKind::Upper, 1e-9).unwrap().passed);
    assert!(!certificate_check(&phi, &model, 1.3, CertificateKind::Lower, 1e-9).unwrap().passed);
}

#[test]
fn audit_brackets_the_estimate() {
    let (_, op) = circle(32);
    let a = ApCoefficient::constant(0.2)
        .with_mode(TemporalMode::sine(1.0, SpatialProfile::cosine(0.4, 0.2, 1.0, 0.0)));
    let model = Model::linear(&op, &a, BoundaryShift::None).unwrap();
    let r = relation_audit(&model, &a, &[], &AuditOptions::default()).unwrap();
    assert!(r.passed);
    assert!(r.best_lower.value <= r.estimate + 2e-2);
    assert!(r.best_upper.is_some_and(|u| r.estimate <= u.value + 2e-2));
}

use nlkpp_core::evolution::{check_ordering, check_supersub, domain_comparison};
use nlkpp_core::{
    ApCoefficient, BoundaryShift, Dispersal, Domain, Field, KernelFamily, KernelOptions, Model, Reaction, SolveOptions,
    SpatialProfile, TemporalMode, Trajectory,
};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn circle_op(n: usize) -> Dispersal {
    let d = Domain::circle(0.0, TAU, n).unwrap();
    Dispersal::new(&d, KernelFamily::Gaussian { sigma: 1.0 }, &KernelOptions::default()).unwrap()
}

fn periodic_a() -> ApCoefficient {
    ApCoefficient::constant(0.5).with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(0.3)))
}

fn logistic(a: ApCoefficient) -> Reaction {
    Reaction::logistic(a, ApCoefficient::constant(1.0))
}

fn rk4(f: impl Fn(f64, f64) -> f64, mut u: f64, s: f64, t: f64, n: usize) -> f64 {
    let h = (t - s) / n as f64;
    for k in 0..n {
        let t = s + k as f64 * h;
        let k1 = f(t, u);
        let k2 = f(t + h / 2.0, u + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, u + h / 2.0 * k2);
        let k4 = f(t + h, u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

#[test]
fn constant_data_follow_the_scalar_ode() {
    // On the torus K1 = 1, so constants solve u' = u(1 + a(t) - u).
    let model = Model::nonlinear(&circle_op(32), &logistic(periodic_a())).unwrap();
    let u = model.propagate(&[0.2; 32], 0.0, 5.0, Some(0.01)).unwrap();
    let scalar = rk4(|t, u| u * (1.5 + 0.3 * t.sin() - u), 0.2, 0.0, 5.0, 50_000);
    assert!(u.iter().all(|v| (v - scalar).abs() < 1e-8), "{} vs {scalar}", u[0]);
}

#[test]
fn linear_constant_growth_is_exponential() {
    let model = Model::linear(&circle_op(16), &ApCoefficient::constant(-0.5), BoundaryShift::None).unwrap();
    let u = model.propagate(&[1.0; 16], 0.0, 4.0, None).unwrap();
    assert!(u.iter().all(|v| (v - 2f64.exp()).abs() < 1e-9));
}

#[test]
fn step_above_bound_is_rejected() {
    let model = Model::nonlinear(&circle_op(16), &logistic(periodic_a())).unwrap();
    assert!(model.propagate(&[1.0; 16], 0.0, 1.0, Some(2.0 * model.dt_max())).is_err());
    assert!(model.dt_max() > 0.0 && model.default_dt() <= model.dt_max());
}

#[test]
fn steady_state_is_both_super_and_sub() {
    let model = Model::nonlinear(&circle_op(16), &logistic(ApCoefficient::constant(0.5))).unwrap();
    let steady = model.solve(&[1.5; 16], 0.0, 2.0, &SolveOptions { dt: None, save_every: Some(0.1) }).unwrap();
    let r = check_supersub(&steady, &model, 1e-8).unwrap();
    assert!(r.is_super && r.is_sub);
    let held = |level: f64| Trajectory {
        dt: 0.1,
        fields: (0..21).map(|k| Field::new(0.1 * k as f64, vec![level; 16])).collect(),
    };
    let r = check_supersub(&held(2.0 * model.u_cap()), &model, 1e-12).unwrap();
    assert!(r.is_super && !r.is_sub);
    let r = check_supersub(&held(0.01), &model, 1e-12).unwrap();
    assert!(r.is_sub && !r.is_super);
}

#[test]
fn nested_boxes_are_ordered() {
    let outer = Domain::interval(0.0, 1.0, 81).unwrap();
    let (inner, _) = outer.sub_box(&[(0.25, 0.75)]).unwrap();
    let fam = KernelFamily::Gaussian { sigma: 0.1 };
    let r = logistic(periodic_a());
    let big = Model::nonlinear(&Dispersal::new(&outer, fam, &KernelOptions::default()).unwrap(), &r).unwrap();
    let small = Model::nonlinear(&Dispersal::new(&inner, fam, &KernelOptions::default()).unwrap(), &r).unwrap();
    let u0 = outer.sample(|x| 0.5 + x[0]);
    let opts = SolveOptions { dt: None, save_every: Some(0.5) };
    let cmp = domain_comparison(&big, &small, &u0, 0.0, 5.0, &opts, 1e-12).unwrap();
    assert!(cmp.passed && cmp.interior_gap > 0.0);
}

#[test]
fn cocycle_on_aligned_times() {
    let model = Model::linear(&circle_op(32), &periodic_a(), BoundaryShift::None).unwrap();
    let d = model.dispersal().domain().clone();
    let u0 = d.sample(|x| 1.0 + 0.5 * x[0].sin());
    let whole = model.propagate(&u0, 0.0, 3.0, None).unwrap();
    let half = model.propagate(&u0, 0.0, 1.7, None).unwrap();
    let parts = model.propagate(&half, 1.7, 3.0, None).unwrap();
    for (a, b) in whole.iter().zip(&parts) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}

#[test]
fn fourth_order_convergence() {
    let model = Model::nonlinear(&circle_op(32), &logistic(periodic_a())).unwrap();
    let d = model.dispersal().domain().clone();
    let u0 = d.sample(|x| 1.0 + 0.5 * x[0].cos());
    let reference = model.propagate(&u0, 0.0, 2.0, Some(0.0005)).unwrap();
    let err = |dt: f64| {
        let u = model.propagate(&u0, 0.0, 2.0, Some(dt)).unwrap();
        u.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
}

fn positive_field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_flow_is_linear(u in positive_field(24), v in positive_field(24), alpha in -2.0f64..2.0) {
        let model = Model::linear(&circle_op(24), &periodic_a(), BoundaryShift::None).unwrap();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
        let pu = model.propagate(&u, 0.0, 1.0, None).unwrap();
        let pv = model.propagate(&v, 0.0, 1.0, None).unwrap();
        let pc = model.propagate(&combo, 0.0, 1.0, None).unwrap();
        let scale = pc.iter().chain(&pu).fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..24 {
            prop_assert!((pc[i] - alpha * pu[i] - pv[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn flow_preserves_order_and_sign(u in positive_field(24), bump in positive_field(24)) {
        let model = Model::nonlinear(&circle_op(24), &logistic(periodic_a())).unwrap();
        let v: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let opts = SolveOptions { dt: None, save_every: Some(0.5) };
        let lo = model.solve(&u, 0.0, 4.0, &opts).unwrap();
        let hi = model.solve(&v, 0.0, 4.0, &opts).unwrap();
        prop_assert!(check_ordering(&lo, &hi, 1e-12).unwrap().passed);
        prop_assert!(lo.fields.iter().all(|f| f.is_nonnegative()));
    }

    #[test]
    fn torus_flow_commutes_with_rotation(u in positive_field(32), shift in 0usize..32) {
        // Space-independent coefficients make the flow rotation equivariant.
        let model = Model::nonlinear(&circle_op(32), &logistic(periodic_a())).unwrap();
        let rotated: Vec<f64> = (0..32).map(|i| u[(i + shift) % 32]).collect();
        let pu = model.propagate(&u, 0.0, 2.0, None).unwrap();
        let pr = model.propagate(&rotated, 0.0, 2.0, None).unwrap();
        for i in 0..32 {
            prop_assert!((pr[i] - pu[(i + shift) % 32]).abs() < 1e-12);
        }
    }

    #[test]
    fn time_shift_by_a_period(u in positive_field(16)) {
        // a has period 2π, so starting 2π later gives the same flow.
        let model = Model::nonlinear(&circle_op(16), &logistic(periodic_a())).unwrap();
        let p0 = model.propagate(&u, 0.0, 1.0, None).unwrap();
        let p1 = model.propagate(&u, TAU, TAU + 1.0, None).unwrap();
        for (a, b) in p0.iter().zip(&p1) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

use nlkpp_core::kernel::{ConvolutionMethod, Workspace};
use nlkpp_core::{Dispersal, Domain, DomainKind, KernelFamily, KernelOptions};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn gaussian(z: f64, sigma: f64) -> f64 {
    (-(z * z) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn options(method: ConvolutionMethod) -> KernelOptions {
    KernelOptions { method, ..KernelOptions::default() }
}

#[test]
fn box_constant_matches_erf() {
    // ∫_0^1 κ(y - 1/2) dy = erf(1/(2√2)) for the unit Gaussian.
    let d = Domain::interval(0.0, 1.0, 401).unwrap();
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 1.0 }, &KernelOptions::default()).unwrap();
    let k1 = op.apply(&vec![1.0; d.len()]).unwrap();
    let exact = libm::erf(0.5 / 2f64.sqrt());
    assert!((k1[200] - exact).abs() < 1e-5, "{} vs {exact}", k1[200]);
    assert!((exact - 0.382924922548026).abs() < 1e-12);
}

#[test]
fn box_matrix_matches_kernel_formula() {
    let d = Domain::interval(-1.0, 2.0, 31).unwrap();
    let sigma = 0.4;
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma }, &KernelOptions::default()).unwrap();
    let h = 0.1;
    for i in 0..31 {
        for j in 0..31 {
            let w = if j == 0 || j == 30 { 0.5 * h } else { h };
            let expected = gaussian(h * (j as f64 - i as f64), sigma) * w;
            let got = op.entry(i, j);
            assert!((got - expected).abs() <= 1e-12 * expected + 1e-13, "{i} {j}: {got} vs {expected}");
        }
    }
}

#[test]
fn torus_preserves_constants_and_mass() {
    let d = Domain::circle(0.0, TAU, 64).unwrap();
    for sigma in [0.3, 1.0, 2.5] {
        let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma }, &KernelOptions::default()).unwrap();
        let k1 = op.apply(&vec![1.0; 64]).unwrap();
        assert!(k1.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let u: Vec<f64> = (0..64).map(|i| 1.0 + (i as f64 * 0.37).sin().abs()).collect();
        let ku = op.apply(&u).unwrap();
        let (m0, m1): (f64, f64) = (u.iter().sum(), ku.iter().sum());
        assert!((m0 - m1).abs() < 1e-11 * m0);
    }
}

#[test]
fn torus_fourier_multiplier() {
    // cos(kx) is an eigenfunction with eigenvalue close to exp(-σ²k²/2).
    let d = Domain::circle(0.0, TAU, 128).unwrap();
    let sigma = 0.5;
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma }, &KernelOptions::default()).unwrap();
    for k in [1.0, 3.0] {
        let u = d.sample(|x| (k * x[0]).cos());
        let ku = op.apply(&u).unwrap();
        let mult = (-(sigma * sigma * k * k) / 2.0).exp();
        for (a, b) in ku.iter().zip(&u) {
            assert!((a - mult * b).abs() < 1e-8);
        }
    }
}

#[test]
fn aliasing_only_without_periodization() {
    let d = Domain::circle(0.0, TAU, 64).unwrap();
    let fam = KernelFamily::Gaussian { sigma: 1.0 };
    assert!(Dispersal::new(&d, fam, &KernelOptions::default()).is_ok());
    let raw = KernelOptions { periodize: false, ..KernelOptions::default() };
    assert!(Dispersal::new(&d, fam, &raw).is_err());
    let narrow = KernelFamily::Gaussian { sigma: 0.2 };
    assert!(Dispersal::new(&d, narrow, &raw).is_ok());
}

#[test]
fn two_dimensional_torus_constants() {
    let d = Domain::new(DomainKind::Torus, &[(0.0, TAU), (0.0, TAU)], &[32, 16]).unwrap();
    let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 0.8 }, &KernelOptions::default()).unwrap();
    let k1 = op.apply(&vec![2.0; d.len()]).unwrap();
    assert!(k1.iter().all(|v| (v - 2.0).abs() < 1e-12));
}

fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fft_agrees_with_direct_on_box(u in field(97), sigma in 0.05f64..0.5) {
        let d = Domain::interval(0.0, 1.0, 97).unwrap();
        let fam = KernelFamily::Gaussian { sigma };
        let fft = Dispersal::new(&d, fam, &options(ConvolutionMethod::Fft)).unwrap();
        let direct = Dispersal::new(&d, fam, &options(ConvolutionMethod::Direct)).unwrap();
        let (a, b) = (fft.apply(&u).unwrap(), direct.apply(&u).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn fft_agrees_with_direct_on_torus(u in field(64), radius in 0.2f64..2.0) {
        let d = Domain::circle(0.0, TAU, 64).unwrap();
        let fam = KernelFamily::Bump { radius };
        let fft = Dispersal::new(&d, fam, &options(ConvolutionMethod::Fft)).unwrap();
        let direct = Dispersal::new(&d, fam, &options(ConvolutionMethod::Direct)).unwrap();
        let mut ws = Workspace::default();
        let mut a = vec![0.0; 64];
        fft.apply_into(&u, &mut a, &mut ws).unwrap();
        let b = direct.apply(&u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_is_positive_and_linear(u in field(48), v in field(48), alpha in -3.0f64..3.0) {
        let d = Domain::interval(-2.0, 2.0, 48).unwrap();
        let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 0.3 }, &KernelOptions::default()).unwrap();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
        let (ku, kv, kc) = (op.apply(&u).unwrap(), op.apply(&v).unwrap(), op.apply(&combo).unwrap());
        for i in 0..48 {
            prop_assert!((kc[i] - (alpha * ku[i] + kv[i])).abs() < 1e-11);
        }
        let pos: Vec<f64> = u.iter().map(|x| x.abs()).collect();
        prop_assert!(op.apply(&pos).unwrap().iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn torus_commutes_with_grid_shifts(u in field(40), shift in 0usize..40) {
        let d = Domain::circle(0.0, TAU, 40).unwrap();
        let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 0.7 }, &KernelOptions::default()).unwrap();
        let rotated: Vec<f64> = (0..40).map(|i| u[(i + shift) % 40]).collect();
        let (ku, kr) = (op.apply(&u).unwrap(), op.apply(&rotated).unwrap());
        for i in 0..40 {
            prop_assert!((kr[i] - ku[(i + shift) % 40]).abs() < 1e-12);
        }
    }
}

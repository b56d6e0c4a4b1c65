use nlkpp::scenario::{Experiment, InitialSpec};
use nlkpp::shipped::{self, SHIPPED};
use nlkpp::Scenario;

#[test]
fn every_shipped_scenario_parses_and_builds() {
    for (file, text) in SHIPPED {
        let s = Scenario::parse(text, false).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert_eq!(format!("{}.toml", s.name), *file);
        if s.experiment != Experiment::VerifyAll {
            s.nonlinear().unwrap_or_else(|e| panic!("{file}: {e}"));
            s.linear().unwrap();
        }
    }
}

#[test]
fn json_is_an_alternate_encoding() {
    let json = r#"{
        "name": "constant_logistic",
        "experiment": "entire",
        "domain": { "kind": "torus", "bounds": [[0.0, 6.283185307179586]], "points": [64] },
        "kernel": { "family": "gaussian", "sigma": 1.0 },
        "a": { "constant": 0.5 },
        "params": { "window": [0.0, 20.0], "tol": 1e-6 }
    }"#;
    let from_json = Scenario::parse(json, true).unwrap();
    let from_toml = shipped::load("constant_logistic.toml");
    assert_eq!(from_json.a.build(), from_toml.a.build());
    assert_eq!(from_json.domain().unwrap(), from_toml.domain().unwrap());
    assert_eq!(from_json.kernel().unwrap(), from_toml.kernel().unwrap());
}

#[test]
fn sine_modes_are_shifted_cosines() {
    let s = shipped::load("quasi_periodic.toml");
    let a = s.a.build();
    for &(t, x) in &[(0.3, 1.0), (2.0, 4.0), (7.5, 0.1)] {
        let expected = 0.3 + 0.5 * f64::sin(t) * (1.0 + 0.3 * f64::cos(x)) + 0.2 * f64::cos(2f64.sqrt() * t);
        assert!((a.evaluate(t, &[x]) - expected).abs() < 1e-14);
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = "name = \"x\"\nexperiment = \"eigen\"\nhorizon = 3.0\n";
    let err = Scenario::parse(text, false).unwrap_err();
    assert!(err.contains("horizon"), "{err}");
}

#[test]
fn random_initials_follow_the_seed() {
    let s = shipped::load("nested_box.toml");
    assert!(matches!(s.params.initial, InitialSpec::Random { .. }));
    let a = nlkpp::runner::initial_field(&s, 50, 3);
    let b = nlkpp::runner::initial_field(&s, 50, 3);
    let c = nlkpp::runner::initial_field(&s, 50, 4);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.iter().all(|v| (0.2..=1.5).contains(v)));
}

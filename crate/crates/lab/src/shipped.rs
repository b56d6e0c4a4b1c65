//! Scenario files shipped with the crate, embedded at build time.

use crate::Scenario;

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        /// `(file name, contents)` of every shipped scenario.
        pub const SHIPPED: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name)))),*
        ];
    };
}

shipped!(
    "constant_logistic.toml",
    "quasi_periodic.toml",
    "periodic_logistic.toml",
    "extinction.toml",
    "static_cosine.toml",
    "nested_box.toml",
    "interval_eigen.toml",
    "verify_all.toml",
);

pub fn load(file: &str) -> Scenario {
    let (_, text) = SHIPPED.iter().find(|(n, _)| *n == file).expect("known shipped scenario");
    Scenario::parse(text, false).expect("shipped scenarios parse")
}

/// Every shipped scenario that describes a model.
pub fn models() -> Vec<Scenario> {
    SHIPPED
        .iter()
        .map(|(_, text)| Scenario::parse(text, false).expect("shipped scenarios parse"))
        .filter(|s| s.domain.is_some())
        .collect()
}

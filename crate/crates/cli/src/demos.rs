//! Bundled scenarios, one per manufactured case.

use cauchy_core::oracle::CATALOG;

use crate::config::ScenarioConfig;
use crate::error::CliError;

const DEMOS: [(&str, &str); 6] = [
    ("POLY2", include_str!("../demos/poly2.toml")),
    ("ZBAR_RHS", include_str!("../demos/zbar_rhs.toml")),
    ("POLE_OUTSIDE", include_str!("../demos/pole_outside.toml")),
    ("POLE_IN_DPLUS", include_str!("../demos/pole_in_dplus.toml")),
    ("ANTIHOLO", include_str!("../demos/antiholo.toml")),
    ("HARMONIC_CUBIC", include_str!("../demos/harmonic_cubic.toml")),
];

/// The catalog names, in catalog order.
pub fn names() -> [&'static str; 6] {
    CATALOG
}

pub fn source(name: &str) -> Option<&'static str> {
    let key = name.split('(').next().unwrap_or(name).trim().to_ascii_uppercase();
    DEMOS.iter().find(|(n, _)| *n == key).map(|(_, s)| *s)
}

pub fn config(name: &str) -> Result<ScenarioConfig, CliError> {
    let text = source(name).ok_or_else(|| CliError::Invalid(format!("no demo named `{name}`")))?;
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_case_has_a_valid_demo() {
        for n in names() {
            let cfg = config(n).unwrap();
            cfg.validate().unwrap();
            assert!(cfg.data.case.as_deref().unwrap().starts_with(n));
        }
    }
}

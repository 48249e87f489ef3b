//! Embedded golden series: the quoted Fourier-coefficient prefixes, one
//! versioned fixture per display, plus the exact comparison driver.
//!
//! A fixture lists every coefficient (zeros included) on the support window;
//! a series passes when each listed coefficient matches exactly and nothing
//! unlisted is nonzero below the window.

use crate::coeffs::{Cyclotomic, Rat};
use crate::family::Family;
use crate::series::{Exp, PuiseuxSeries};
use num::BigInt;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldenFixture {
    pub name: String,
    pub family: String,
    pub description: String,
    /// Exclusive exponent bound of the quoted prefix.
    pub window: i64,
    /// `[exponent, value]` with the value an exact rational string.
    pub coefficients: Vec<(i64, String)>,
}

impl GoldenFixture {
    pub fn family(&self) -> Option<Family> {
        Family::parse(&self.family)
    }

    pub fn values(&self) -> Vec<(Exp, Rat)> {
        self.coefficients
            .iter()
            .map(|(e, v)| (Exp::from_integer(*e), parse_rat(v)))
            .collect()
    }
}

fn parse_rat(s: &str) -> Rat {
    match s.split_once('/') {
        Some((n, d)) => Rat::new(
            BigInt::from_str(n.trim()).expect("numerator"),
            BigInt::from_str(d.trim()).expect("denominator"),
        ),
        None => Rat::from_integer(BigInt::from_str(s.trim()).expect("integer")),
    }
}

macro_rules! embedded {
    ($($file:literal),* $(,)?) => {
        &[$(include_str!(concat!("../fixtures/", $file))),*]
    };
}

const EMBEDDED: &[&str] = embedded![
    "p8-j-invariant.json",
    "p8-correlator-d1-d2-d3.json",
    "p8-correlator-d1-d1-d1.json",
    "x9-correlator-d11-d21-d31.json",
    "x9-correlator-d11-d11-d12.json",
    "x9-correlator-d11-d11-d22.json",
    "j10-correlator-d11-d11-d14.json",
    "j10-correlator-d11-d12-d13.json",
    "j10-correlator-d21-d21-d21.json",
    "j10-correlator-d11-d21-d31.json",
    "p8-eta-product.json",
];

/// All fixtures shipped with the crate.
pub fn embedded_fixtures() -> Vec<GoldenFixture> {
    EMBEDDED
        .iter()
        .map(|s| serde_json::from_str(s).expect("fixtures are well-formed"))
        .collect()
}

pub fn fixture(name: &str) -> Option<GoldenFixture> {
    embedded_fixtures().into_iter().find(|f| f.name == name)
}

/// The fixture names backing each correlator of a family, in catalog order.
pub fn correlator_fixture_names(family: Family) -> Vec<&'static str> {
    match family {
        Family::P8 => vec!["p8-correlator-d1-d2-d3", "p8-correlator-d1-d1-d1"],
        Family::X9 => vec![
            "x9-correlator-d11-d21-d31",
            "x9-correlator-d11-d11-d12",
            "x9-correlator-d11-d11-d22",
        ],
        Family::J10 => vec![
            "j10-correlator-d11-d11-d14",
            "j10-correlator-d11-d12-d13",
            "j10-correlator-d21-d21-d21",
            "j10-correlator-d11-d21-d31",
        ],
    }
}

#[derive(Debug, Clone)]
pub struct GoldenOutcome {
    pub fixture: String,
    pub matched: usize,
    /// Human-readable description of the first few mismatches.
    pub mismatches: Vec<String>,
}

impl GoldenOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Exact comparison of a computed series against a fixture prefix.
pub fn check_against(series: &PuiseuxSeries, golden: &GoldenFixture) -> GoldenOutcome {
    let window = Exp::from_integer(golden.window);
    let mut mismatches = Vec::new();
    let mut matched = 0usize;
    let listed = golden.values();
    for (e, want) in &listed {
        let got = series.coeff(*e);
        let want_c = Cyclotomic::from_rat(want.clone());
        if got == want_c {
            matched += 1;
        } else {
            mismatches.push(format!(
                "exponent {e}: expected {want}, computed {}",
                got.display_string()
            ));
        }
    }
    for (e, c) in series.terms() {
        if e >= window || c.is_zero() {
            continue;
        }
        if !listed.iter().any(|(le, _)| *le == e) {
            mismatches.push(format!(
                "unexpected nonzero coefficient {} at exponent {e}",
                c.display_string()
            ));
        }
    }
    if series.trunc_order() < window {
        mismatches.push(format!(
            "series truncated at {} before the window {}",
            series.trunc_order(),
            golden.window
        ));
    }
    GoldenOutcome { fixture: golden.name.clone(), matched, mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse_and_cover_the_catalog() {
        let all = embedded_fixtures();
        assert_eq!(all.len(), 11);
        let corr: usize = Family::ALL
            .iter()
            .map(|f| correlator_fixture_names(*f).len())
            .sum();
        assert_eq!(corr, 9, "nine quoted correlators");
        for f in &all {
            assert!(f.family().is_some());
            assert!(!f.coefficients.is_empty());
            assert!(f.coefficients.iter().all(|(e, _)| *e < f.window));
        }
    }

    #[test]
    fn checker_flags_value_and_support_mismatches() {
        let g = fixture("p8-correlator-d1-d2-d3").unwrap();
        let mut s = PuiseuxSeries::zero(crate::series::Var::Q, 1, Exp::from_integer(20));
        for (e, v) in g.values() {
            s = s
                .try_add(&PuiseuxSeries::monomial(
                    crate::series::Var::Q,
                    Cyclotomic::from_rat(v),
                    e,
                    1,
                    Exp::from_integer(20),
                ))
                .unwrap();
        }
        assert!(check_against(&s, &g).passed());
        // perturb one coefficient
        let bad = s
            .try_add(&PuiseuxSeries::monomial(
                crate::series::Var::Q,
                Cyclotomic::one(),
                Exp::from_integer(4),
                1,
                Exp::from_integer(20),
            ))
            .unwrap();
        let out = check_against(&bad, &g);
        assert!(!out.passed());
        assert!(out.mismatches[0].contains("exponent 4"));
        // sneak in an off-support coefficient
        let bad = s
            .try_add(&PuiseuxSeries::monomial(
                crate::series::Var::Q,
                Cyclotomic::one(),
                Exp::from_integer(2),
                1,
                Exp::from_integer(20),
            ))
            .unwrap();
        assert!(!check_against(&bad, &g).passed());
    }
}

//! Statistical tests against reference values computed with scipy.

use avatar_core::eval::{paired_t_upper, shapiro_wilk, wilcoxon_upper};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    sample: Vec<f64>,
    shapiro: (f64, f64),
    t: (f64, f64),
    wilcoxon: Option<(f64, f64)>,
}

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

fn fixture() -> Fixture {
    serde_json::from_str(include_str!("fixtures/stats_oracle.json")).unwrap()
}

#[test]
fn shapiro_wilk_matches_reference() {
    for (i, c) in fixture().cases.iter().enumerate() {
        let r = shapiro_wilk(&c.sample).unwrap();
        assert!((r.statistic - c.shapiro.0).abs() < 1e-6, "case {i}: W {} vs {}", r.statistic, c.shapiro.0);
        assert!((r.p_value - c.shapiro.1).abs() < 1e-4, "case {i}: p {} vs {}", r.p_value, c.shapiro.1);
    }
}

#[test]
fn paired_t_matches_reference() {
    for (i, c) in fixture().cases.iter().enumerate() {
        let r = paired_t_upper(&c.sample).unwrap();
        assert!((r.statistic - c.t.0).abs() < 1e-6, "case {i}");
        assert!((r.p_value - c.t.1).abs() < 1e-4, "case {i}");
    }
}

#[test]
fn wilcoxon_matches_reference() {
    let mut checked = 0;
    for (i, c) in fixture().cases.iter().enumerate() {
        let Some((w, p)) = c.wilcoxon else { continue };
        let r = wilcoxon_upper(&c.sample).unwrap();
        assert!((r.statistic - w).abs() < 1e-6, "case {i}: W {} vs {w}", r.statistic);
        assert!((r.p_value - p).abs() < 1e-4, "case {i}: p {} vs {p}", r.p_value);
        checked += 1;
    }
    assert!(checked >= 45);
}

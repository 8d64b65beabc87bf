//! Set-based recovery rates of an estimated system variant set.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{floor_tol, intersection_count, UniqueVariantLog, Variant, VariantSet};

/// Ground truth of one system: all its variants, the observed part and
/// the unobserved rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemTruth {
    pub v_s: BTreeSet<Variant>,
    pub lplus: UniqueVariantLog,
    pub v_u: BTreeSet<Variant>,
}

impl SystemTruth {
    /// Builds the truth from `V_S` and an observed subset; `V_u` is the
    /// complement.
    pub fn new(v_s: BTreeSet<Variant>, lplus: UniqueVariantLog) -> Result<Self> {
        if let Some(v) = lplus.iter().find(|v| !v_s.contains(*v)) {
            return Err(Error::invalid(format!("observed variant {v:?} is not a system variant")));
        }
        let v_u = v_s.iter().filter(|v| !lplus.contains(v)).cloned().collect();
        Ok(SystemTruth { v_s, lplus, v_u })
    }
}

/// Splits `V_S` into `floor(ratio·|V_S|)` observed variants and the rest.
///
/// The observed part is a seeded random draw; if it holds no variant of
/// maximal length, its last member is swapped with the first such variant
/// left out. The observed part is kept in draw order.
pub fn split_system(v_s: &BTreeSet<Variant>, ratio: f64, seed: u64) -> Result<SystemTruth> {
    let n = v_s.len();
    if n < 2 {
        return Err(Error::invalid(format!("splitting needs at least 2 system variants, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0,1), got {ratio}")));
    }
    let n_obs = floor_tol(ratio * n as f64).clamp(1, n - 1);
    let mut order: Vec<&Variant> = v_s.iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let max_len = v_s.iter().map(Variant::len).max().unwrap_or(0);
    if !order[..n_obs].iter().any(|v| v.len() == max_len) {
        let j = n_obs + order[n_obs..].iter().position(|v| v.len() == max_len).expect("a longest variant exists");
        order.swap(n_obs - 1, j);
    }
    let lplus = order[..n_obs].iter().map(|v| (*v).clone()).collect();
    SystemTruth::new(v_s.clone(), lplus)
}

/// Integer counts behind every rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateCounts {
    /// `|V̂_S|`
    pub sampled: usize,
    /// `|V_S|`
    pub system: usize,
    /// `|L+|`
    pub observed: usize,
    /// `|V_u|`
    pub unobserved: usize,
    /// `|L+_e|`
    pub holdout: Option<usize>,
    /// `|V̂_S ∩ V_S|`
    pub realistic: usize,
    /// `|V̂_S ∩ L+|`
    pub hit_observed: usize,
    /// `|V̂_S ∩ V_u|`
    pub hit_unobserved: usize,
    /// `|V̂_S ∩ L+_e|`
    pub hit_holdout: Option<usize>,
}

/// Recovery rates of one estimate `V̂_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: RateCounts,
    pub tp: f64,
    pub fp: f64,
    pub tp_s: f64,
    pub tp_o: f64,
    pub tp_u: f64,
    pub tp_e: Option<f64>,
    pub s: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Rates of `v_hat_s` against the truth and, optionally, a holdout log.
/// An empty estimate has `tp = 0` and `fp = 1`.
pub fn compute_rates(
    v_hat_s: &dyn VariantSet,
    truth: &SystemTruth,
    lplus_e: Option<&dyn VariantSet>,
) -> Result<MetricsReport> {
    if truth.v_s.is_empty() {
        return Err(Error::invalid("rates need a non-empty system variant set"));
    }
    let realistic = intersection_count(v_hat_s, &truth.v_s);
    let hit_observed = intersection_count(v_hat_s, &truth.lplus);
    let hit_unobserved = intersection_count(v_hat_s, &truth.v_u);
    debug_assert_eq!(realistic, hit_observed + hit_unobserved);
    let counts = RateCounts {
        sampled: v_hat_s.size(),
        system: truth.v_s.len(),
        observed: truth.lplus.len(),
        unobserved: truth.v_u.len(),
        holdout: lplus_e.map(|e| e.size()),
        realistic,
        hit_observed,
        hit_unobserved,
        hit_holdout: lplus_e.map(|e| intersection_count(v_hat_s, e)),
    };
    let tp = ratio(realistic, counts.sampled);
    let tp_u = ratio(hit_unobserved, counts.unobserved);
    Ok(MetricsReport {
        tp,
        fp: 1.0 - tp,
        tp_s: ratio(realistic, counts.system),
        tp_o: ratio(hit_observed, counts.observed),
        tp_u,
        tp_e: counts.holdout.zip(counts.hit_holdout).map(|(d, n)| ratio(n, d)),
        s: score_s(tp, tp_u),
        counts,
    })
}

/// `(tp + tp_u)/√2`, the distance of `(tp, tp_u)` from the origin along
/// the diagonal.
pub fn score_s(tp: f64, tp_u: f64) -> f64 {
    (tp + tp_u) / std::f64::consts::SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Variant {
        let len = 1 + i % 4;
        Variant::from_labels((0..len).map(|j| format!("x{}", (i + j) % 7 + i * 10))).unwrap()
    }

    fn sys(n: usize) -> BTreeSet<Variant> {
        (0..n).map(v).collect()
    }

    #[test]
    fn split_sizes() {
        let t = split_system(&sys(178), 0.7, 1).unwrap();
        assert_eq!((t.lplus.len(), t.v_u.len()), (124, 54));
        let t = split_system(&sys(10), 0.7, 1).unwrap();
        assert_eq!((t.lplus.len(), t.v_u.len()), (7, 3));
        assert!(split_system(&sys(1), 0.7, 1).is_err());
        assert_eq!(split_system(&sys(2), 0.1, 0).unwrap().lplus.len(), 1);
    }

    #[test]
    fn split_forces_longest() {
        // one long variant among many short ones
        let mut vs: BTreeSet<Variant> = (0..30).map(|i| Variant::from_labels([format!("s{i}")]).unwrap()).collect();
        vs.insert(Variant::from_labels(["a", "b", "c"]).unwrap());
        for seed in 0..1000 {
            let t = split_system(&vs, 0.7, seed).unwrap();
            assert_eq!(t.lplus.max_len(), 3);
            assert_eq!(t.lplus.len(), 21);
            assert_eq!(t.lplus.len() + t.v_u.len(), 31);
        }
        assert_eq!(split_system(&vs, 0.7, 5).unwrap(), split_system(&vs, 0.7, 5).unwrap());
    }

    #[test]
    fn published_counts() {
        let vs = sys(178);
        let all: Vec<Variant> = vs.iter().cloned().collect();
        let truth = SystemTruth::new(vs, all[..124].iter().cloned().collect()).unwrap();
        let u: Vec<&Variant> = truth.v_u.iter().collect();
        let mut est: BTreeSet<Variant> = all[..97].iter().cloned().collect();
        est.extend(u[..23].iter().map(|x| (*x).clone()));
        est.extend((0..56).map(|i| Variant::from_labels([format!("fake{i}")]).unwrap()));
        let r = compute_rates(&est, &truth, None).unwrap();
        assert_eq!(r.counts.sampled, 176);
        assert!((r.tp - 0.6818).abs() < 5e-5);
        assert!((r.tp_s - 0.6742).abs() < 5e-5);
        assert!((r.tp_o - 0.7823).abs() < 5e-5);
        assert!((r.tp_u - 0.4259).abs() < 5e-5);
        assert_eq!(r.tp_e, None);
    }

    #[test]
    fn trivial_estimates() {
        let vs = sys(20);
        let t = split_system(&vs, 0.7, 3).unwrap();
        let r = compute_rates(&vs, &t, Some(&t.lplus)).unwrap();
        assert_eq!((r.tp, r.fp, r.tp_s, r.tp_o, r.tp_u, r.tp_e), (1.0, 0.0, 1.0, 1.0, 1.0, Some(1.0)));
        let fake: BTreeSet<Variant> = [Variant::from_labels(["zz"]).unwrap()].into();
        let r = compute_rates(&fake, &t, None).unwrap();
        assert_eq!((r.tp, r.tp_s, r.tp_o, r.tp_u), (0.0, 0.0, 0.0, 0.0));
        let r = compute_rates(&BTreeSet::new(), &t, None).unwrap();
        assert_eq!((r.tp, r.fp), (0.0, 1.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn score_values() {
        assert!((score_s(0.5, 0.5) - 0.7071).abs() < 1e-4);
        assert!((score_s(1.0, 1.0) - 2f64.sqrt()).abs() < 1e-12);
        assert!((score_s(0.65, 0.10) - 0.5303).abs() < 1e-4);
    }
}

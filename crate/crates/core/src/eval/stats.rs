//! Small-sample tests for comparing paired scores across systems.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Significance level of every test here.
pub const ALPHA: f64 = 0.05;

/// A test statistic and its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Shapiro-Wilk normality test (Royston's approximation, algorithm AS R94).
/// The p-value is for the null hypothesis of normality.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::invalid(format!("Shapiro-Wilk needs 3 to 5000 values, got {n}")));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("Shapiro-Wilk needs finite values"));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 * x[0].abs().max(1.0) {
        return Err(Error::Degenerate("Shapiro-Wilk on a constant sample".into()));
    }

    // coefficients for the lower half; the upper half mirrors them
    let half = n / 2;
    let mut a = vec![0.0; half];
    let an = n as f64;
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let z = std_normal();
        let m: Vec<f64> = (1..=half).map(|i| z.inverse_cdf((i as f64 - 0.375) / (an + 0.25))).collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }

    let mean = x.iter().sum::<f64>() / an;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let b: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum();
    let w = (b * b / ss).min(1.0);

    let p = if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - (0.75f64).sqrt().asin());
        p.clamp(0.0, 1.0)
    } else {
        let w1 = (1.0 - w).ln();
        let (y, mu, sigma) = if n <= 11 {
            let gamma = poly(&[-2.273, 0.459], an);
            if w1 >= gamma {
                return Ok(TestResult { statistic: w, p_value: 1e-99 });
            }
            let y = -(gamma - w1).ln();
            let mu = poly(&[0.5440, -0.39978, 0.025054, -6.714e-4], an);
            let sigma = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp();
            (y, mu, sigma)
        } else {
            let ln = an.ln();
            let mu = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln);
            let sigma = poly(&[-0.4803, -0.082676, 0.0030302], ln).exp();
            (w1, mu, sigma)
        };
        std_normal().sf((y - mu) / sigma)
    };
    Ok(TestResult { statistic: w, p_value: p })
}

/// Upper-tailed one-sample t-test on paired differences: is the mean
/// difference greater than zero?
pub fn paired_t_upper(diffs: &[f64]) -> Result<TestResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::invalid(format!("paired t-test needs at least 2 differences, got {n}")));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    if var.is_nan() || var <= 0.0 {
        return Err(Error::Degenerate("paired t-test on differences with zero variance".into()));
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(TestResult { statistic: t, p_value: dist.sf(t) })
}

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Largest sample handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 20;

/// Upper-tailed Wilcoxon signed-rank test. Zero differences are dropped;
/// the statistic is the rank sum of the positive differences.
///
/// Up to 20 differences the p-value enumerates all sign assignments of
/// the observed ranks; above that it uses the normal approximation with
/// a tie correction and no continuity correction.
pub fn wilcoxon_upper(diffs: &[f64]) -> Result<TestResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("Wilcoxon test needs finite differences"));
    }
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nz.is_empty() {
        return Err(Error::Degenerate("Wilcoxon test on all-zero differences".into()));
    }
    let n = nz.len();
    if n < 5 {
        return Err(Error::invalid(format!(
            "Wilcoxon test needs at least 5 nonzero differences, got {n}"
        )));
    }
    let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let p = if n <= WILCOXON_EXACT_MAX {
        // ranks are multiples of ½, so doubled ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut ways = vec![0f64; total + 1];
        ways[0] = 1.0;
        for &r in &doubled {
            for s in (r..=total).rev() {
                ways[s] += ways[s - r];
            }
        }
        let target = (2.0 * w).round() as usize;
        ways[target..].iter().sum::<f64>() / 2f64.powi(n as i32)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < abs.len() {
            let j = abs[i..].iter().take_while(|&&v| v == abs[i]).count();
            let t = j as f64;
            tie_term += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        std_normal().sf((w - mean) / var.sqrt())
    };
    Ok(TestResult { statistic: w, p_value: p.min(1.0) })
}

/// Which test the normality gate chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedTest {
    PairedT,
    Wilcoxon,
    /// All differences are zero; nothing to test.
    Degenerate,
}

/// Outcome of [`paired_comparison`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub n: usize,
    pub mean_difference: f64,
    /// Normality check on the differences, when it could be computed.
    pub normality: Option<TestResult>,
    pub test: PairedTest,
    pub result: Option<TestResult>,
    /// p-value used for the decision; 1 when the comparison is degenerate.
    pub p_value: f64,
    pub significant: bool,
    pub note: Option<String>,
}

/// Is the first member of each pair better? Differences that look normal
/// (Shapiro-Wilk p ≥ 0.05) go to the upper-tailed paired t-test, others to
/// the upper-tailed Wilcoxon test. Identical inputs are reported as a
/// degenerate comparison with p = 1.
pub fn paired_comparison(first: &[f64], second: &[f64]) -> Result<PairedComparison> {
    if first.len() != second.len() {
        return Err(Error::invalid("paired comparison needs samples of equal length"));
    }
    let diffs: Vec<f64> = first.iter().zip(second).map(|(a, b)| a - b).collect();
    let n = diffs.len();
    if n < 2 {
        return Err(Error::invalid(format!("paired comparison needs at least 2 pairs, got {n}")));
    }
    let mean_difference = diffs.iter().sum::<f64>() / n as f64;
    let degenerate = |note: &str| PairedComparison {
        n,
        mean_difference,
        normality: None,
        test: PairedTest::Degenerate,
        result: None,
        p_value: 1.0,
        significant: false,
        note: Some(note.to_string()),
    };
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(degenerate("all differences are zero"));
    }
    let normality = if n >= 3 {
        match shapiro_wilk(&diffs) {
            Ok(r) => Some(r),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let nonzero = diffs.iter().filter(|&&d| d != 0.0).count();
    let wants_wilcoxon = normality.is_some_and(|r| r.p_value < ALPHA);
    let (test, result, note) = if wants_wilcoxon && nonzero >= 5 {
        (PairedTest::Wilcoxon, wilcoxon_upper(&diffs)?, None)
    } else {
        let note = if wants_wilcoxon {
            Some("non-normal differences but too few for the Wilcoxon test; used the t-test".to_string())
        } else if normality.is_none() {
            Some("normality not checked".to_string())
        } else {
            None
        };
        match paired_t_upper(&diffs) {
            Ok(r) => (PairedTest::PairedT, r, note),
            Err(Error::Degenerate(_)) => return Ok(degenerate("differences are constant")),
            Err(e) => return Err(e),
        }
    };
    Ok(PairedComparison {
        n,
        mean_difference,
        normality,
        test,
        result: Some(result),
        p_value: result.p_value,
        significant: result.p_value < ALPHA,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapiro_small() {
        let r = shapiro_wilk(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-6);
        assert!((r.p_value - 1.0).abs() < 1e-6);
        let even: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(shapiro_wilk(&even).unwrap().statistic > 0.95);
        let mut outlier = vec![1.0; 12];
        for (i, x) in outlier.iter_mut().enumerate() {
            *x += i as f64 * 0.01;
        }
        outlier.push(100.0);
        let r = shapiro_wilk(&outlier).unwrap();
        assert!(r.statistic < 0.6 && r.p_value < 0.01, "{r:?}");
        assert!(matches!(shapiro_wilk(&[2.0; 5]), Err(Error::Degenerate(_))));
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn t_test() {
        let r = paired_t_upper(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.statistic - 3.4641).abs() < 1e-4);
        assert!((r.p_value - 0.0371).abs() < 1e-4);
        let r = paired_t_upper(&[-1.0, 1.0, -2.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-12);
        assert!(paired_t_upper(&[-1.0, -2.0, -3.0]).unwrap().p_value > 0.5);
        assert!(matches!(paired_t_upper(&[1.0, 1.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn wilcoxon_exact() {
        let r = wilcoxon_upper(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert!((r.p_value - 1.0 / 32.0).abs() < 1e-15);
        let pos: Vec<f64> = (1..=15).map(f64::from).collect();
        assert!((wilcoxon_upper(&pos).unwrap().p_value - 2f64.powi(-15)).abs() < 1e-18);
        assert!(matches!(wilcoxon_upper(&[0.0; 6]), Err(Error::Degenerate(_))));
        assert!(wilcoxon_upper(&[1.0, 2.0, 0.0]).is_err());
        // all negative: every assignment reaches W+ ≥ 0
        assert_eq!(wilcoxon_upper(&[-1.0, -2.0, -3.0, -4.0, -5.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn wilcoxon_antisymmetric_large() {
        let d: Vec<f64> = (1..=15).flat_map(|i| [i as f64, -(i as f64)]).collect();
        assert!((wilcoxon_upper(&d).unwrap().p_value - 0.5).abs() < 1e-12);
        let small: Vec<f64> = (1..=5).flat_map(|i| [i as f64, -(i as f64)]).collect();
        let p = wilcoxon_upper(&small).unwrap().p_value;
        assert!(p > 0.5 && p < 0.6, "{p}");
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let r = wilcoxon_upper(&[1.0, 1.0, 2.0, 2.0, -3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 1.5 + 1.5 + 3.5 + 3.5 + 6.0);
    }

    #[test]
    fn gate_branches() {
        let normal = [0.12, 0.31, -0.05, 0.22, 0.18, 0.09, 0.27, 0.15, 0.02, 0.20];
        let c = paired_comparison(&normal, &[0.0; 10]).unwrap();
        assert_eq!(c.test, PairedTest::PairedT);
        assert!(c.significant);
        let skewed = [0.01, 0.02, 0.015, 0.012, 0.018, 0.011, 0.013, 0.016, 0.014, 3.0];
        let c = paired_comparison(&skewed, &[0.0; 10]).unwrap();
        assert!(c.normality.unwrap().p_value < ALPHA);
        assert_eq!(c.test, PairedTest::Wilcoxon);
        let same = [0.3, 0.5, 0.7];
        let c = paired_comparison(&same, &same).unwrap();
        assert_eq!((c.test, c.p_value, c.significant), (PairedTest::Degenerate, 1.0, false));
    }
}

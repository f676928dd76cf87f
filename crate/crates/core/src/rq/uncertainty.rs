//! CLT-shaped uncertainty sets for inter-arrival times and workloads.
//!
//! The arrival set bounds every suffix sum of gaps from below,
//! `sum_{i=k}^n T_i - (n-k+1)/lambda >= -Gamma_a * sqrt(n-k+1)`, and the workload
//! set bounds suffix sums from above, both to `n` and to `n - 1`.

use crate::error::{Error, Result};
use crate::rq::normal;

/// Tail coefficient shared by every set built here (square-root scaling).
pub const TAIL_COEFFICIENT: f64 = 2.0;

/// Slack below this (scaled by the magnitude of the terms) still counts as inside.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Service-level constant `gamma` with `P(Z <= gamma) = sqrt(1 - epsilon)`.
///
/// The probability budget is split evenly between the arrival and the workload set,
/// so their joint coverage is `1 - epsilon`.
pub fn gamma_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(normal::quantile((1.0 - epsilon).sqrt()))
}

/// Parameters of one uncertainty set: `rate` is `lambda` for arrivals and `mu` for workloads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyParams {
    pub rate: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl UncertaintyParams {
    pub fn new(rate: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Domain(format!("sigma must be non-negative, got {sigma}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Domain(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { rate, sigma, gamma })
    }

    /// Variability parameter `Gamma = gamma * sigma`.
    pub fn variability(&self) -> f64 {
        self.gamma * self.sigma
    }

    pub fn tail_coefficient(&self) -> f64 {
        TAIL_COEFFICIENT
    }

    /// Builds params whose variability parameter is exactly `variability` (gamma fixed to 1).
    pub fn from_variability(rate: f64, variability: f64) -> Result<Self> {
        Self::new(rate, variability, 1.0)
    }
}

/// Which family of suffix-sum constraints a slack belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    /// Suffix sums running to the last element.
    ToLast,
    /// Suffix sums stopping one before the last element (workload sets only).
    ToSecondLast,
}

/// Result of a membership test. Indices `k` are 1-based, like the suffix start.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub holds: bool,
    /// First violated constraint in scan order (family, k).
    pub first_violation: Option<(ConstraintFamily, usize)>,
    /// Slack of the `ToLast` family for k = 1..=n (non-negative means satisfied).
    pub slack_to_last: Vec<f64>,
    /// Slack of the `ToSecondLast` family for k = 1..=n-1; empty for arrival sets.
    pub slack_to_second_last: Vec<f64>,
}

impl Membership {
    fn from_slacks(to_last: Vec<f64>, to_second_last: Vec<f64>, scale: f64) -> Self {
        let tol = MEMBERSHIP_TOL * scale.max(1.0);
        let first_violation = to_last
            .iter()
            .position(|&s| s < -tol)
            .map(|k| (ConstraintFamily::ToLast, k + 1))
            .or_else(|| {
                to_second_last
                    .iter()
                    .position(|&s| s < -tol)
                    .map(|k| (ConstraintFamily::ToSecondLast, k + 1))
            });
        Self {
            holds: first_violation.is_none(),
            first_violation,
            slack_to_last: to_last,
            slack_to_second_last: to_second_last,
        }
    }

    /// Largest absolute slack among the listed `ToLast` indices.
    pub fn max_abs_slack_to_last(&self, ks: impl IntoIterator<Item = usize>) -> f64 {
        ks.into_iter().map(|k| self.slack_to_last[k - 1].abs()).fold(0.0, f64::max)
    }
}

/// Suffix sums `s[k] = sum_{i>=k} v[i]` (0-based), with `s[len] = 0`.
fn suffix_sums(v: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; v.len() + 1];
    for i in (0..v.len()).rev() {
        s[i] = s[i + 1] + v[i];
    }
    s
}

/// Tests `T` against the arrival set of `params`.
pub fn check_membership_arrival(gaps: &[f64], params: &UncertaintyParams) -> Membership {
    let n = gaps.len();
    let big_gamma = params.variability();
    let mean = 1.0 / params.rate;
    let suffix = suffix_sums(gaps);
    let slacks = (1..=n)
        .map(|k| {
            let m = (n - k + 1) as f64;
            suffix[k - 1] - m * mean + big_gamma * m.sqrt()
        })
        .collect();
    let scale = suffix[0].abs() + n as f64 * mean;
    Membership::from_slacks(slacks, Vec::new(), scale)
}

/// Tests `X` against the workload set of `params` (both constraint families).
pub fn check_membership_workload(work: &[f64], params: &UncertaintyParams) -> Membership {
    let n = work.len();
    let big_gamma = params.variability();
    let mean = 1.0 / params.rate;
    let suffix = suffix_sums(work);
    let to_last = (1..=n)
        .map(|k| {
            let m = (n - k + 1) as f64;
            m * mean + big_gamma * m.sqrt() - suffix[k - 1]
        })
        .collect();
    let to_second_last = (1..n)
        .map(|k| {
            let m = (n - k) as f64;
            let partial = suffix[k - 1] - work[n - 1];
            m * mean + big_gamma * m.sqrt() - partial
        })
        .collect();
    let scale = suffix[0].abs() + n as f64 * mean;
    Membership::from_slacks(to_last, to_second_last, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on an independent CDF built from the erf Taylor series.
    fn oracle_gamma(epsilon: f64) -> f64 {
        fn series_cdf(x: f64) -> f64 {
            let z = x / std::f64::consts::SQRT_2;
            let mut term = z;
            let mut sum = z;
            for n in 1..200 {
                term *= -z * z / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            0.5 + sum / std::f64::consts::PI.sqrt()
        }
        let target = (1.0 - epsilon).sqrt();
        let (mut lo, mut hi) = (-6.0, 6.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series_cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn gamma_values_match_oracle() {
        // oracle: 2.574961455590..., 1.632218789616...
        for &eps in &[0.01, 0.1, 0.05, 0.3] {
            let g = gamma_from_epsilon(eps).unwrap();
            assert!((g - oracle_gamma(eps)).abs() < 1e-9, "eps {eps}");
        }
        assert!((gamma_from_epsilon(0.01).unwrap() - 2.574_961_455_590_5).abs() < 1e-9);
        assert!((gamma_from_epsilon(0.1).unwrap() - 1.632_218_789_616_9).abs() < 1e-9);
        assert!(gamma_from_epsilon(0.75).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gamma_domain_errors() {
        for eps in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(gamma_from_epsilon(eps), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn gamma_is_monotone_and_accurate() {
        let mut prev = f64::INFINITY;
        for k in 1..1000 {
            let eps = k as f64 / 1000.0;
            let g = gamma_from_epsilon(eps).unwrap();
            assert!(g < prev);
            assert!((normal::cdf(g) - (1.0 - eps).sqrt()).abs() < 1e-10);
            prev = g;
        }
    }

    #[test]
    fn mean_gaps_are_members() {
        let p = UncertaintyParams::new(2.0, 0.3, 1.5).unwrap();
        let m = check_membership_arrival(&[0.5; 12], &p);
        assert!(m.holds);
        let w = UncertaintyParams::new(0.5, 0.3, 1.5).unwrap();
        assert!(check_membership_workload(&[2.0; 12], &w).holds);
    }

    #[test]
    fn bunched_arrivals_fail_at_first_suffix() {
        let p = UncertaintyParams::from_variability(1.0, 0.1).unwrap();
        let m = check_membership_arrival(&[0.0, 0.0, 0.0], &p);
        assert!(!m.holds);
        assert_eq!(m.first_violation, Some((ConstraintFamily::ToLast, 1)));
        assert!((m.slack_to_last[0] - (-3.0 + 0.1 * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn single_oversized_workload_fails() {
        let p = UncertaintyParams::from_variability(1.0, 0.4).unwrap();
        let m = check_membership_workload(&[1.0 + 2.0 * 0.4], &p);
        assert!(!m.holds);
        assert_eq!(m.first_violation, Some((ConstraintFamily::ToLast, 1)));
        assert!(m.slack_to_second_last.is_empty());
    }

    #[test]
    fn second_family_is_checked() {
        // last element small keeps the first family satisfied; the first n-1 are too big
        let p = UncertaintyParams::from_variability(1.0, 0.1).unwrap();
        let m = check_membership_workload(&[1.5, 1.5, 0.0], &p);
        assert!(m.slack_to_last.iter().all(|&s| s >= 0.0));
        assert_eq!(m.first_violation, Some((ConstraintFamily::ToSecondLast, 1)));
    }
}

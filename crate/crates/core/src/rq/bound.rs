//! Closed-form response-time bound and its server-wise quadratic SLA form.

use crate::error::{Error, Result};
use crate::primitives::ServerSpec;
use crate::rq::flows::ServerAggregate;

/// Default relative stability margin: speeds must exceed `omega_bar * (1 + margin)`.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Worst-case sojourn bound of a unit-speed queue with traffic intensity `rho < 1`.
pub fn sojourn_upper_bound(lambda: f64, gamma_a: f64, gamma_s: f64, rho: f64) -> f64 {
    let g = gamma_a + gamma_s;
    lambda * g * g / (2.0 * (1.0 - rho)) + (2.0 - rho) / lambda
}

/// Bound on the worst-case response time of server `agg` running at speed `x`.
pub fn response_time_bound(agg: &ServerAggregate, x: f64) -> Result<f64> {
    if !(x > agg.omega_bar) {
        return Err(Error::Stability {
            speed: x,
            demand: agg.omega_bar,
        });
    }
    Ok(bound_unchecked(agg, x))
}

#[inline]
pub(crate) fn bound_unchecked(agg: &ServerAggregate, x: f64) -> f64 {
    sojourn_upper_bound(agg.lambda_bar, agg.gamma_a_bar, agg.gamma_s_bar / x, agg.omega_bar / x)
}

/// `a x^2 + b x + c <= 0`, equivalent to `response_time_bound <= delta` for `x > stability_floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub stability_floor: f64,
}

impl SlaQuadratic {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    /// Real roots in increasing order; `None` when there are none or `a == 0`.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let d = self.discriminant();
        if self.a == 0.0 || d < 0.0 {
            return None;
        }
        let q = -0.5 * (self.b + self.b.signum() * d.sqrt());
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        let (r1, r2) = (q / self.a, self.c / q);
        Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
    }
}

/// Clears the two positive denominators of `response_time_bound(agg, x) <= delta`.
pub fn sla_quadratic(agg: &ServerAggregate, delta: f64) -> SlaQuadratic {
    let l = agg.lambda_bar;
    let (ga, gs, w) = (agg.gamma_a_bar, agg.gamma_s_bar, agg.omega_bar);
    SlaQuadratic {
        a: l * l * ga * ga + 4.0 - 2.0 * l * delta,
        b: 2.0 * (l * l * ga * gs + w * l * delta - 3.0 * w),
        c: l * l * gs * gs + 2.0 * w * w,
        stability_floor: w,
    }
}

/// Smallest speed in the server's box that satisfies the quadratic.
pub fn min_feasible_speed(q: &SlaQuadratic, server: &ServerSpec) -> Result<f64> {
    min_feasible_speed_in(q, server.speed_min, server.speed_max, STABILITY_MARGIN)
}

/// Smallest `x` in `[speed_min, speed_max]` with `x >= floor * (1 + margin)` and `q(x) <= 0`.
pub fn min_feasible_speed_in(q: &SlaQuadratic, speed_min: f64, speed_max: f64, margin: f64) -> Result<f64> {
    let lo = speed_min.max(q.stability_floor * (1.0 + margin));
    let infeasible = |required: Option<f64>| Error::InfeasibleSpeed {
        required,
        speed_min,
        speed_max,
    };
    // smallest point of [start, inf) inside the feasible set, before box clipping
    let required = if q.a < 0.0 {
        // no real roots means the concave quadratic is negative everywhere
        Some(q.roots().map_or(lo, |(_, r2)| r2.max(lo)))
    } else if q.a > 0.0 {
        match q.roots() {
            Some((r1, r2)) if r2 >= lo => Some(r1.max(lo)),
            _ => None,
        }
    } else if q.b < 0.0 {
        Some((-q.c / q.b).max(lo))
    } else {
        None
    };
    match required {
        Some(x) if x <= speed_max && lo <= speed_max => Ok(x),
        Some(x) => Err(infeasible(Some(x))),
        None => Err(infeasible(None)),
    }
}

/// Lower bound on the SLA left-hand side from the AM-GM inequality.
///
/// Tends to `2 * gamma_a_bar` as the speed grows.
pub fn feasibility_floor(agg: &ServerAggregate, x: f64) -> f64 {
    2.0 * (agg.gamma_a_bar + agg.gamma_s_bar / x) + agg.mu_bar_inv / x
}

/// Minimum of the bound over `[speed_min, speed_max]` restricted to stable speeds.
///
/// The bound is convex in `u = 1/x`, so a golden-section search on `u` suffices.
/// Returns `None` when no speed in the box is stable.
pub fn min_bound_in_box(agg: &ServerAggregate, speed_min: f64, speed_max: f64) -> Option<(f64, f64)> {
    let lo = speed_min.max(agg.omega_bar * (1.0 + 1e-9));
    if lo >= speed_max {
        return None;
    }
    let f = |u: f64| bound_unchecked(agg, 1.0 / u);
    let (mut a, mut b) = (1.0 / speed_max, 1.0 / lo);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let candidates = [1.0 / speed_max, 0.5 * (a + b), 1.0 / lo];
    candidates
        .iter()
        .map(|&u| (1.0 / u, f(u)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_agg() -> ServerAggregate {
        ServerAggregate {
            lambda_bar: 1.0,
            gamma_a_bar: 1.0,
            mu_bar_inv: 0.5,
            gamma_s_bar: 1.0,
            sigma_s_bar: 1.0,
            omega_bar: 0.5,
            gamma_level: 1.0,
        }
    }

    #[test]
    fn bound_examples() {
        let agg = unit_agg();
        assert!((response_time_bound(&agg, 1.0).unwrap() - 5.5).abs() < 1e-12);
        let far = response_time_bound(&agg, 1e12).unwrap();
        assert!((far - (0.5 + 2.0)).abs() < 1e-9);
        assert!(matches!(response_time_bound(&agg, 0.5), Err(Error::Stability { .. })));
    }

    #[test]
    fn worked_quadratic() {
        let agg = unit_agg();
        let q = sla_quadratic(&agg, 10.0);
        assert_eq!((q.a, q.b, q.c), (-15.0, 9.0, 1.5));
        let x = min_feasible_speed_in(&q, 1e-3, 100.0, STABILITY_MARGIN).unwrap();
        assert!((x - (9.0 + 171f64.sqrt()) / 30.0).abs() < 1e-12);
        assert!((x - 0.7359).abs() < 1e-4);
        assert!((response_time_bound(&agg, x).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn zero_threshold_is_infeasible() {
        let q = sla_quadratic(&unit_agg(), 0.0);
        assert!(q.a > 0.0 && q.c > 0.0);
        assert!(min_feasible_speed_in(&q, 1e-3, 1e6, STABILITY_MARGIN).is_err());
    }

    #[test]
    fn required_speed_above_box_is_reported() {
        let q = sla_quadratic(&unit_agg(), 10.0);
        match min_feasible_speed_in(&q, 0.1, 0.7, STABILITY_MARGIN) {
            Err(Error::InfeasibleSpeed { required: Some(r), .. }) => assert!((r - 0.7359).abs() < 1e-4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn box_minimum_brackets_grid() {
        let agg = unit_agg();
        let (_, best) = min_bound_in_box(&agg, 0.6, 50.0).unwrap();
        let grid = (0..20000)
            .map(|k| 0.6 + (50.0 - 0.6) * k as f64 / 19999.0)
            .map(|x| bound_unchecked(&agg, x))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= grid + 1e-9);
    }

    #[test]
    fn floor_tends_to_twice_gamma_a() {
        let agg = unit_agg();
        assert!((feasibility_floor(&agg, 1e12) - 2.0).abs() < 1e-9);
        for x in [0.6, 1.0, 3.0, 40.0] {
            assert!(feasibility_floor(&agg, x) <= response_time_bound(&agg, x).unwrap());
        }
    }
}

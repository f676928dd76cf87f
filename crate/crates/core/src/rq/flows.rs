//! Thinning of application streams by routing probabilities and superposition
//! of the thinned flows into one server-level uncertainty description.

use crate::error::{Error, Result};
use crate::primitives::{AppParams, ApplicationSpec, STRUCTURAL_ZERO};
use crate::rq::uncertainty::UncertaintyParams;

/// Arrival-side parameters of the flow `i -> j` before a service level is bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinnedArrivals {
    pub rate: f64,
    pub sigma: f64,
}

impl ThinnedArrivals {
    /// Attaches the service-level constant of the receiving server.
    pub fn bind(&self, gamma: f64) -> Result<UncertaintyParams> {
        UncertaintyParams::new(self.rate, self.sigma, gamma)
    }
}

/// Splits application `app` with probability `p`.
///
/// Gaps of a geometrically thinned renewal stream have mean `1/(lambda p)` and
/// variance `Var(T) / (p (2 - p))`.
pub fn thin(app: &ApplicationSpec, p: f64) -> Result<ThinnedArrivals> {
    thin_params(&app.params(), p)
}

pub fn thin_params(app: &AppParams, p: f64) -> Result<ThinnedArrivals> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("routing probability must lie in (0, 1], got {p}")));
    }
    Ok(ThinnedArrivals {
        rate: app.lambda * p,
        sigma: app.sigma_a / (p * (2.0 - p)).sqrt(),
    })
}

/// Merged uncertainty parameters of everything routed to one server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerAggregate {
    pub lambda_bar: f64,
    pub gamma_a_bar: f64,
    pub mu_bar_inv: f64,
    pub gamma_s_bar: f64,
    pub sigma_s_bar: f64,
    pub omega_bar: f64,
    pub gamma_level: f64,
}

/// Superposes the flows `(app, p_ij)` entering a server with service level `gamma_level`.
///
/// Flows with `p <= STRUCTURAL_ZERO` are ignored; if nothing is left the aggregate
/// is undefined.
pub fn superpose<'a>(
    flows: impl IntoIterator<Item = (&'a AppParams, f64)>,
    gamma_level: f64,
) -> Result<ServerAggregate> {
    let mut lambda_bar = 0.0;
    let mut scov_sum = 0.0;
    let mut work_sum = 0.0;
    let mut second_moment = 0.0;
    let mut omega_bar = 0.0;
    for (app, p) in flows {
        if p <= STRUCTURAL_ZERO {
            continue;
        }
        if p > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("routing probability {p} exceeds 1")));
        }
        let rate = app.lambda * p;
        lambda_bar += rate;
        scov_sum += p / (2.0 - p) * app.ca2;
        work_sum += rate * app.mean_work;
        second_moment += rate * (app.sigma_s * app.sigma_s + app.mean_work * app.mean_work);
        omega_bar += app.omega * p;
    }
    if lambda_bar == 0.0 {
        return Err(Error::Degenerate);
    }
    let mu_bar_inv = work_sum / lambda_bar;
    // mixture variance: E[sigma^2 + (m - mean)^2] = E[sigma^2 + m^2] - mean^2
    let var_s = (second_moment / lambda_bar - mu_bar_inv * mu_bar_inv).max(0.0);
    let sigma_s_bar = var_s.sqrt();
    Ok(ServerAggregate {
        lambda_bar,
        gamma_a_bar: gamma_level / lambda_bar * scov_sum.sqrt(),
        mu_bar_inv,
        gamma_s_bar: gamma_level * sigma_s_bar,
        sigma_s_bar,
        omega_bar,
        gamma_level,
    })
}

impl ServerAggregate {
    /// Traffic intensity at speed `x`.
    pub fn rho(&self, x: f64) -> f64 {
        self.omega_bar / x
    }
}

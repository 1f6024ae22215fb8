//! Hierarchical Dirichlet regression of daily topic shares on prime-minister
//! level effects, decaying election effects and sitting-period effects.
//!
//! For chamber `c`, sitting period `s` and topic `p`:
//!
//! ```text
//! θ_{c,d,1:P} ~ Dirichlet(μ_{c,s,1:P})
//! log μ_{c,s,p} = α_{g,p} + β_{e,p} (N_e − s) + δ_{c,s,p}
//! δ_{c,s,p} ~ Normal(μ_{c,p}, σ_{g,p}²)
//! ```
//!
//! where `g` and `e` are the government and election in force, `s` counts
//! sitting periods from 1 within the election period and `N_e` is that
//! period's number of sitting periods.

mod analysis;
mod model;
mod posterior;
mod sampler;
mod simulate;
mod timeline;

pub use analysis::{
    compare_neighbors, detect_outlier_days, dirichlet_moments, write_election_table, write_government_table,
    write_outliers_csv, Comparison, Level, OutlierDay,
};
pub use model::{log_posterior, ModelData, Params};
pub use posterior::{Block, ChainDraws, EventPosterior};
pub use sampler::fit;
pub use simulate::{perturb_share, simulate_panel, SimulatedPanel, SimulationDesign, SimulationTruth};
pub use timeline::{Election, Government, Timeline};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DEFAULT_SEED;
use crate::stats::ln_gamma;

/// Priors and sampler settings of the event model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventModelSpec {
    /// Number of topic groups; must match the panel.
    pub p: usize,
    pub prior_sd_alpha: f64,
    pub prior_sd_beta: f64,
    /// Prior SD of the chamber-topic means of the sitting-period effects.
    pub prior_sd_mu: f64,
    /// Upper bound of the uniform prior on the sitting-period effect scales.
    pub sigma_upper: f64,
    pub chains: usize,
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for EventModelSpec {
    fn default() -> Self {
        EventModelSpec {
            p: 19,
            prior_sd_alpha: 10.0,
            prior_sd_beta: 10.0,
            prior_sd_mu: 10.0,
            sigma_upper: 3.0,
            chains: 4,
            iters: 2000,
            burn_in: 1000,
            thin: 1,
            seed: DEFAULT_SEED,
        }
    }
}

impl EventModelSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.prior_sd_alpha,
            self.prior_sd_beta,
            self.prior_sd_mu,
            self.sigma_upper,
        ];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid("prior scales must be positive and finite"));
        }
        if self.p < 2 {
            return Err(Error::invalid("the event model needs at least two topic groups"));
        }
        if self.chains == 0 || self.thin == 0 || self.iters <= self.burn_in {
            return Err(Error::invalid(format!(
                "need chains > 0, thin > 0 and iters > burn_in (iters = {}, burn_in = {})",
                self.iters, self.burn_in
            )));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn draws_per_chain(&self) -> usize {
        (self.iters - self.burn_in).div_ceil(self.thin)
    }
}

/// Linear predictor `α + β (N − s) + δ` of one log concentration, with `s`
/// counted from 1 within an election period of `n` sitting periods.
pub fn log_concentration(alpha: f64, beta: f64, n: usize, s: usize, delta: f64) -> f64 {
    alpha + beta * (n as f64 - s as f64) + delta
}

/// Log density of a Dirichlet distribution at an interior point of the simplex.
pub fn dirichlet_loglik(theta: &[f64], concentration: &[f64]) -> Result<f64> {
    if theta.len() != concentration.len() || theta.is_empty() {
        return Err(Error::invalid("share and concentration vectors differ in length"));
    }
    if concentration.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::model("Dirichlet concentrations must be positive and finite"));
    }
    if theta.iter().any(|&t| !(t > 0.0)) || (theta.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("shares must lie strictly inside the simplex"));
    }
    let total: f64 = concentration.iter().sum();
    let mut ll = ln_gamma(total);
    for (&t, &a) in theta.iter().zip(concentration) {
        ll += (a - 1.0) * t.ln() - ln_gamma(a);
    }
    Ok(ll)
}

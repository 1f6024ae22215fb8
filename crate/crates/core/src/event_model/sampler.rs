use rand::Rng as _;
use rayon::prelude::*;

use super::model::{log_posterior, normal_logpdf, ModelData, Params};
use super::posterior::{ChainDraws, EventPosterior};
use super::{EventModelSpec, Timeline};
use crate::cap_mapping::ThetaPanel;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats::{ln_gamma, standard_normal};

const TARGET_ACCEPT: f64 = 0.44;
const JITTER_SD: f64 = 0.1;

/// Fits the event model by Metropolis-within-Gibbs, one chain per seeded stream.
pub fn fit(panel: &ThetaPanel, timeline: &Timeline, spec: &EventModelSpec) -> Result<EventPosterior> {
    spec.validate()?;
    if panel.p() != spec.p {
        return Err(Error::invalid(format!(
            "panel has {} topic groups but the model expects {}",
            panel.p(),
            spec.p
        )));
    }
    let data = ModelData::new(panel, timeline)?;
    let start = initial_delta(panel, &data);
    let chains: Vec<ChainDraws> = (0..spec.chains)
        .into_par_iter()
        .map(|c| run_chain(&data, spec, &start, rng::stream(spec.seed, c as u64)))
        .collect::<Result<_>>()?;
    let post = EventPosterior::new(spec.clone(), data, timeline, chains);
    let (n, over) = post.rhat_counts();
    if over as f64 > 0.05 * n as f64 {
        log::warn!("{over} of {n} parameters have split R-hat above 1.1; the chains may not have converged");
    }
    Ok(post)
}

/// Method-of-moments start for the sitting-period effects: log of the cell
/// mean share times a moment estimate of the cell's total concentration.
fn initial_delta(panel: &ThetaPanel, data: &ModelData) -> Vec<f64> {
    let np = data.p;
    let nc = data.cells.len();
    let mut sum = vec![0.0; nc * np];
    let mut sq = vec![0.0; nc * np];
    for (row, &i) in panel.shares.iter_rows().zip(&data.row_cell) {
        for (p, &x) in row.iter().enumerate() {
            sum[i * np + p] += x;
            sq[i * np + p] += x * x;
        }
    }
    let mut totals: Vec<Option<f64>> = Vec::with_capacity(nc);
    for (i, cell) in data.cells.iter().enumerate() {
        let n = cell.n_days;
        if n < 2.0 {
            totals.push(None);
            continue;
        }
        let mut estimates: Vec<f64> = (0..np)
            .filter_map(|p| {
                let m = sum[i * np + p] / n;
                let v = (sq[i * np + p] - n * m * m) / (n - 1.0);
                let a = m * (1.0 - m) / v - 1.0;
                (v > 0.0 && a.is_finite() && a > 0.0).then_some(a)
            })
            .collect();
        estimates.sort_by(f64::total_cmp);
        totals.push(estimates.get(estimates.len() / 2).copied());
    }
    let mut valid: Vec<f64> = totals.iter().flatten().copied().collect();
    valid.sort_by(f64::total_cmp);
    let fallback = valid.get(valid.len() / 2).copied().unwrap_or(np as f64);
    let mut delta = vec![0.0; nc * np];
    for (i, cell) in data.cells.iter().enumerate() {
        let a = totals[i].unwrap_or(fallback).clamp(1.0, 1e4);
        for p in 0..np {
            delta[i * np + p] = (a * sum[i * np + p] / cell.n_days).ln();
        }
    }
    delta
}

struct Chain<'a> {
    data: &'a ModelData,
    spec: &'a EventModelSpec,
    x: Params,
    conc: Vec<f64>,
    conc_sum: Vec<f64>,
    log_step_alpha: Vec<f64>,
    log_step_beta: Vec<f64>,
    log_step_delta: Vec<f64>,
    log_step_sigma: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

fn run_chain(data: &ModelData, spec: &EventModelSpec, start: &[f64], mut rng: Rng) -> Result<ChainDraws> {
    let mut chain = Chain::new(data, spec, start, &mut rng);
    if !log_posterior(data, &chain.x, spec).is_finite() {
        return Err(Error::model("log posterior is not finite at the initial values"));
    }
    let n_draws = spec.draws_per_chain();
    let mut draws = ChainDraws::with_capacity(&chain.x, n_draws, spec.iters);
    for iter in 0..spec.iters {
        let gain = (iter < spec.burn_in).then(|| 1.0 / ((iter + 1) as f64).powf(0.6));
        chain.iterate(&mut rng, gain);
        let lp = log_posterior(data, &chain.x, spec);
        if !lp.is_finite() {
            return Err(Error::model(format!(
                "log posterior became non-finite at iteration {iter}"
            )));
        }
        draws.loglik.push(lp);
        if iter >= spec.burn_in && (iter - spec.burn_in).is_multiple_of(spec.thin) {
            draws.push(&chain.x);
        }
    }
    draws.acceptance = chain.accepted as f64 / chain.proposed.max(1) as f64;
    Ok(draws)
}

fn reflect(mut x: f64, upper: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > upper {
            x = 2.0 * upper - x;
        } else {
            return x;
        }
    }
}

impl<'a> Chain<'a> {
    fn new(data: &'a ModelData, spec: &'a EventModelSpec, start: &[f64], rng: &mut Rng) -> Self {
        let np = data.p;
        let mut x = Params::zeros(data);
        for (d, &s) in x.delta.iter_mut().zip(start) {
            *d = s + JITTER_SD * standard_normal(rng);
        }
        for c in 0..2 {
            let cells = &data.chamber_cells[c];
            if cells.is_empty() {
                continue;
            }
            for p in 0..np {
                x.mu[c * np + p] = cells.iter().map(|&i| x.delta[i * np + p]).sum::<f64>() / cells.len() as f64;
            }
        }
        let sigma_max = 2.9f64.min(0.97 * spec.sigma_upper);
        for (g, cells) in data.government_cells.iter().enumerate() {
            for p in 0..np {
                x.sigma[g * np + p] = if cells.len() < 2 {
                    1.0f64.min(0.5 * spec.sigma_upper)
                } else {
                    let r: Vec<f64> = cells
                        .iter()
                        .map(|&i| x.delta[i * np + p] - x.mu[data.cells[i].chamber.index() * np + p])
                        .collect();
                    let m = r.iter().sum::<f64>() / r.len() as f64;
                    let v = r.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
                    v.sqrt().clamp(0.05f64.min(sigma_max), sigma_max)
                };
            }
        }
        let mut chain = Chain {
            data,
            spec,
            conc: vec![0.0; data.cells.len() * np],
            conc_sum: vec![0.0; data.cells.len()],
            log_step_alpha: vec![(0.1f64).ln(); x.alpha.len()],
            log_step_beta: vec![(0.02f64).ln(); x.beta.len()],
            log_step_delta: vec![(0.2f64).ln(); x.delta.len()],
            log_step_sigma: vec![(0.1f64).ln(); x.sigma.len()],
            x,
            accepted: 0,
            proposed: 0,
        };
        chain.refresh();
        chain
    }

    fn refresh(&mut self) {
        let np = self.data.p;
        for i in 0..self.data.cells.len() {
            let mut total = 0.0;
            for p in 0..np {
                let a = self.x.linear_predictor(self.data, i, p).exp();
                self.conc[i * np + p] = a;
                total += a;
            }
            self.conc_sum[i] = total;
        }
    }

    /// Change in log-likelihood when topic `p` of cell `i` moves to concentration `a_new`.
    fn delta_ll(&self, i: usize, p: usize, a_new: f64) -> f64 {
        let cell = &self.data.cells[i];
        let a = self.conc[i * self.data.p + p];
        let total = self.conc_sum[i];
        cell.n_days * (ln_gamma(total - a + a_new) - ln_gamma(total) - ln_gamma(a_new) + ln_gamma(a))
            + (a_new - a) * cell.sum_log[p]
    }

    fn set_conc(&mut self, i: usize, p: usize, a_new: f64) {
        let k = i * self.data.p + p;
        self.conc_sum[i] += a_new - self.conc[k];
        self.conc[k] = a_new;
    }

    fn accept(&mut self, rng: &mut Rng, log_ratio: f64) -> bool {
        self.proposed += 1;
        let ok = log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio);
        if ok {
            self.accepted += 1;
        }
        ok
    }

    fn iterate(&mut self, rng: &mut Rng, gain: Option<f64>) {
        self.update_delta(rng, gain);
        self.update_alpha(rng, gain);
        self.update_beta(rng, gain);
        self.update_mu(rng);
        self.update_sigma(rng, gain);
        self.shift_government(rng);
        self.shift_election(rng);
        self.shift_global(rng);
        self.refresh();
    }

    fn update_delta(&mut self, rng: &mut Rng, gain: Option<f64>) {
        let data = self.data;
        let np = data.p;
        for (i, cell) in data.cells.iter().enumerate() {
            for p in 0..np {
                let k = i * np + p;
                let step = self.log_step_delta[k].exp();
                let old = self.x.delta[k];
                let new = old + step * standard_normal(rng);
                let a_new = self.conc[k] * (new - old).exp();
                let mean = self.x.mu[cell.chamber.index() * np + p];
                let sd = self.x.sigma[cell.government * np + p];
                let mut ratio = normal_logpdf(new, mean, sd) - normal_logpdf(old, mean, sd);
                if a_new > 0.0 && a_new.is_finite() {
                    ratio += self.delta_ll(i, p, a_new);
                } else {
                    ratio = f64::NEG_INFINITY;
                }
                let ok = self.accept(rng, ratio);
                if ok {
                    self.x.delta[k] = new;
                    self.set_conc(i, p, a_new);
                }
                adapt(&mut self.log_step_delta[k], ok, gain);
            }
        }
    }

    /// Random-walk update of one regression coefficient whose change `d` moves
    /// the log concentration of each listed cell by `d · weight`.
    fn update_coefficient(
        &mut self,
        rng: &mut Rng,
        cells: &[usize],
        weights: &[f64],
        p: usize,
        old: f64,
        log_step: f64,
        prior_sd: f64,
    ) -> Option<f64> {
        let np = self.data.p;
        let new = old + log_step.exp() * standard_normal(rng);
        let d = new - old;
        let mut ratio = normal_logpdf(new, 0.0, prior_sd) - normal_logpdf(old, 0.0, prior_sd);
        let mut proposals = Vec::with_capacity(cells.len());
        for (&i, &w) in cells.iter().zip(weights) {
            let a_new = self.conc[i * np + p] * (d * w).exp();
            if !(a_new > 0.0 && a_new.is_finite()) {
                ratio = f64::NEG_INFINITY;
                break;
            }
            ratio += self.delta_ll(i, p, a_new);
            proposals.push(a_new);
        }
        if self.accept(rng, ratio) {
            for (&i, a_new) in cells.iter().zip(proposals) {
                self.set_conc(i, p, a_new);
            }
            Some(new)
        } else {
            None
        }
    }

    fn update_alpha(&mut self, rng: &mut Rng, gain: Option<f64>) {
        let data = self.data;
        let np = data.p;
        for (g, cells) in data.government_cells.iter().enumerate() {
            if cells.is_empty() {
                continue;
            }
            let weights = vec![1.0; cells.len()];
            for p in 0..np {
                let k = g * np + p;
                let res = self.update_coefficient(
                    rng,
                    cells,
                    &weights,
                    p,
                    self.x.alpha[k],
                    self.log_step_alpha[k],
                    self.spec.prior_sd_alpha,
                );
                if let Some(v) = res {
                    self.x.alpha[k] = v;
                }
                adapt(&mut self.log_step_alpha[k], res.is_some(), gain);
            }
        }
    }

    fn update_beta(&mut self, rng: &mut Rng, gain: Option<f64>) {
        let data = self.data;
        let np = data.p;
        for (e, cells) in data.election_cells.iter().enumerate() {
            let weights: Vec<f64> = cells.iter().map(|&i| data.cells[i].decay).collect();
            if weights.iter().all(|&w| w == 0.0) {
                continue;
            }
            for p in 0..np {
                let k = e * np + p;
                let res = self.update_coefficient(
                    rng,
                    cells,
                    &weights,
                    p,
                    self.x.beta[k],
                    self.log_step_beta[k],
                    self.spec.prior_sd_beta,
                );
                if let Some(v) = res {
                    self.x.beta[k] = v;
                }
                adapt(&mut self.log_step_beta[k], res.is_some(), gain);
            }
        }
    }

    /// Conjugate normal draw of each chamber-topic mean.
    fn update_mu(&mut self, rng: &mut Rng) {
        let data = self.data;
        let np = data.p;
        for c in 0..2 {
            for p in 0..np {
                let mut precision = 1.0 / self.spec.prior_sd_mu.powi(2);
                let mut weighted = 0.0;
                for &i in &data.chamber_cells[c] {
                    let v = self.x.sigma[data.cells[i].government * np + p].powi(2);
                    precision += 1.0 / v;
                    weighted += self.x.delta[i * np + p] / v;
                }
                self.x.mu[c * np + p] = weighted / precision + standard_normal(rng) / precision.sqrt();
            }
        }
    }

    fn update_sigma(&mut self, rng: &mut Rng, gain: Option<f64>) {
        let data = self.data;
        let np = data.p;
        let upper = self.spec.sigma_upper;
        for (g, cells) in data.government_cells.iter().enumerate() {
            for p in 0..np {
                let k = g * np + p;
                if cells.is_empty() {
                    self.x.sigma[k] = upper * rng.random::<f64>();
                    continue;
                }
                let ss: f64 = cells
                    .iter()
                    .map(|&i| (self.x.delta[i * np + p] - self.x.mu[data.cells[i].chamber.index() * np + p]).powi(2))
                    .sum();
                let n = cells.len() as f64;
                let target = |s: f64| -n * s.ln() - ss / (2.0 * s * s);
                let old = self.x.sigma[k];
                let new = reflect(old + self.log_step_sigma[k].exp() * standard_normal(rng), upper);
                let ok = new > 0.0 && new < upper && self.accept(rng, target(new) - target(old));
                if ok {
                    self.x.sigma[k] = new;
                }
                adapt(&mut self.log_step_sigma[k], ok, gain);
            }
        }
    }

    /// Gibbs draw along `α_{g,p} + c`, `δ_{·,p} − c` on the cells of `g`, a
    /// direction that leaves every concentration unchanged.
    fn shift_government(&mut self, rng: &mut Rng) {
        let data = self.data;
        let np = data.p;
        let tau2 = self.spec.prior_sd_alpha.powi(2);
        for (g, cells) in data.government_cells.iter().enumerate() {
            for p in 0..np {
                let v = self.x.sigma[g * np + p].powi(2);
                let alpha = self.x.alpha[g * np + p];
                let precision = 1.0 / tau2 + cells.len() as f64 / v;
                let resid: f64 = cells
                    .iter()
                    .map(|&i| self.x.delta[i * np + p] - self.x.mu[data.cells[i].chamber.index() * np + p])
                    .sum();
                let mean = (-alpha / tau2 + resid / v) / precision;
                let c = mean + standard_normal(rng) / precision.sqrt();
                self.x.alpha[g * np + p] += c;
                for &i in cells {
                    self.x.delta[i * np + p] -= c;
                }
            }
        }
    }

    /// Gibbs draw along `β_{e,p} + c`, `δ_{i,p} − c (N_e − s_i)` on the cells of `e`.
    fn shift_election(&mut self, rng: &mut Rng) {
        let data = self.data;
        let np = data.p;
        let tau2 = self.spec.prior_sd_beta.powi(2);
        for (e, cells) in data.election_cells.iter().enumerate() {
            for p in 0..np {
                let beta = self.x.beta[e * np + p];
                let mut precision = 1.0 / tau2;
                let mut weighted = -beta / tau2;
                for &i in cells {
                    let cell = &data.cells[i];
                    let w = cell.decay;
                    let v = self.x.sigma[cell.government * np + p].powi(2);
                    precision += w * w / v;
                    weighted += w * (self.x.delta[i * np + p] - self.x.mu[cell.chamber.index() * np + p]) / v;
                }
                let c = weighted / precision + standard_normal(rng) / precision.sqrt();
                self.x.beta[e * np + p] += c;
                for &i in cells {
                    self.x.delta[i * np + p] -= c * data.cells[i].decay;
                }
            }
        }
    }

    /// Gibbs draw along `α_{·,p} + c`, `μ_{·,p} − c`, `δ_{·,p} − c`.
    fn shift_global(&mut self, rng: &mut Rng) {
        let data = self.data;
        let np = data.p;
        let ta = self.spec.prior_sd_alpha.powi(2);
        let tm = self.spec.prior_sd_mu.powi(2);
        for p in 0..np {
            let alpha_sum: f64 = (0..data.n_governments).map(|g| self.x.alpha[g * np + p]).sum();
            let mu_sum = self.x.mu[p] + self.x.mu[np + p];
            let precision = data.n_governments as f64 / ta + 2.0 / tm;
            let mean = (-alpha_sum / ta + mu_sum / tm) / precision;
            let c = mean + standard_normal(rng) / precision.sqrt();
            for g in 0..data.n_governments {
                self.x.alpha[g * np + p] += c;
            }
            self.x.mu[p] -= c;
            self.x.mu[np + p] -= c;
            for i in 0..data.cells.len() {
                self.x.delta[i * np + p] -= c;
            }
        }
    }
}

fn adapt(log_step: &mut f64, accepted: bool, gain: Option<f64>) {
    if let Some(g) = gain {
        *log_step += g * (if accepted { 1.0 } else { 0.0 } - TARGET_ACCEPT);
    }
}

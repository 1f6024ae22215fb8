use std::collections::BTreeMap;

use super::{EventModelSpec, Timeline};
use crate::cap_mapping::ThetaPanel;
use crate::error::{Error, Result};
use crate::record_parser::Chamber;
use crate::stats::ln_gamma;

/// One chamber × sitting period with its sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub chamber: Chamber,
    pub period_id: usize,
    /// Index into the timeline's governments.
    pub government: usize,
    /// Index into the timeline's elections.
    pub election: usize,
    /// Sitting periods left in the election period, `N_e − s`.
    pub decay: f64,
    pub n_days: f64,
    /// `Σ_d log θ_{d,p}` over the cell's days.
    pub sum_log: Vec<f64>,
}

/// The panel reduced to per-cell statistics, indexed against a timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub p: usize,
    pub n_governments: usize,
    pub n_elections: usize,
    pub cells: Vec<Cell>,
    /// Cell of each panel row.
    pub row_cell: Vec<usize>,
    pub government_cells: Vec<Vec<usize>>,
    pub election_cells: Vec<Vec<usize>>,
    pub chamber_cells: [Vec<usize>; 2],
}

impl ModelData {
    pub fn new(panel: &ThetaPanel, timeline: &Timeline) -> Result<Self> {
        let p = panel.p();
        let mut period_units: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for r in &panel.rows {
            let g = timeline.government_index(r.government_id).ok_or_else(|| {
                Error::invalid(format!("panel government {} is not in the timeline", r.government_id))
            })?;
            let e = timeline
                .election_index(r.election_id)
                .ok_or_else(|| Error::invalid(format!("panel election {} is not in the timeline", r.election_id)))?;
            if *period_units.entry(r.period_id).or_insert((g, e)) != (g, e) {
                return Err(Error::invalid(format!(
                    "sitting period {} is assigned to more than one government or election",
                    r.period_id
                )));
            }
        }
        // Position of each period within its election period, counted from 1.
        let mut election_periods: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&s, &(_, e)) in &period_units {
            election_periods.entry(e).or_default().push(s);
        }
        let mut decay_of_period = BTreeMap::new();
        for periods in election_periods.values() {
            let n = periods.len();
            for (i, &s) in periods.iter().enumerate() {
                decay_of_period.insert(s, (n - (i + 1)) as f64);
            }
        }

        let mut cell_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in &panel.rows {
            let len = cell_of.len();
            cell_of.entry((r.chamber.index(), r.period_id)).or_insert(len);
        }
        // Renumber cells in (chamber, period) order.
        let keys: Vec<(usize, usize)> = cell_of.keys().copied().collect();
        for (i, k) in keys.iter().enumerate() {
            cell_of.insert(*k, i);
        }
        let mut cells: Vec<Cell> = keys
            .iter()
            .map(|&(c, s)| {
                let (g, e) = period_units[&s];
                Cell {
                    chamber: if c == 0 {
                        Chamber::HouseOfRepresentatives
                    } else {
                        Chamber::Senate
                    },
                    period_id: s,
                    government: g,
                    election: e,
                    decay: decay_of_period[&s],
                    n_days: 0.0,
                    sum_log: vec![0.0; p],
                }
            })
            .collect();
        let mut row_cell = Vec::with_capacity(panel.len());
        for (r, shares) in panel.rows.iter().zip(panel.shares.iter_rows()) {
            let i = cell_of[&(r.chamber.index(), r.period_id)];
            let cell = &mut cells[i];
            cell.n_days += 1.0;
            for (s, &x) in cell.sum_log.iter_mut().zip(shares) {
                *s += x.ln();
            }
            row_cell.push(i);
        }

        let mut government_cells = vec![Vec::new(); timeline.governments().len()];
        let mut election_cells = vec![Vec::new(); timeline.elections().len()];
        let mut chamber_cells = [Vec::new(), Vec::new()];
        for (i, c) in cells.iter().enumerate() {
            government_cells[c.government].push(i);
            election_cells[c.election].push(i);
            chamber_cells[c.chamber.index()].push(i);
        }
        Ok(ModelData {
            p,
            n_governments: timeline.governments().len(),
            n_elections: timeline.elections().len(),
            cells,
            row_cell,
            government_cells,
            election_cells,
            chamber_cells,
        })
    }
}

/// One point in parameter space. Blocks are flattened unit-major with `P`
/// topics per unit: `alpha[g * P + p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    /// Chamber-topic means, chamber index per [`Chamber::index`].
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Params {
    pub fn zeros(data: &ModelData) -> Self {
        let p = data.p;
        Params {
            alpha: vec![0.0; data.n_governments * p],
            beta: vec![0.0; data.n_elections * p],
            delta: vec![0.0; data.cells.len() * p],
            mu: vec![0.0; 2 * p],
            sigma: vec![1.0; data.n_governments * p],
        }
    }

    /// Log concentration of topic `p` in cell `i`.
    pub fn linear_predictor(&self, data: &ModelData, i: usize, p: usize) -> f64 {
        let c = &data.cells[i];
        let np = data.p;
        self.alpha[c.government * np + p] + self.beta[c.election * np + p] * c.decay + self.delta[i * np + p]
    }
}

pub(crate) fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-likelihood of one cell given its concentrations.
pub(crate) fn cell_loglik(cell: &Cell, conc: &[f64]) -> f64 {
    let total: f64 = conc.iter().sum();
    let mut ll = cell.n_days * ln_gamma(total);
    for (&a, &s) in conc.iter().zip(&cell.sum_log) {
        ll += (a - 1.0) * s - cell.n_days * ln_gamma(a);
    }
    ll
}

pub(crate) fn log_likelihood(data: &ModelData, params: &Params) -> f64 {
    let mut conc = vec![0.0; data.p];
    (0..data.cells.len())
        .map(|i| {
            for (p, a) in conc.iter_mut().enumerate() {
                *a = params.linear_predictor(data, i, p).exp();
            }
            cell_loglik(&data.cells[i], &conc)
        })
        .sum()
}

pub(crate) fn log_prior(data: &ModelData, params: &Params, spec: &EventModelSpec) -> f64 {
    let np = data.p;
    if params.sigma.iter().any(|&s| !(s > 0.0 && s < spec.sigma_upper)) {
        return f64::NEG_INFINITY;
    }
    let mut lp = 0.0;
    lp += params
        .alpha
        .iter()
        .map(|&a| normal_logpdf(a, 0.0, spec.prior_sd_alpha))
        .sum::<f64>();
    lp += params
        .beta
        .iter()
        .map(|&b| normal_logpdf(b, 0.0, spec.prior_sd_beta))
        .sum::<f64>();
    lp += params
        .mu
        .iter()
        .map(|&m| normal_logpdf(m, 0.0, spec.prior_sd_mu))
        .sum::<f64>();
    lp -= params.sigma.len() as f64 * spec.sigma_upper.ln();
    for (i, c) in data.cells.iter().enumerate() {
        for p in 0..np {
            lp += normal_logpdf(
                params.delta[i * np + p],
                params.mu[c.chamber.index() * np + p],
                params.sigma[c.government * np + p],
            );
        }
    }
    lp
}

/// Log posterior density up to a constant: priors plus Dirichlet likelihood.
pub fn log_posterior(data: &ModelData, params: &Params, spec: &EventModelSpec) -> f64 {
    let lp = log_prior(data, params, spec);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(data, params)
}

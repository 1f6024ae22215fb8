use chrono::{Duration, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{Election, Government, Timeline};
use crate::cap_mapping::{ThetaPanel, CAP_CODEBOOK};
use crate::corpus::{derive_sitting_periods, DocKey};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::record_parser::Chamber;
use crate::rng;
use crate::stats::sample_dirichlet;

/// Layout of a synthetic parliamentary record. Sitting periods start every
/// fourteen days and sit on consecutive days. Governments and elections
/// change at evenly spread sitting periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    pub n_governments: usize,
    pub n_elections: usize,
    pub n_periods: usize,
    pub days_per_period: usize,
    pub p: usize,
    pub chambers: Vec<Chamber>,
    pub start: NaiveDate,
}

impl Default for SimulationDesign {
    fn default() -> Self {
        SimulationDesign {
            n_governments: 6,
            n_elections: 8,
            n_periods: 60,
            days_per_period: 4,
            p: 4,
            chambers: Chamber::ALL.to_vec(),
            start: NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
        }
    }
}

impl SimulationDesign {
    fn validate(&self) -> Result<()> {
        if self.n_governments == 0 || self.n_elections == 0 || self.days_per_period == 0 || self.chambers.is_empty() {
            return Err(Error::invalid(
                "simulation needs governments, elections, sitting days and a chamber",
            ));
        }
        if self.n_periods < self.n_governments.max(self.n_elections) {
            return Err(Error::invalid(
                "need at least one sitting period per government and election",
            ));
        }
        if !(2..=CAP_CODEBOOK.len()).contains(&self.p) {
            return Err(Error::invalid(format!(
                "topic groups must be between 2 and {}",
                CAP_CODEBOOK.len()
            )));
        }
        if self.days_per_period > 6 {
            return Err(Error::invalid("sitting periods must be shorter than a week"));
        }
        let mut chambers = self.chambers.clone();
        chambers.sort();
        chambers.dedup();
        if chambers.len() != self.chambers.len() {
            return Err(Error::invalid("duplicate chamber in simulation design"));
        }
        Ok(())
    }

    pub fn period_start(&self, s: usize) -> NaiveDate {
        self.start + Duration::days(14 * s as i64)
    }

    /// First sitting period of government `g`.
    pub fn government_first_period(&self, g: usize) -> usize {
        g * self.n_periods / self.n_governments
    }

    /// First sitting period of election period `e`.
    pub fn election_first_period(&self, e: usize) -> usize {
        (e * self.n_periods + self.n_elections / 2) / self.n_elections
    }

    /// Government and election indices of sitting period `s`.
    pub fn units_of_period(&self, s: usize) -> (usize, usize) {
        let g = (0..self.n_governments)
            .rev()
            .find(|&g| self.government_first_period(g) <= s)
            .unwrap_or(0);
        let e = (0..self.n_elections)
            .rev()
            .find(|&e| self.election_first_period(e) <= s)
            .unwrap_or(0);
        (g, e)
    }

    /// Sitting periods left in the election period of `s`, `N_e − s`.
    pub fn decay_of_period(&self, s: usize) -> usize {
        let (_, e) = self.units_of_period(s);
        let next = if e + 1 < self.n_elections {
            self.election_first_period(e + 1)
        } else {
            self.n_periods
        };
        next - s - 1
    }

    pub fn timeline(&self) -> Result<Timeline> {
        self.validate()?;
        let governments = (0..self.n_governments)
            .map(|g| {
                let start = self.period_start(self.government_first_period(g));
                let end = (g + 1 < self.n_governments)
                    .then(|| self.period_start(self.government_first_period(g + 1)) - Duration::days(1));
                Government {
                    id: g as u32 + 1,
                    name: format!("PM {}", g + 1),
                    party: if g % 2 == 0 { "A" } else { "B" }.to_string(),
                    start,
                    end,
                    excluded: false,
                    compare_to: (g > 0).then_some(g as u32),
                }
            })
            .collect();
        let elections = (0..self.n_elections)
            .map(|e| Election {
                id: e as u32 + 1,
                date: self.period_start(self.election_first_period(e)) - Duration::days(1),
                winner: if e % 3 == 2 { "B" } else { "A" }.to_string(),
                seats: None,
            })
            .collect();
        Timeline::new(governments, elections)
    }

    pub fn groups(&self) -> Vec<(u32, String)> {
        CAP_CODEBOOK[..self.p]
            .iter()
            .map(|&(c, n)| (c, n.to_string()))
            .collect()
    }
}

/// True parameter values of a simulation, one row per unit and a column per topic.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    pub alpha: Matrix,
    pub beta: Matrix,
    /// Rows follow [`Chamber::index`].
    pub mu: Matrix,
    pub sigma: Matrix,
}

impl SimulationTruth {
    /// Draws `α ~ N(1.5, 0.5²)`, `β ~ N(0, 0.05²)`, `μ ~ N(0, 0.3²)` and `σ ~ U(0.1, 0.5)`.
    pub fn draw(design: &SimulationDesign, seed: u64) -> Self {
        let mut rng = rng::stream(seed, 1);
        let p = design.p;
        let alpha_d = Normal::new(1.5, 0.5).expect("valid normal");
        let beta_d = Normal::new(0.0, 0.05).expect("valid normal");
        let mu_d = Normal::new(0.0, 0.3).expect("valid normal");
        SimulationTruth {
            alpha: Matrix::from_fn(design.n_governments, p, |_, _| alpha_d.sample(&mut rng)),
            beta: Matrix::from_fn(design.n_elections, p, |_, _| beta_d.sample(&mut rng)),
            mu: Matrix::from_fn(2, p, |_, _| mu_d.sample(&mut rng)),
            sigma: Matrix::from_fn(design.n_governments, p, |_, _| rng.random_range(0.1..0.5)),
        }
    }
}

/// A simulated panel with the values that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub panel: ThetaPanel,
    pub timeline: Timeline,
    pub truth: SimulationTruth,
    /// Sitting-period effects, row `chamber.index() * n_periods + s`.
    pub delta: Matrix,
    /// True Dirichlet concentrations of every panel row.
    pub concentration: Matrix,
}

/// Simulates daily shares from the event model under `truth`.
pub fn simulate_panel(design: &SimulationDesign, truth: &SimulationTruth, seed: u64) -> Result<SimulatedPanel> {
    let timeline = design.timeline()?;
    let p = design.p;
    if truth.alpha.cols() != p || truth.alpha.rows() != design.n_governments || truth.beta.rows() != design.n_elections
    {
        return Err(Error::invalid("simulation truth does not match the design"));
    }
    let mut rng = rng::stream(seed, 2);
    let n = design.n_periods;
    let mut delta = Matrix::zeros(2 * n, p);
    for c in &design.chambers {
        for s in 0..n {
            let (g, _) = design.units_of_period(s);
            for k in 0..p {
                let d = Normal::new(truth.mu.get(c.index(), k), truth.sigma.get(g, k))
                    .map_err(|e| Error::invalid(format!("bad simulation scale: {e}")))?;
                delta.set(c.index() * n + s, k, d.sample(&mut rng));
            }
        }
    }

    let mut docs = Vec::new();
    let mut shares = Vec::new();
    let mut concentration = Vec::new();
    for s in 0..n {
        let (g, e) = design.units_of_period(s);
        let decay = design.decay_of_period(s) as f64;
        for day in 0..design.days_per_period {
            let date = design.period_start(s) + Duration::days(day as i64);
            for c in &design.chambers {
                let conc: Vec<f64> = (0..p)
                    .map(|k| {
                        (truth.alpha.get(g, k) + truth.beta.get(e, k) * decay + delta.get(c.index() * n + s, k)).exp()
                    })
                    .collect();
                let theta = loop {
                    let t = sample_dirichlet(&mut rng, &conc);
                    if t.iter().all(|&x| x > 0.0) {
                        break t;
                    }
                };
                docs.push(DocKey::new(*c, date));
                shares.push(theta);
                concentration.push(conc);
            }
        }
    }
    let days: Vec<NaiveDate> = docs.iter().map(|d| d.date).collect();
    let calendar = derive_sitting_periods(&days)?;
    let panel = ThetaPanel::build(&docs, Matrix::from_rows(shares)?, design.groups(), &calendar, &timeline)?;
    Ok(SimulatedPanel {
        panel,
        timeline,
        truth: truth.clone(),
        delta,
        concentration: Matrix::from_rows(concentration)?,
    })
}

/// Moves topic `p` of a composition to `k` standard deviations above its mean
/// under Dirichlet(`concentration`) and rescales the other topics to keep the sum at one.
pub fn perturb_share(concentration: &[f64], p: usize, k: f64, shares: &[f64]) -> Result<Vec<f64>> {
    let (m, sd) = super::dirichlet_moments(concentration);
    let target = m[p] + k * sd[p];
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(format!("perturbed share {target} is outside (0, 1)")));
    }
    let rest: f64 = shares.iter().enumerate().filter(|&(j, _)| j != p).map(|(_, x)| x).sum();
    Ok(shares
        .iter()
        .enumerate()
        .map(|(j, &x)| if j == p { target } else { x * (1.0 - target) / rest })
        .collect())
}

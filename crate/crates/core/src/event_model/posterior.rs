use std::collections::HashMap;
use std::io::{Read, Write};

use super::model::{ModelData, Params};
use super::{EventModelSpec, Timeline};
use crate::cap_mapping::ThetaPanel;
use crate::error::{Error, Result};
use crate::matrix::format_float;
use crate::record_parser::Chamber;
use crate::stats::{mean, quantile, split_rhat, variance};

/// Parameter blocks of the event model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Alpha,
    Beta,
    Delta,
    Mu,
    Sigma,
}

impl Block {
    pub const ALL: [Block; 5] = [Block::Alpha, Block::Beta, Block::Delta, Block::Mu, Block::Sigma];

    pub fn name(self) -> &'static str {
        match self {
            Block::Alpha => "alpha",
            Block::Beta => "beta",
            Block::Delta => "delta",
            Block::Mu => "mu",
            Block::Sigma => "sigma",
        }
    }

    fn parse(s: &str) -> Option<Block> {
        Block::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// Retained draws of one chain. Each block is stored draw-major, so draw `t`
/// of unit `u`, topic `p` sits at `t * width + u * P + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub n_draws: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Log posterior after every iteration, burn-in included. Empty when read back from draws.
    pub loglik: Vec<f64>,
    /// Share of accepted Metropolis proposals.
    pub acceptance: f64,
}

impl ChainDraws {
    pub(crate) fn with_capacity(x: &Params, n: usize, iters: usize) -> Self {
        ChainDraws {
            n_draws: 0,
            alpha: Vec::with_capacity(x.alpha.len() * n),
            beta: Vec::with_capacity(x.beta.len() * n),
            delta: Vec::with_capacity(x.delta.len() * n),
            mu: Vec::with_capacity(x.mu.len() * n),
            sigma: Vec::with_capacity(x.sigma.len() * n),
            loglik: Vec::with_capacity(iters),
            acceptance: f64::NAN,
        }
    }

    pub(crate) fn push(&mut self, x: &Params) {
        self.alpha.extend_from_slice(&x.alpha);
        self.beta.extend_from_slice(&x.beta);
        self.delta.extend_from_slice(&x.delta);
        self.mu.extend_from_slice(&x.mu);
        self.sigma.extend_from_slice(&x.sigma);
        self.n_draws += 1;
    }

    pub fn block(&self, b: Block) -> &[f64] {
        match b {
            Block::Alpha => &self.alpha,
            Block::Beta => &self.beta,
            Block::Delta => &self.delta,
            Block::Mu => &self.mu,
            Block::Sigma => &self.sigma,
        }
    }

    fn block_mut(&mut self, b: Block) -> &mut Vec<f64> {
        match b {
            Block::Alpha => &mut self.alpha,
            Block::Beta => &mut self.beta,
            Block::Delta => &mut self.delta,
            Block::Mu => &mut self.mu,
            Block::Sigma => &mut self.sigma,
        }
    }
}

/// Posterior draws of every chain together with the data layout they index.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPosterior {
    pub spec: EventModelSpec,
    pub data: ModelData,
    pub government_ids: Vec<u32>,
    pub election_ids: Vec<u32>,
    pub chains: Vec<ChainDraws>,
}

impl EventPosterior {
    pub(crate) fn new(spec: EventModelSpec, data: ModelData, timeline: &Timeline, chains: Vec<ChainDraws>) -> Self {
        EventPosterior {
            spec,
            data,
            government_ids: timeline.governments().iter().map(|g| g.id).collect(),
            election_ids: timeline.elections().iter().map(|e| e.id).collect(),
            chains,
        }
    }

    pub fn p(&self) -> usize {
        self.data.p
    }

    /// Number of units (governments, elections, cells or chambers) of a block.
    pub fn n_units(&self, b: Block) -> usize {
        match b {
            Block::Alpha | Block::Sigma => self.data.n_governments,
            Block::Beta => self.data.n_elections,
            Block::Delta => self.data.cells.len(),
            Block::Mu => 2,
        }
    }

    pub fn unit_label(&self, b: Block, unit: usize) -> String {
        match b {
            Block::Alpha | Block::Sigma => self.government_ids[unit].to_string(),
            Block::Beta => self.election_ids[unit].to_string(),
            Block::Delta => {
                let c = &self.data.cells[unit];
                format!("{}:{}", c.chamber, c.period_id)
            }
            Block::Mu => Chamber::ALL[unit].to_string(),
        }
    }

    /// Cell index of a chamber and sitting period.
    pub fn cell_of(&self, chamber: Chamber, period_id: usize) -> Option<usize> {
        self.data
            .cells
            .iter()
            .position(|c| c.chamber == chamber && c.period_id == period_id)
    }

    pub fn chain_samples(&self, b: Block, unit: usize, p: usize) -> Vec<Vec<f64>> {
        let np = self.p();
        let width = self.n_units(b) * np;
        self.chains
            .iter()
            .map(|ch| {
                let v = ch.block(b);
                (0..ch.n_draws).map(|t| v[t * width + unit * np + p]).collect()
            })
            .collect()
    }

    /// Pooled draws of all chains, chain by chain.
    pub fn samples(&self, b: Block, unit: usize, p: usize) -> Vec<f64> {
        self.chain_samples(b, unit, p).concat()
    }

    pub fn mean(&self, b: Block, unit: usize, p: usize) -> f64 {
        mean(&self.samples(b, unit, p))
    }

    /// Equal-tailed credible interval with coverage `level`.
    pub fn interval(&self, b: Block, unit: usize, p: usize, level: f64) -> (f64, f64) {
        equal_tailed(self.samples(b, unit, p), level)
    }

    pub fn rhat(&self, b: Block, unit: usize, p: usize) -> f64 {
        split_rhat(&self.chain_samples(b, unit, p))
    }

    /// Number of scalar parameters with a defined split R-hat, and how many of them exceed 1.1.
    pub fn rhat_counts(&self) -> (usize, usize) {
        let (mut n, mut over) = (0, 0);
        for b in Block::ALL {
            for u in 0..self.n_units(b) {
                for p in 0..self.p() {
                    let r = self.rhat(b, u, p);
                    if r.is_nan() {
                        continue;
                    }
                    n += 1;
                    if r > 1.1 {
                        over += 1;
                    }
                }
            }
        }
        (n, over)
    }

    /// Per-chain draws of the level of government `g` on topic `p`: its effect
    /// plus the mean of the chamber-topic means over chambers with data.
    /// Unlike the raw effect this does not move under a common shift of all
    /// government effects against the chamber means.
    pub fn level_samples(&self, g: usize, p: usize) -> Vec<Vec<f64>> {
        let chambers: Vec<usize> = (0..2).filter(|&c| !self.data.chamber_cells[c].is_empty()).collect();
        let alpha = self.chain_samples(Block::Alpha, g, p);
        let mus: Vec<Vec<Vec<f64>>> = chambers.iter().map(|&c| self.chain_samples(Block::Mu, c, p)).collect();
        alpha
            .into_iter()
            .enumerate()
            .map(|(ch, a)| {
                a.iter()
                    .enumerate()
                    .map(|(t, &x)| x + mus.iter().map(|m| m[ch][t]).sum::<f64>() / chambers.len() as f64)
                    .collect()
            })
            .collect()
    }

    /// Posterior mean of the Dirichlet concentrations of cell `i`.
    pub fn mean_concentration(&self, i: usize) -> Vec<f64> {
        let np = self.p();
        let cell = &self.data.cells[i];
        let mut out = vec![0.0; np];
        let mut n = 0usize;
        let (ga, ge, gd) = (
            self.data.n_governments * np,
            self.data.n_elections * np,
            self.data.cells.len() * np,
        );
        for ch in &self.chains {
            for t in 0..ch.n_draws {
                for (p, o) in out.iter_mut().enumerate() {
                    let lin = ch.alpha[t * ga + cell.government * np + p]
                        + ch.beta[t * ge + cell.election * np + p] * cell.decay
                        + ch.delta[t * gd + i * np + p];
                    *o += lin.exp();
                }
                n += 1;
            }
        }
        out.iter_mut().for_each(|x| *x /= n as f64);
        out
    }

    /// Long-format draws `param,g_or_e_or_cs,topic,chain,draw,value`, topics from 1.
    pub fn write_draws_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["param", "g_or_e_or_cs", "topic", "chain", "draw", "value"])?;
        let np = self.p();
        for b in Block::ALL {
            let width = self.n_units(b) * np;
            for u in 0..self.n_units(b) {
                let label = self.unit_label(b, u);
                for p in 0..np {
                    for (c, ch) in self.chains.iter().enumerate() {
                        let v = ch.block(b);
                        for t in 0..ch.n_draws {
                            w.write_record([
                                b.name(),
                                &label,
                                &(p + 1).to_string(),
                                &c.to_string(),
                                &t.to_string(),
                                &format_float(v[t * width + u * np + p]),
                            ])?;
                        }
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io("draws", e))?;
        Ok(())
    }

    /// Rebuilds a posterior from a draws file and the panel and timeline it was fitted to.
    pub fn read_draws_csv<R: Read>(
        r: R,
        panel: &ThetaPanel,
        timeline: &Timeline,
        spec: &EventModelSpec,
    ) -> Result<Self> {
        let data = ModelData::new(panel, timeline)?;
        let mut post = EventPosterior::new(spec.clone(), data, timeline, Vec::new());
        let np = post.p();
        let mut units: HashMap<(Block, String), usize> = HashMap::new();
        for b in Block::ALL {
            for u in 0..post.n_units(b) {
                units.insert((b, post.unit_label(b, u)), u);
            }
        }
        let mut rdr = csv::Reader::from_reader(r);
        if rdr
            .headers()?
            .iter()
            .ne(["param", "g_or_e_or_cs", "topic", "chain", "draw", "value"])
        {
            return Err(Error::invalid(
                "draws header must be param,g_or_e_or_cs,topic,chain,draw,value",
            ));
        }
        let mut entries = Vec::new();
        let (mut n_chains, mut n_draws) = (0usize, 0usize);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Parse {
                source_name: "draws".into(),
                line: line + 2,
                message: "malformed draw row".into(),
            };
            let b = Block::parse(rec.get(0).unwrap_or_default()).ok_or_else(bad)?;
            let u = *units
                .get(&(b, rec.get(1).unwrap_or_default().to_string()))
                .ok_or_else(bad)?;
            let p: usize = rec
                .get(2)
                .and_then(|s| s.parse().ok())
                .filter(|&p| p >= 1 && p <= np)
                .ok_or_else(bad)?;
            let c: usize = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let t: usize = rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = rec.get(5).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            n_chains = n_chains.max(c + 1);
            n_draws = n_draws.max(t + 1);
            entries.push((b, u, p - 1, c, t, v));
        }
        let expected: usize = Block::ALL.iter().map(|&b| post.n_units(b) * np).sum::<usize>() * n_chains * n_draws;
        if entries.len() != expected || n_chains == 0 {
            return Err(Error::invalid(format!(
                "draws file has {} values, expected {expected} for {n_chains} chains of {n_draws} draws",
                entries.len()
            )));
        }
        post.chains = (0..n_chains)
            .map(|_| {
                let mut ch = ChainDraws {
                    n_draws,
                    alpha: Vec::new(),
                    beta: Vec::new(),
                    delta: Vec::new(),
                    mu: Vec::new(),
                    sigma: Vec::new(),
                    loglik: Vec::new(),
                    acceptance: f64::NAN,
                };
                for b in Block::ALL {
                    *ch.block_mut(b) = vec![f64::NAN; post.n_units(b) * np * n_draws];
                }
                ch
            })
            .collect();
        for (b, u, p, c, t, v) in entries {
            let width = post.n_units(b) * np;
            post.chains[c].block_mut(b)[t * width + u * np + p] = v;
        }
        if post
            .chains
            .iter()
            .any(|ch| Block::ALL.iter().any(|&b| ch.block(b).iter().any(|x| x.is_nan())))
        {
            return Err(Error::invalid("draws file has duplicate or missing entries"));
        }
        Ok(post)
    }

    /// Writes `param,unit,topic,mean,sd,q2.5,q97.5,rhat` for every scalar parameter.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["param", "unit", "topic", "mean", "sd", "q2.5", "q97.5", "rhat"])?;
        for b in Block::ALL {
            for u in 0..self.n_units(b) {
                let label = self.unit_label(b, u);
                for p in 0..self.p() {
                    let s = self.samples(b, u, p);
                    let sd = if s.len() > 1 { variance(&s).sqrt() } else { f64::NAN };
                    let m = mean(&s);
                    let (lo, hi) = equal_tailed(s, 0.95);
                    w.write_record([
                        b.name().to_string(),
                        label.clone(),
                        (p + 1).to_string(),
                        format_float(m),
                        format_float(sd),
                        format_float(lo),
                        format_float(hi),
                        format_float(self.rhat(b, u, p)),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("summary", e))?;
        Ok(())
    }

    /// Writes `chain,iteration,log_posterior` for every iteration of every chain.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["chain", "iteration", "log_posterior"])?;
        for (c, ch) in self.chains.iter().enumerate() {
            for (i, lp) in ch.loglik.iter().enumerate() {
                w.write_record([c.to_string(), i.to_string(), format_float(*lp)])?;
            }
        }
        w.flush().map_err(|e| Error::io("trace", e))?;
        Ok(())
    }
}

pub(crate) fn equal_tailed(mut s: Vec<f64>, level: f64) -> (f64, f64) {
    s.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile(&s, tail), quantile(&s, 1.0 - tail))
}

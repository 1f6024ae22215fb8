//! Topic models: collapsed-Gibbs LDA, a sampling-based correlated topic
//! model, and generators for synthetic corpora from both.

mod align;
mod ctm;
mod generate;
mod io;
mod lda;
mod state;

pub use align::{align_topics, total_variation, Alignment};
pub use ctm::{fit_ctm, CtmOptions, CtmParams};
pub use generate::{generate_corpus, random_topics, SyntheticCorpus, TopicFamily};
pub use io::{read_theta_csv, write_beta_csv, write_ctm_csv, write_theta_csv};
pub use lda::{fit_lda, run_lda_chain, sweep};
pub use state::GibbsState;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::DEFAULT_SEED;

/// Sampler settings shared by LDA and the correlated topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaHyper {
    /// Number of topics.
    pub k: usize,
    /// Symmetric Dirichlet prior on each document's topic shares (LDA only).
    pub alpha: f64,
    /// Symmetric Dirichlet prior on each topic's term distribution.
    pub eta: f64,
    /// Full sweeps over the corpus, burn-in included.
    pub iters: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in sweep in the point estimates.
    pub thin: usize,
    /// Independent chains; the one with the best mean post-burn-in log-likelihood is reported.
    pub chains: usize,
    pub seed: u64,
}

impl LdaHyper {
    /// Defaults: `alpha = 50 / k`, `eta = 0.1`.
    pub fn new(k: usize) -> Self {
        LdaHyper {
            k,
            alpha: 50.0 / k.max(1) as f64,
            eta: 0.1,
            iters: 1000,
            burn_in: 500,
            thin: 1,
            chains: 1,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_iters(mut self, iters: usize, burn_in: usize) -> Self {
        self.iters = iters;
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("topic count must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("alpha and eta must be positive and finite"));
        }
        if self.iters == 0 || self.burn_in >= self.iters {
            return Err(Error::invalid(format!(
                "need iters > burn_in (iters = {}, burn_in = {})",
                self.iters, self.burn_in
            )));
        }
        if self.thin == 0 || self.chains == 0 {
            return Err(Error::invalid("thin and chains must be positive"));
        }
        Ok(())
    }
}

/// Point estimates from a fitted topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelFit {
    /// `k × v` topic-term distributions.
    pub beta: Matrix,
    /// `d × k` document-topic shares.
    pub theta: Matrix,
    /// Final topic assignment of each token, per document, in
    /// [`crate::DocTermMatrix::doc_tokens`] order.
    pub z: Vec<Vec<usize>>,
    /// Collapsed log-likelihood `log p(w | z)` after every sweep.
    pub loglik: Vec<f64>,
}

impl TopicModelFit {
    pub fn k(&self) -> usize {
        self.beta.rows()
    }

    /// Ids of the `m` highest-probability terms of topic `k`, most probable first.
    pub fn top_terms(&self, k: usize, m: usize) -> Vec<usize> {
        top_indices(self.beta.row(k), m)
    }
}

/// Indices of the `m` largest values, largest first; ties go to the lower index.
pub fn top_indices(values: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

use rand::Rng;
use rayon::prelude::*;

use super::{GibbsState, LdaHyper, TopicModelFit};
use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats::sample_index;

/// One collapsed Gibbs sweep over every token, in document order.
pub fn sweep<R: Rng + ?Sized>(state: &mut GibbsState, hyper: &LdaHyper, rng: &mut R, weights: &mut Vec<f64>) {
    let k = state.k();
    let v_eta = state.n_terms() as f64 * hyper.eta;
    weights.resize(k, 0.0);
    for token in 0..state.n_tokens() {
        state.remove(token);
        let d = state.doc(token);
        let w = state.word(token);
        // The document-length denominator is the same for every topic and drops out.
        for (t, p) in weights.iter_mut().enumerate() {
            *p = (state.topic_term(t, w) as f64 + hyper.eta) / (state.topic_total(t) as f64 + v_eta)
                * (state.doc_topic(d, t) as f64 + hyper.alpha);
        }
        let new = sample_index(rng, weights);
        state.set(token, new);
    }
}

/// Running sums of the count tables over retained sweeps.
pub(crate) struct CountAverager {
    doc_topic: Vec<f64>,
    topic_term: Vec<f64>,
    samples: usize,
}

impl CountAverager {
    pub(crate) fn new(state: &GibbsState) -> Self {
        CountAverager {
            doc_topic: vec![0.0; state.n_docs() * state.k()],
            topic_term: vec![0.0; state.k() * state.n_terms()],
            samples: 0,
        }
    }

    pub(crate) fn add(&mut self, state: &GibbsState) {
        let (k, v) = (state.k(), state.n_terms());
        for d in 0..state.n_docs() {
            for t in 0..k {
                self.doc_topic[d * k + t] += state.doc_topic(d, t) as f64;
            }
        }
        for t in 0..k {
            for w in 0..v {
                self.topic_term[t * v + w] += state.topic_term(t, w) as f64;
            }
        }
        self.samples += 1;
    }

    /// Smoothed topic-term estimate `(n_kv + η) / (n_k + Vη)` from averaged counts.
    pub(crate) fn beta(&self, k: usize, v: usize, eta: f64) -> Matrix {
        let n = self.samples.max(1) as f64;
        let mut beta = Matrix::from_fn(k, v, |t, w| self.topic_term[t * v + w] / n + eta);
        for t in 0..k {
            let row = beta.row_mut(t);
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        beta
    }

    /// Smoothed document-topic estimate `(n_dk + α) / (N_d + Kα)` from averaged counts.
    pub(crate) fn theta(&self, d_count: usize, k: usize, alpha: f64) -> Matrix {
        let n = self.samples.max(1) as f64;
        let mut theta = Matrix::from_fn(d_count, k, |d, t| self.doc_topic[d * k + t] / n + alpha);
        for d in 0..d_count {
            let row = theta.row_mut(d);
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        theta
    }
}

pub(crate) fn check_corpus(dtm: &DocTermMatrix, hyper: &LdaHyper) -> Result<()> {
    hyper.validate()?;
    if dtm.n_docs() == 0 || dtm.total_tokens() == 0 {
        return Err(Error::invalid("document-term matrix is empty"));
    }
    if hyper.k as u64 > dtm.total_tokens() {
        return Err(Error::invalid(format!(
            "{} topics requested for only {} tokens",
            hyper.k,
            dtm.total_tokens()
        )));
    }
    Ok(())
}

pub(crate) fn is_retained(iter: usize, hyper: &LdaHyper) -> bool {
    iter >= hyper.burn_in && (iter - hyper.burn_in).is_multiple_of(hyper.thin)
}

/// Mean of the post-burn-in part of a trace; used to pick the reported chain.
pub(crate) fn post_burn_in_mean(trace: &[f64], burn_in: usize) -> f64 {
    let tail = &trace[burn_in.min(trace.len())..];
    tail.iter().sum::<f64>() / tail.len().max(1) as f64
}

/// Runs one chain from the given initial state.
pub fn run_lda_chain<R: Rng + ?Sized>(mut state: GibbsState, hyper: &LdaHyper, rng: &mut R) -> TopicModelFit {
    let mut avg = CountAverager::new(&state);
    let mut loglik = Vec::with_capacity(hyper.iters);
    let mut weights = Vec::new();
    for iter in 0..hyper.iters {
        sweep(&mut state, hyper, rng, &mut weights);
        loglik.push(state.log_likelihood(hyper.eta));
        if is_retained(iter, hyper) {
            avg.add(&state);
        }
    }
    debug_assert!(state.counts_consistent());
    TopicModelFit {
        beta: avg.beta(state.k(), state.n_terms(), hyper.eta),
        theta: avg.theta(state.n_docs(), state.k(), hyper.alpha),
        z: state.assignments_by_doc(),
        loglik,
    }
}

/// Fits LDA by collapsed Gibbs sampling from a uniformly random initial allocation.
///
/// Chains run in parallel on independent streams of `hyper.seed`; the chain with
/// the highest mean post-burn-in log-likelihood is returned.
pub fn fit_lda(dtm: &DocTermMatrix, hyper: &LdaHyper) -> Result<TopicModelFit> {
    check_corpus(dtm, hyper)?;
    let fits = (0..hyper.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(hyper.seed, c as u64);
            let state = GibbsState::random(dtm, hyper.k, &mut rng)?;
            Ok(run_lda_chain(state, hyper, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(best_chain(fits, hyper.burn_in))
}

pub(crate) fn best_chain(fits: Vec<TopicModelFit>, burn_in: usize) -> TopicModelFit {
    let mut best: Option<(f64, TopicModelFit)> = None;
    for fit in fits {
        let score = post_burn_in_mean(&fit.loglik, burn_in);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, fit));
        }
    }
    best.expect("at least one chain").1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DocTermMatrix {
        DocTermMatrix::from_dense(&[vec![3, 1, 0, 0], vec![0, 0, 2, 4], vec![1, 1, 1, 1]]).unwrap()
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let h = LdaHyper::new(2).with_iters(30, 10).with_seed(9);
        assert_eq!(fit_lda(&tiny(), &h).unwrap(), fit_lda(&tiny(), &h).unwrap());
    }

    #[test]
    fn single_topic_gives_smoothed_frequencies() {
        let dtm = tiny();
        let h = LdaHyper::new(1).with_iters(5, 1);
        let fit = fit_lda(&dtm, &h).unwrap();
        let total = dtm.total_tokens() as f64;
        let v = dtm.n_terms() as f64;
        for w in 0..dtm.n_terms() {
            let count: u32 = (0..dtm.n_docs()).map(|d| dtm.get(d, w)).sum();
            let expect = (count as f64 + h.eta) / (total + v * h.eta);
            assert!((fit.beta.get(0, w) - expect).abs() < 1e-12);
        }
        assert!(fit.theta.as_slice().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn too_many_topics_is_error() {
        let dtm = DocTermMatrix::from_dense(&[vec![1, 1]]).unwrap();
        assert!(fit_lda(&dtm, &LdaHyper::new(3).with_iters(2, 1)).is_err());
    }

    #[test]
    fn rows_are_stochastic() {
        let fit = fit_lda(&tiny(), &LdaHyper::new(3).with_iters(20, 5)).unwrap();
        assert!(fit.beta.max_row_sum_error() < 1e-8);
        assert!(fit.theta.max_row_sum_error() < 1e-8);
        assert!(fit.z.iter().flatten().all(|&k| k < 3));
    }
}

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::lda::{check_corpus, is_retained, post_burn_in_mean, CountAverager};
use super::{GibbsState, LdaHyper, TopicModelFit};
use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats::{sample_index, softmax_with_reference, standard_normal};

/// Tuning of the logistic-normal updates.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmOptions {
    /// Random-walk Metropolis steps per document per sweep.
    pub mh_steps: usize,
    /// Acceptance rate the per-document step sizes are tuned towards during burn-in.
    pub target_accept: f64,
    pub initial_step: f64,
}

impl Default for CtmOptions {
    fn default() -> Self {
        CtmOptions {
            mh_steps: 3,
            target_accept: 0.3,
            initial_step: 0.5,
        }
    }
}

/// Logistic-normal parameters of a fitted correlated topic model. The last
/// topic is the reference category, so vectors have length `K - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmParams {
    pub mu: Vec<f64>,
    pub sigma: Matrix,
    /// `d × (K - 1)` posterior mean of each document's latent vector.
    pub eta_doc: Matrix,
    /// Post-burn-in Metropolis acceptance rate over all documents.
    pub acceptance: f64,
}

impl CtmParams {
    pub fn k(&self) -> usize {
        self.mu.len() + 1
    }

    /// Re-expresses the parameters with topics relabelled so that new topic `i`
    /// is old topic `order[i]`; the reference becomes old topic `order[K - 1]`.
    pub fn relabel(&self, order: &[usize]) -> CtmParams {
        let k = self.k();
        assert_eq!(order.len(), k, "order must list every topic once");
        let m = k - 1;
        let reference = order[m];
        // Row i of `a` maps old log-ratios to new ones: η'_i = η_{order[i]} − η_{reference}.
        let a = DMatrix::from_fn(m, m, |i, j| {
            let mut x = 0.0;
            if order[i] == j {
                x += 1.0;
            }
            if reference == j {
                x -= 1.0;
            }
            x
        });
        let sigma = to_dmatrix(&self.sigma);
        let new_sigma = &a * sigma * a.transpose();
        let mu = &a * DVector::from_column_slice(&self.mu);
        let eta = Matrix::from_fn(self.eta_doc.rows(), m, |d, i| {
            let row = self.eta_doc.row(d);
            let at = |t: usize| if t == m { 0.0 } else { row[t] };
            at(order[i]) - at(reference)
        });
        CtmParams {
            mu: mu.as_slice().to_vec(),
            sigma: from_dmatrix(&new_sigma),
            eta_doc: eta,
            acceptance: self.acceptance,
        }
    }
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Inverse of `sigma`, adding a growing ridge until it factorizes.
fn precision(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sigma.nrows();
    let mut ridge = 0.0;
    loop {
        let m = sigma + DMatrix::identity(n, n) * ridge;
        if let Some(c) = m.cholesky() {
            return c.inverse();
        }
        ridge = if ridge == 0.0 { 1e-6 } else { ridge * 10.0 };
        log::warn!("covariance update not positive definite; adding ridge {ridge:e}");
    }
}

/// Un-normalised log posterior of one document's latent vector.
fn eta_log_target(eta: &[f64], mu: &[f64], prec: &DMatrix<f64>, counts: &[f64]) -> f64 {
    let m = eta.len();
    let mut quad = 0.0;
    for i in 0..m {
        let di = eta[i] - mu[i];
        for j in 0..m {
            quad += di * prec[(i, j)] * (eta[j] - mu[j]);
        }
    }
    let max = eta.iter().copied().fold(0.0f64, f64::max);
    let lse = max + (eta.iter().map(|&e| (e - max).exp()).sum::<f64>() + (-max).exp()).ln();
    let mut ll = -counts[m] * lse;
    for i in 0..m {
        ll += counts[i] * (eta[i] - lse);
    }
    ll - 0.5 * quad
}

fn moments(eta: &[Vec<f64>], m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = eta.len() as f64;
    let mut mu = vec![0.0; m];
    for e in eta {
        for i in 0..m {
            mu[i] += e[i] / n;
        }
    }
    let mut cov = DMatrix::zeros(m, m);
    for e in eta {
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] += (e[i] - mu[i]) * (e[j] - mu[j]) / n;
            }
        }
    }
    (mu, cov)
}

struct CtmChain {
    fit: TopicModelFit,
    params: CtmParams,
}

fn run_ctm_chain<R: Rng + ?Sized>(
    dtm: &DocTermMatrix,
    hyper: &LdaHyper,
    opts: &CtmOptions,
    rng: &mut R,
) -> Result<CtmChain> {
    let k = hyper.k;
    let m = k - 1;
    let mut state = GibbsState::random(dtm, k, rng)?;
    let n_docs = state.n_docs();
    let v_eta = state.n_terms() as f64 * hyper.eta;

    let mut eta: Vec<Vec<f64>> = (0..n_docs)
        .map(|d| {
            let last = (state.doc_topic(d, m) as f64 + 1.0).ln();
            (0..m)
                .map(|t| (state.doc_topic(d, t) as f64 + 1.0).ln() - last)
                .collect()
        })
        .collect();
    let mut theta: Vec<Vec<f64>> = eta.iter().map(|e| softmax_with_reference(e)).collect();
    let (mut mu, mut sigma) = moments(&eta, m);
    let mut prec = precision(&sigma);
    let mut step = vec![opts.initial_step; n_docs];

    let mut avg = CountAverager::new(&state);
    let mut eta_sum = vec![vec![0.0; m]; n_docs];
    let mut mu_sum = vec![0.0; m];
    let mut sigma_sum = DMatrix::zeros(m, m);
    let mut retained = 0usize;
    let (mut accepted, mut proposed) = (0u64, 0u64);
    let mut loglik = Vec::with_capacity(hyper.iters);
    let mut weights = vec![0.0; k];
    let mut counts = vec![0.0; k];
    let mut proposal = vec![0.0; m];

    for iter in 0..hyper.iters {
        for token in 0..state.n_tokens() {
            state.remove(token);
            let d = state.doc(token);
            let w = state.word(token);
            for (t, p) in weights.iter_mut().enumerate() {
                *p = theta[d][t] * (state.topic_term(t, w) as f64 + hyper.eta) / (state.topic_total(t) as f64 + v_eta);
            }
            let new = sample_index(rng, &weights);
            state.set(token, new);
        }

        let burning = iter < hyper.burn_in;
        for d in 0..n_docs {
            for (t, c) in counts.iter_mut().enumerate() {
                *c = state.doc_topic(d, t) as f64;
            }
            let mut current = eta_log_target(&eta[d], &mu, &prec, &counts);
            for _ in 0..opts.mh_steps {
                for (p, e) in proposal.iter_mut().zip(&eta[d]) {
                    *p = e + step[d] * standard_normal(rng);
                }
                let cand = eta_log_target(&proposal, &mu, &prec, &counts);
                let accept = (cand - current) >= rng.random::<f64>().ln();
                if accept {
                    eta[d].copy_from_slice(&proposal);
                    current = cand;
                }
                if burning {
                    let gain = 1.0 / (1.0 + iter as f64).sqrt();
                    step[d] *= ((accept as u8 as f64 - opts.target_accept) * gain).exp();
                } else {
                    accepted += accept as u64;
                    proposed += 1;
                }
            }
            theta[d] = softmax_with_reference(&eta[d]);
        }

        (mu, sigma) = moments(&eta, m);
        prec = precision(&sigma);

        loglik.push(state.log_likelihood(hyper.eta));
        if is_retained(iter, hyper) {
            avg.add(&state);
            for (s, e) in eta_sum.iter_mut().zip(&eta) {
                s.iter_mut().zip(e).for_each(|(a, b)| *a += b);
            }
            mu_sum.iter_mut().zip(&mu).for_each(|(a, b)| *a += b);
            sigma_sum += &sigma;
            retained += 1;
        }
    }

    let n = retained as f64;
    let eta_doc = Matrix::from_fn(n_docs, m, |d, i| eta_sum[d][i] / n);
    let mut theta = Matrix::zeros(n_docs, k);
    for d in 0..n_docs {
        theta
            .row_mut(d)
            .copy_from_slice(&softmax_with_reference(eta_doc.row(d)));
    }
    let sigma_mean = sigma_sum / n;
    let sigma_sym = (&sigma_mean + sigma_mean.transpose()) * 0.5;
    Ok(CtmChain {
        fit: TopicModelFit {
            beta: avg.beta(k, state.n_terms(), hyper.eta),
            theta,
            z: state.assignments_by_doc(),
            loglik,
        },
        params: CtmParams {
            mu: mu_sum.iter().map(|x| x / n).collect(),
            sigma: from_dmatrix(&sigma_sym),
            eta_doc,
            acceptance: if proposed == 0 {
                0.0
            } else {
                accepted as f64 / proposed as f64
            },
        },
    })
}

/// Fits the correlated topic model by Metropolis-within-Gibbs.
///
/// Each sweep resamples token topics given the current document shares, moves
/// every document's logistic-normal vector by random-walk Metropolis, and then
/// resets `mu` and `sigma` to the moments of the current vectors. `hyper.alpha`
/// is not used.
pub fn fit_ctm(dtm: &DocTermMatrix, hyper: &LdaHyper, opts: &CtmOptions) -> Result<(TopicModelFit, CtmParams)> {
    check_corpus(dtm, hyper)?;
    if hyper.k < 2 {
        return Err(Error::invalid("the correlated topic model needs at least two topics"));
    }
    if opts.mh_steps == 0 || !(opts.initial_step > 0.0) || !(0.0..1.0).contains(&opts.target_accept) {
        return Err(Error::invalid("invalid Metropolis settings"));
    }
    let chains = (0..hyper.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(hyper.seed, c as u64);
            run_ctm_chain(dtm, hyper, opts, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = chains
        .into_iter()
        .map(|c| (post_burn_in_mean(&c.fit.loglik, hyper.burn_in), c))
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one chain")
        .1;
    let (best, p) = (best.fit, best.params);
    if p.sigma.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::model("non-finite covariance estimate"));
    }
    Ok((best, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::log_ratio_to_reference;
    use crate::topic_models::{generate_corpus, random_topics, TopicFamily};

    #[test]
    fn theta_is_softmax_of_eta() {
        let mut r = rng::stream(5, 0);
        let beta = random_topics(3, 30, 0.1, &mut r);
        let fam = TopicFamily::symmetric_lda(3, 1.0);
        let c = generate_corpus(&beta, &[40; 20], 2, &fam).unwrap();
        let h = LdaHyper::new(3).with_iters(20, 10);
        let (fit, p) = fit_ctm(&c.dtm, &h, &CtmOptions::default()).unwrap();
        for d in 0..20 {
            let s = softmax_with_reference(p.eta_doc.row(d));
            for (a, b) in s.iter().zip(fit.theta.row(d)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(p.sigma.rows(), 2);
    }

    #[test]
    fn two_topics_scalar_eta_round_trips() {
        let mut r = rng::stream(6, 0);
        let beta = random_topics(2, 10, 0.5, &mut r);
        let c = generate_corpus(&beta, &[25; 8], 3, &TopicFamily::symmetric_lda(2, 1.0)).unwrap();
        let (fit, p) = fit_ctm(&c.dtm, &LdaHyper::new(2).with_iters(10, 5), &CtmOptions::default()).unwrap();
        assert_eq!((p.sigma.rows(), p.sigma.cols(), p.eta_doc.cols()), (1, 1, 1));
        for d in 0..8 {
            let back = log_ratio_to_reference(fit.theta.row(d));
            assert!((back[0] - p.eta_doc.get(d, 0)).abs() < 1e-9);
        }
    }

    #[test]
    fn relabel_identity_and_reference_swap() {
        let p = CtmParams {
            mu: vec![0.5, -1.0],
            sigma: Matrix::from_rows(vec![vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap(),
            eta_doc: Matrix::from_rows(vec![vec![0.2, 0.4]]).unwrap(),
            acceptance: 0.3,
        };
        assert_eq!(p.relabel(&[0, 1, 2]), p);
        // New reference is old topic 0: theta must be unchanged after permuting back.
        let q = p.relabel(&[2, 1, 0]);
        let old = softmax_with_reference(p.eta_doc.row(0));
        let new = softmax_with_reference(q.eta_doc.row(0));
        assert!((old[0] - new[2]).abs() < 1e-12 && (old[2] - new[0]).abs() < 1e-12);
        // Var(0 − η0) = Σ00 for the first new coordinate.
        assert!((q.sigma.get(0, 0) - 1.0).abs() < 1e-12);
        // Var(η1 − η0) = Σ11 + Σ00 − 2Σ01.
        assert!((q.sigma.get(1, 1) - (2.0 + 1.0 - 0.6)).abs() < 1e-12);
    }
}

//! Diagnostics for choosing the number of topics: held-out likelihood,
//! exclusivity, semantic coherence and residual dispersion.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};
use crate::matrix::{format_float, Matrix};
use crate::rng;
use crate::stats::sample_index;
use crate::topic_models::{fit_lda, top_indices, LdaHyper};

/// Default number of top words per topic.
pub const DEFAULT_TOP_WORDS: usize = 10;

/// Settings of the folding-in sampler used for held-out documents.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIn {
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for FoldIn {
    fn default() -> Self {
        FoldIn {
            sweeps: 100,
            burn_in: 50,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

/// Mean per-word log predictive probability of held-out documents by
/// document completion.
///
/// Each document's tokens are shuffled (seeded per document) and split in
/// half. Topic shares are estimated from the first half by Gibbs sampling with
/// `beta` held fixed; the second half is scored under `Σ_k θ_k β_{k,w}`.
/// Documents with fewer than two tokens are skipped.
pub fn heldout_loglik(beta: &Matrix, heldout: &DocTermMatrix, alpha: f64, fold: &FoldIn) -> Result<f64> {
    if heldout.n_terms() != beta.cols() {
        return Err(Error::invalid(format!(
            "held-out documents use {} terms but the topics cover {}",
            heldout.n_terms(),
            beta.cols()
        )));
    }
    if fold.sweeps == 0 || fold.burn_in >= fold.sweeps {
        return Err(Error::invalid("fold-in needs sweeps > burn_in"));
    }
    let k = beta.rows();
    let per_doc: Vec<Option<(f64, usize)>> = (0..heldout.n_docs())
        .into_par_iter()
        .map(|d| {
            let mut tokens = heldout.doc_tokens(d);
            if tokens.len() < 2 {
                log::warn!("held-out document {d} has fewer than two tokens; skipped");
                return None;
            }
            let mut rng = rng::stream(fold.seed, d as u64);
            tokens.shuffle(&mut rng);
            let (observed, scored) = tokens.split_at(tokens.len() / 2);

            let mut z: Vec<usize> = observed
                .iter()
                .map(|_| rand::Rng::random_range(&mut rng, 0..k))
                .collect();
            let mut counts = vec![0.0f64; k];
            z.iter().for_each(|&t| counts[t] += 1.0);
            let mut theta_sum = vec![0.0; k];
            let mut weights = vec![0.0; k];
            for sweep in 0..fold.sweeps {
                for (i, &w) in observed.iter().enumerate() {
                    counts[z[i]] -= 1.0;
                    for (t, p) in weights.iter_mut().enumerate() {
                        *p = beta.get(t, w) * (counts[t] + alpha);
                    }
                    z[i] = sample_index(&mut rng, &weights);
                    counts[z[i]] += 1.0;
                }
                if sweep >= fold.burn_in {
                    let denom = observed.len() as f64 + k as f64 * alpha;
                    theta_sum
                        .iter_mut()
                        .zip(&counts)
                        .for_each(|(s, c)| *s += (c + alpha) / denom);
                }
            }
            let kept = (fold.sweeps - fold.burn_in) as f64;
            let theta: Vec<f64> = theta_sum.iter().map(|s| s / kept).collect();
            let ll: f64 = scored
                .iter()
                .map(|&w| (0..k).map(|t| theta[t] * beta.get(t, w)).sum::<f64>().ln())
                .sum();
            Some((ll, scored.len()))
        })
        .collect();
    let (ll, n) = per_doc
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(a, b), (l, c)| (a + l, b + c));
    if n == 0 {
        return Err(Error::invalid("no held-out document has two or more tokens"));
    }
    Ok(ll / n as f64)
}

/// For each topic, the mean over its top `m` terms of `β_{k,v} / Σ_j β_{j,v}`.
pub fn exclusivity(beta: &Matrix, m: usize) -> Vec<f64> {
    let col_sums: Vec<f64> = (0..beta.cols())
        .map(|v| (0..beta.rows()).map(|k| beta.get(k, v)).sum())
        .collect();
    (0..beta.rows())
        .map(|k| {
            let top = top_indices(beta.row(k), m);
            top.iter()
                .map(|&v| {
                    if col_sums[v] > 0.0 {
                        beta.get(k, v) / col_sums[v]
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / top.len().max(1) as f64
        })
        .collect()
}

/// Sorted list of documents containing each requested term.
fn doc_lists(dtm: &DocTermMatrix, terms: &[usize]) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); terms.len()];
    for d in 0..dtm.n_docs() {
        for (i, &t) in terms.iter().enumerate() {
            if dtm.get(d, t) > 0 {
                lists[i].push(d);
            }
        }
    }
    lists
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// UMass coherence of each topic's top `m` terms:
/// `Σ_{i<j} log((D(v_i, v_j) + 1) / D(v_i))` with terms in rank order, where
/// `D(v)` counts documents containing `v` and `D(v_i, v_j)` those containing both.
pub fn coherence(beta: &Matrix, dtm: &DocTermMatrix, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::invalid("coherence needs at least two top words"));
    }
    if beta.cols() != dtm.n_terms() {
        return Err(Error::invalid(
            "topics and document-term matrix have different vocabularies",
        ));
    }
    Ok((0..beta.rows())
        .map(|k| {
            let top = top_indices(beta.row(k), m);
            let lists = doc_lists(dtm, &top);
            let mut score = 0.0;
            for j in 1..top.len() {
                for i in 0..j {
                    let df = if lists[i].is_empty() {
                        log::warn!(
                            "term {} occurs in no document; its document count is taken as 1",
                            top[i]
                        );
                        1
                    } else {
                        lists[i].len()
                    };
                    let co = intersection_len(&lists[i], &lists[j]);
                    score += ((co as f64 + 1.0) / df as f64).ln();
                }
            }
            score
        })
        .collect())
}

/// Mean squared Pearson residual over the nonzero cells of `dtm`, with
/// expected proportions `m_{d,v} = Σ_k θ_{d,k} β_{k,v}`.
pub fn dispersion(theta: &Matrix, beta: &Matrix, dtm: &DocTermMatrix) -> Result<f64> {
    if theta.rows() != dtm.n_docs() || beta.cols() != dtm.n_terms() || theta.cols() != beta.rows() {
        return Err(Error::invalid("fit and document-term matrix are not conformable"));
    }
    if dtm.nnz() == 0 {
        return Err(Error::invalid("document-term matrix has no counts"));
    }
    let mut total = 0.0;
    let mut floored = 0usize;
    for d in 0..dtm.n_docs() {
        let n = dtm.doc_len(d) as f64;
        let th = theta.row(d);
        for (v, x) in dtm.row(d) {
            let mut m: f64 = th.iter().enumerate().map(|(k, t)| t * beta.get(k, v)).sum();
            if m < 1e-12 {
                m = 1e-12;
                floored += 1;
            }
            let resid = x as f64 - n * m;
            if resid != 0.0 {
                total += resid * resid / (n * m * (1.0 - m)).max(1e-12);
            }
        }
    }
    if floored > 0 {
        log::warn!("{floored} observed cells had expected proportion below 1e-12 and were floored");
    }
    Ok(total / dtm.nnz() as f64)
}

/// Diagnostics of one fitted topic count.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub k: usize,
    pub heldout_loglik: f64,
    pub exclusivity: Vec<f64>,
    pub coherence: Vec<f64>,
    pub dispersion: f64,
}

impl DiagnosticsReport {
    pub fn exclusivity_mean(&self) -> f64 {
        crate::stats::mean(&self.exclusivity)
    }

    pub fn coherence_mean(&self) -> f64 {
        crate::stats::mean(&self.coherence)
    }
}

/// Settings of a sweep over topic counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Share of documents held out from training.
    pub heldout_fraction: f64,
    pub top_words: usize,
    pub fold_in: FoldIn,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            heldout_fraction: 0.2,
            top_words: DEFAULT_TOP_WORDS,
            fold_in: FoldIn::default(),
        }
    }
}

/// Seeded split of document indices into (training, held-out).
pub fn split_documents(n_docs: usize, heldout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n_docs).collect();
    idx.shuffle(&mut rng::stream(seed, u64::MAX));
    let n_held = ((n_docs as f64 * heldout_fraction).round() as usize).min(n_docs.saturating_sub(1));
    let mut held = idx.split_off(n_docs - n_held);
    idx.sort_unstable();
    held.sort_unstable();
    (idx, held)
}

/// Fits LDA for every `k` in `ks` on a training split and scores it.
///
/// Each fit copies `template` with `alpha` rescaled to keep `alpha · k`
/// constant. A failed fit yields an error entry and the sweep continues.
pub fn sweep_topics(
    dtm: &DocTermMatrix,
    ks: &[usize],
    template: &LdaHyper,
    opts: &SweepOptions,
) -> Result<Vec<(usize, Result<DiagnosticsReport>)>> {
    if ks.is_empty() {
        return Err(Error::invalid("no topic counts to sweep"));
    }
    if !(0.0..1.0).contains(&opts.heldout_fraction) || opts.heldout_fraction == 0.0 {
        return Err(Error::invalid("held-out fraction must lie in (0, 1)"));
    }
    let (train_idx, held_idx) = split_documents(dtm.n_docs(), opts.heldout_fraction, template.seed);
    let train = dtm.select(&train_idx);
    let held = dtm.select(&held_idx);
    let alpha_total = template.alpha * template.k as f64;
    Ok(ks
        .par_iter()
        .map(|&k| {
            let report = (|| {
                let mut hyper = template.clone();
                hyper.k = k;
                hyper.alpha = alpha_total / k.max(1) as f64;
                let fit = fit_lda(&train, &hyper)?;
                Ok(DiagnosticsReport {
                    k,
                    heldout_loglik: heldout_loglik(&fit.beta, &held, hyper.alpha, &opts.fold_in)?,
                    exclusivity: exclusivity(&fit.beta, opts.top_words),
                    coherence: coherence(&fit.beta, &train, opts.top_words)?,
                    dispersion: dispersion(&fit.theta, &fit.beta, &train)?,
                })
            })();
            (k, report)
        })
        .collect())
}

/// Summary table `K,heldout,exclusivity_mean,coherence_mean,dispersion`.
pub fn write_report_csv<W: Write>(reports: &[DiagnosticsReport], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["K", "heldout", "exclusivity_mean", "coherence_mean", "dispersion"])?;
    for r in reports {
        w.write_record([
            r.k.to_string(),
            format_float(r.heldout_loglik),
            format_float(r.exclusivity_mean()),
            format_float(r.coherence_mean()),
            format_float(r.dispersion),
        ])?;
    }
    w.flush().map_err(|e| Error::io("diagnostics report", e))?;
    Ok(())
}

/// Per-topic table `K,topic,exclusivity,coherence` with topic ids from 1.
pub fn write_topic_csv<W: Write>(reports: &[DiagnosticsReport], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["K", "topic", "exclusivity", "coherence"])?;
    for r in reports {
        for (t, (e, c)) in r.exclusivity.iter().zip(&r.coherence).enumerate() {
            w.write_record([r.k.to_string(), (t + 1).to_string(), format_float(*e), format_float(*c)])?;
        }
    }
    w.flush().map_err(|e| Error::io("diagnostics topics", e))?;
    Ok(())
}

use rand::Rng;

use super::LdaHyper;
use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};
use crate::stats::ln_gamma;

/// Token-level topic assignments with the count tables a collapsed sampler needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    k: usize,
    v: usize,
    words: Vec<usize>,
    doc_of: Vec<usize>,
    doc_start: Vec<usize>,
    z: Vec<usize>,
    doc_topic: Vec<u32>,
    topic_term: Vec<u32>,
    topic_total: Vec<u32>,
}

impl GibbsState {
    /// State with every token assigned by `assign(doc, position, term)`.
    pub fn with_assignments(
        dtm: &DocTermMatrix,
        k: usize,
        mut assign: impl FnMut(usize, usize, usize) -> usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("topic count must be positive"));
        }
        let n_docs = dtm.n_docs();
        let v = dtm.n_terms();
        let total = dtm.total_tokens() as usize;
        let mut s = GibbsState {
            k,
            v,
            words: Vec::with_capacity(total),
            doc_of: Vec::with_capacity(total),
            doc_start: Vec::with_capacity(n_docs + 1),
            z: Vec::with_capacity(total),
            doc_topic: vec![0; n_docs * k],
            topic_term: vec![0; k * v],
            topic_total: vec![0; k],
        };
        for d in 0..n_docs {
            s.doc_start.push(s.words.len());
            for (n, w) in dtm.doc_tokens(d).into_iter().enumerate() {
                let topic = assign(d, n, w);
                if topic >= k {
                    return Err(Error::invalid(format!("initial topic {topic} out of range 0..{k}")));
                }
                s.words.push(w);
                s.doc_of.push(d);
                s.z.push(topic);
                s.add(s.z.len() - 1, topic);
            }
        }
        s.doc_start.push(s.words.len());
        Ok(s)
    }

    /// Uniformly random initial assignments.
    pub fn random<R: Rng + ?Sized>(dtm: &DocTermMatrix, k: usize, rng: &mut R) -> Result<Self> {
        Self::with_assignments(dtm, k, |_, _, _| rng.random_range(0..k.max(1)))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_terms(&self) -> usize {
        self.v
    }

    pub fn n_docs(&self) -> usize {
        self.doc_start.len() - 1
    }

    pub fn n_tokens(&self) -> usize {
        self.words.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_start[d + 1] - self.doc_start[d]
    }

    pub fn token_index(&self, d: usize, n: usize) -> usize {
        self.doc_start[d] + n
    }

    pub fn word(&self, token: usize) -> usize {
        self.words[token]
    }

    pub fn doc(&self, token: usize) -> usize {
        self.doc_of[token]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.z
    }

    /// Assignments grouped by document.
    pub fn assignments_by_doc(&self) -> Vec<Vec<usize>> {
        (0..self.n_docs())
            .map(|d| self.z[self.doc_start[d]..self.doc_start[d + 1]].to_vec())
            .collect()
    }

    pub fn doc_topic(&self, d: usize, k: usize) -> u32 {
        self.doc_topic[d * self.k + k]
    }

    pub fn topic_term(&self, k: usize, w: usize) -> u32 {
        self.topic_term[k * self.v + w]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.topic_total[k]
    }

    pub(crate) fn add(&mut self, token: usize, k: usize) {
        let d = self.doc_of[token];
        let w = self.words[token];
        self.doc_topic[d * self.k + k] += 1;
        self.topic_term[k * self.v + w] += 1;
        self.topic_total[k] += 1;
    }

    pub(crate) fn remove(&mut self, token: usize) -> usize {
        let k = self.z[token];
        let d = self.doc_of[token];
        let w = self.words[token];
        self.doc_topic[d * self.k + k] -= 1;
        self.topic_term[k * self.v + w] -= 1;
        self.topic_total[k] -= 1;
        k
    }

    pub(crate) fn set(&mut self, token: usize, k: usize) {
        self.z[token] = k;
        self.add(token, k);
    }

    /// Full conditional of the topic of token `n` in document `d`, with that
    /// token's own assignment excluded from every count:
    ///
    /// `p(z = k) ∝ (n'_{k,w} + η) / (n'_k + Vη) · (n'_{d,k} + α) / (n'_d + Kα)`
    pub fn gibbs_conditional(&self, d: usize, n: usize, hyper: &LdaHyper) -> Vec<f64> {
        let token = self.token_index(d, n);
        let current = self.z[token];
        let w = self.words[token];
        let v_eta = self.v as f64 * hyper.eta;
        let doc_others = (self.doc_len(d) - 1) as f64;
        let doc_denom = doc_others + self.k as f64 * hyper.alpha;
        let mut p: Vec<f64> = (0..self.k)
            .map(|k| {
                let own = (k == current) as u32;
                let term = (self.topic_term(k, w) - own) as f64 + hyper.eta;
                let total = (self.topic_total[k] - own) as f64 + v_eta;
                let doc = (self.doc_topic(d, k) - own) as f64 + hyper.alpha;
                term / total * doc / doc_denom
            })
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    /// Collapsed log-likelihood `log p(w | z)` under a symmetric Dirichlet(η) prior on topics.
    pub fn log_likelihood(&self, eta: f64) -> f64 {
        let v_eta = self.v as f64 * eta;
        let lg_eta = ln_gamma(eta);
        let mut ll = 0.0;
        for k in 0..self.k {
            ll += ln_gamma(v_eta) - ln_gamma(self.topic_total[k] as f64 + v_eta);
            for w in 0..self.v {
                let c = self.topic_term(k, w);
                if c > 0 {
                    ll += ln_gamma(c as f64 + eta) - lg_eta;
                }
            }
        }
        ll
    }

    /// Recounts every table from the assignments and compares.
    pub fn counts_consistent(&self) -> bool {
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut topic_term = vec![0u32; self.topic_term.len()];
        let mut topic_total = vec![0u32; self.k];
        for (i, &k) in self.z.iter().enumerate() {
            doc_topic[self.doc_of[i] * self.k + k] += 1;
            topic_term[k * self.v + self.words[i]] += 1;
            topic_total[k] += 1;
        }
        let n = self.z.len() as u64;
        doc_topic == self.doc_topic
            && topic_term == self.topic_term
            && topic_total == self.topic_total
            && self.doc_topic.iter().map(|&c| c as u64).sum::<u64>() == n
            && self.topic_term.iter().map(|&c| c as u64).sum::<u64>() == n
    }
}

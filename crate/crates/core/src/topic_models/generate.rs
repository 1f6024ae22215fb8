use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::corpus::{DocKey, DocTermMatrix};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats::{sample_dirichlet, sample_index, sample_mvn, softmax_with_reference};

/// How each document's topic shares are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum TopicFamily {
    /// `θ_d ~ Dirichlet(alpha)`.
    Lda { alpha: Vec<f64> },
    /// `θ_d = softmax(η_d, 0)` with `η_d ~ Normal(mu, sigma)`; `mu` has length `K - 1`.
    Ctm { mu: Vec<f64>, sigma: Matrix },
}

impl TopicFamily {
    /// Symmetric Dirichlet family.
    pub fn symmetric_lda(k: usize, alpha: f64) -> Self {
        TopicFamily::Lda { alpha: vec![alpha; k] }
    }

    fn topic_count(&self) -> usize {
        match self {
            TopicFamily::Lda { alpha } => alpha.len(),
            TopicFamily::Ctm { mu, .. } => mu.len() + 1,
        }
    }
}

/// A synthetic corpus together with the latent draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dtm: DocTermMatrix,
    /// `d × k` topic shares actually drawn for each document.
    pub theta: Matrix,
    /// Topic of every token, per document, in the order tokens were drawn.
    pub z: Vec<Vec<usize>>,
}

/// `k` topics over `v` terms drawn from a symmetric Dirichlet(`eta`).
pub fn random_topics<R: Rng + ?Sized>(k: usize, v: usize, eta: f64, rng: &mut R) -> Matrix {
    let conc = vec![eta; v];
    let rows = (0..k).map(|_| sample_dirichlet(rng, &conc)).collect();
    Matrix::from_rows(rows).expect("rows have equal length")
}

/// Draws a corpus from the topic-model generative process: shares per
/// document from `family`, then a topic and a term for every token.
pub fn generate_corpus(
    beta: &Matrix,
    doc_lengths: &[usize],
    seed: u64,
    family: &TopicFamily,
) -> Result<SyntheticCorpus> {
    let k = beta.rows();
    if k == 0 || family.topic_count() != k {
        return Err(Error::invalid(format!(
            "topic prior has {} topics but beta has {k} rows",
            family.topic_count()
        )));
    }
    if beta.max_row_sum_error() > 1e-8 || beta.as_slice().iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::invalid("beta rows must be probability vectors"));
    }
    if doc_lengths.contains(&0) {
        return Err(Error::invalid("document lengths must be positive"));
    }
    let chol = match family {
        TopicFamily::Lda { alpha } => {
            if alpha.iter().any(|&a| !(a > 0.0)) {
                return Err(Error::invalid("Dirichlet concentrations must be positive"));
            }
            None
        }
        TopicFamily::Ctm { mu, sigma } => {
            let m = DMatrix::from_row_slice(sigma.rows(), sigma.cols(), sigma.as_slice());
            if m.nrows() != mu.len() || m.ncols() != mu.len() {
                return Err(Error::invalid("sigma must be (K-1) x (K-1)"));
            }
            let c = m
                .cholesky()
                .ok_or_else(|| Error::invalid("sigma is not positive definite"))?;
            Some((DVector::from_column_slice(mu), c.l()))
        }
    };

    let mut rng = rng::stream(seed, 0);
    let mut theta = Matrix::zeros(doc_lengths.len(), k);
    let mut z = Vec::with_capacity(doc_lengths.len());
    let mut rows = Vec::with_capacity(doc_lengths.len());
    for (d, &n) in doc_lengths.iter().enumerate() {
        let shares = match (family, &chol) {
            (TopicFamily::Lda { alpha }, _) => sample_dirichlet(&mut rng, alpha),
            (TopicFamily::Ctm { .. }, Some((mu, l))) => {
                let eta = sample_mvn(&mut rng, mu, l);
                softmax_with_reference(eta.as_slice())
            }
            _ => unreachable!("cholesky factor computed for CTM"),
        };
        let mut doc_z = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for _ in 0..n {
            let topic = sample_index(&mut rng, &shares);
            let term = sample_index(&mut rng, beta.row(topic));
            doc_z.push(topic);
            counts.push((term, 1));
        }
        theta.row_mut(d).copy_from_slice(&shares);
        z.push(doc_z);
        rows.push(counts);
    }
    let docs = (0..doc_lengths.len()).map(DocKey::placeholder).collect();
    let dtm = DocTermMatrix::from_rows(docs, beta.cols(), rows)?;
    Ok(SyntheticCorpus { dtm, theta, z })
}

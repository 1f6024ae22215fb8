use agenda_core::rng;
use agenda_core::topic_models::{
    align_topics, fit_ctm, fit_lda, generate_corpus, random_topics, sweep, total_variation, CtmOptions, GibbsState,
    LdaHyper, TopicFamily,
};
use agenda_core::{DocTermMatrix, Matrix};
use proptest::prelude::*;

fn dense_corpus() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (2usize..6, 1usize..5).prop_flat_map(|(v, d)| {
        prop::collection::vec(prop::collection::vec(0u32..4, v), d)
            .prop_filter("every document needs a token", |rows| {
                rows.iter().all(|r| r.iter().sum::<u32>() > 0)
            })
    })
}

proptest! {
    #[test]
    fn conditional_matches_recount(rows in dense_corpus(), k in 1usize..5, seed in 0u64..1000, alpha in 0.05f64..3.0, eta in 0.01f64..1.0) {
        let dtm = DocTermMatrix::from_dense(&rows).unwrap();
        let mut r = rng::stream(seed, 0);
        let state = GibbsState::random(&dtm, k, &mut r).unwrap();
        let hyper = LdaHyper::new(k).with_alpha(alpha).with_eta(eta);
        let z = state.assignments_by_doc();
        let tokens: Vec<Vec<usize>> = (0..dtm.n_docs()).map(|d| dtm.doc_tokens(d)).collect();
        let v = dtm.n_terms() as f64;

        for d in 0..dtm.n_docs() {
            for n in 0..tokens[d].len() {
                let w = tokens[d][n];
                // Counts over every other token.
                let mut weights = vec![0.0; k];
                for (t, w_t) in weights.iter_mut().enumerate() {
                    let mut n_kw = 0.0;
                    let mut n_k = 0.0;
                    for (dd, doc) in tokens.iter().enumerate() {
                        for (nn, &ww) in doc.iter().enumerate() {
                            if (dd, nn) != (d, n) && z[dd][nn] == t {
                                n_k += 1.0;
                                if ww == w {
                                    n_kw += 1.0;
                                }
                            }
                        }
                    }
                    let n_dk = (0..tokens[d].len()).filter(|&nn| nn != n && z[d][nn] == t).count() as f64;
                    *w_t = (n_kw + eta) / (n_k + v * eta) * (n_dk + alpha);
                }
                let s: f64 = weights.iter().sum();
                let got = state.gibbs_conditional(d, n, &hyper);
                prop_assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (g, w) in got.iter().zip(&weights) {
                    prop_assert!((g - w / s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sweeps_keep_counts_consistent(rows in dense_corpus(), k in 1usize..5, seed in 0u64..1000) {
        let dtm = DocTermMatrix::from_dense(&rows).unwrap();
        let mut r = rng::stream(seed, 1);
        let mut state = GibbsState::random(&dtm, k, &mut r).unwrap();
        let hyper = LdaHyper::new(k);
        let mut weights = Vec::new();
        for _ in 0..5 {
            sweep(&mut state, &hyper, &mut r, &mut weights);
            prop_assert!(state.counts_consistent());
            prop_assert_eq!((0..k).map(|t| state.topic_total(t) as u64).sum::<u64>(), dtm.total_tokens());
        }
    }
}

fn sparse_truth(k: usize, v: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, 0);
    random_topics(k, v, 0.05, &mut r)
}

#[test]
fn lda_recovers_well_separated_topics() {
    let beta = sparse_truth(4, 60, 3);
    let corpus = generate_corpus(&beta, &vec![120; 200], 4, &TopicFamily::symmetric_lda(4, 0.1)).unwrap();
    let hyper = LdaHyper::new(4).with_alpha(0.1).with_iters(300, 150).with_seed(5);
    let fit = fit_lda(&corpus.dtm, &hyper).unwrap();
    let a = align_topics(&fit.beta, &beta);
    assert!(a.max_distance() < 0.1, "{:?}", a.distances);
    assert!(fit.loglik.last().unwrap() > &fit.loglik[0]);
    for d in 0..fit.theta.rows() {
        assert!((fit.theta.row(d).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn alignment_ignores_topic_labels() {
    let beta = sparse_truth(5, 30, 8);
    let estimate = sparse_truth(5, 30, 9);
    let perm = [3, 0, 4, 1, 2];
    let shuffled = Matrix::from_rows(perm.iter().map(|&i| estimate.row(i).to_vec()).collect()).unwrap();
    let a = align_topics(&estimate, &beta);
    let b = align_topics(&shuffled, &beta);
    assert_eq!(a.distances, b.distances);
    for i in 0..5 {
        assert_eq!(perm[b.order[i]], a.order[i]);
        assert_eq!(b.distances[i], total_variation(beta.row(i), shuffled.row(b.order[i])));
    }
}

#[test]
fn ctm_shares_are_logistic_transform_of_latent_means() {
    let beta = sparse_truth(3, 40, 11);
    let family = TopicFamily::Ctm {
        mu: vec![0.5, -0.5],
        sigma: Matrix::from_rows(vec![vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap(),
    };
    let corpus = generate_corpus(&beta, &vec![80; 60], 12, &family).unwrap();
    let hyper = LdaHyper::new(3).with_iters(120, 60).with_seed(13);
    let (fit, params) = fit_ctm(&corpus.dtm, &hyper, &CtmOptions::default()).unwrap();
    for d in 0..fit.theta.rows() {
        let eta = params.eta_doc.row(d);
        let denom = 1.0 + eta.iter().map(|e| e.exp()).sum::<f64>();
        let expected: Vec<f64> = eta.iter().map(|e| e.exp() / denom).chain([1.0 / denom]).collect();
        for (a, b) in fit.theta.row(d).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(
        params.acceptance > 0.05 && params.acceptance < 0.95,
        "{}",
        params.acceptance
    );
    let s = &params.sigma;
    assert!(
        (s.get(0, 1) - s.get(1, 0)).abs() < 1e-12
            && s.get(0, 0) > 0.0
            && s.get(0, 0) * s.get(1, 1) > s.get(0, 1).powi(2)
    );
}

#[test]
fn chains_with_the_same_seed_agree_and_other_seeds_differ() {
    let beta = sparse_truth(3, 25, 21);
    let corpus = generate_corpus(&beta, &vec![30; 20], 22, &TopicFamily::symmetric_lda(3, 0.5)).unwrap();
    let hyper = LdaHyper::new(3).with_iters(40, 20).with_seed(1);
    let a = fit_lda(&corpus.dtm, &hyper).unwrap();
    assert_eq!(a, fit_lda(&corpus.dtm, &hyper).unwrap());
    assert_ne!(a, fit_lda(&corpus.dtm, &hyper.clone().with_seed(2)).unwrap());
}

use agenda_core::diagnostics::{coherence, dispersion, exclusivity, heldout_loglik, split_documents, FoldIn};
use agenda_core::rng;
use agenda_core::topic_models::{generate_corpus, random_topics, TopicFamily};
use agenda_core::{DocTermMatrix, Matrix};
use proptest::prelude::*;

fn prob_row(v: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, v).prop_map(|r| {
        let s: f64 = r.iter().sum();
        r.into_iter().map(|x| x / s).collect()
    })
}

fn dense(v: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0u32..3, v), 1..12)
        .prop_filter("nonempty docs", |rows| rows.iter().all(|r| r.iter().any(|&x| x > 0)))
}

/// Straight transcription of the UMass sum over ranked term pairs.
fn umass(rows: &[Vec<u32>], ranked: &[usize]) -> f64 {
    let df = |v: usize| rows.iter().filter(|r| r[v] > 0).count() as f64;
    let co = |a: usize, b: usize| rows.iter().filter(|r| r[a] > 0 && r[b] > 0).count() as f64;
    let mut s = 0.0;
    for j in 1..ranked.len() {
        for i in 0..j {
            s += ((co(ranked[i], ranked[j]) + 1.0) / df(ranked[i]).max(1.0)).ln();
        }
    }
    s
}

fn ranked(row: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

proptest! {
    #[test]
    fn identical_topics_share_exclusivity_equally(row in prob_row(8), k in 1usize..6, m in 1usize..8) {
        let beta = Matrix::from_rows(vec![row; k]).unwrap();
        for e in exclusivity(&beta, m) {
            prop_assert!((e - 1.0 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_matches_pair_counts_in_any_document_order(
        rows in dense(6),
        topics in prop::collection::vec(prob_row(6), 1..4),
        m in 2usize..6,
        rot in 0usize..12,
    ) {
        let beta = Matrix::from_rows(topics.clone()).unwrap();
        let dtm = DocTermMatrix::from_dense(&rows).unwrap();
        let got = coherence(&beta, &dtm, m).unwrap();
        for (k, t) in topics.iter().enumerate() {
            prop_assert!((got[k] - umass(&rows, &ranked(t, m))).abs() < 1e-9);
        }
        let mut shuffled = rows.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let again = coherence(&beta, &DocTermMatrix::from_dense(&shuffled).unwrap(), m).unwrap();
        prop_assert_eq!(got, again);
    }

    #[test]
    fn split_partitions_documents(n in 2usize..200, frac in 0.05f64..0.95, seed in 0u64..50) {
        let (train, held) = split_documents(n, frac, seed);
        let mut all: Vec<usize> = train.iter().chain(&held).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!train.is_empty());
        prop_assert_eq!(held.len(), ((n as f64 * frac).round() as usize).min(n - 1));
        prop_assert_eq!(split_documents(n, frac, seed), (train, held));
    }
}

#[test]
fn exclusivity_hand_example() {
    let beta = Matrix::from_rows(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
    let e = exclusivity(&beta, 2);
    assert!((e[0] - (0.75 + 0.6) / 2.0).abs() < 1e-12);
    assert!((e[1] - (0.6 / 0.7 + 0.25) / 2.0).abs() < 1e-12);
}

#[test]
fn coherence_hand_example() {
    // Term 0 in docs {0,1,2}, term 1 in {0,1}, term 2 in {2}.
    let dtm = DocTermMatrix::from_dense(&[vec![1, 2, 0], vec![3, 1, 0], vec![1, 0, 4]]).unwrap();
    let beta = Matrix::from_rows(vec![vec![0.5, 0.3, 0.2]]).unwrap();
    let c = coherence(&beta, &dtm, 3).unwrap()[0];
    let expected = (3.0f64 / 3.0).ln() + (2.0f64 / 3.0).ln() + (1.0f64 / 2.0).ln();
    assert!((c - expected).abs() < 1e-12);
}

#[test]
fn dispersion_hand_example() {
    let dtm = DocTermMatrix::from_dense(&[vec![2, 0, 1], vec![0, 3, 1]]).unwrap();
    let theta = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.25, 0.75]]).unwrap();
    let beta = Matrix::from_rows(vec![vec![0.5, 0.25, 0.25], vec![0.0, 0.5, 0.5]]).unwrap();
    // Expected shares: doc 0 (0.5, 0.25, 0.25), doc 1 (0.125, 0.4375, 0.4375).
    let r = |x: f64, n: f64, m: f64| (x - n * m).powi(2) / (n * m * (1.0 - m));
    let expected = (r(2.0, 3.0, 0.5) + r(1.0, 3.0, 0.25) + r(3.0, 4.0, 0.4375) + r(1.0, 4.0, 0.4375)) / 4.0;
    assert!((dispersion(&theta, &beta, &dtm).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn true_topics_predict_held_out_words_better_than_uniform_ones() {
    let mut r = rng::stream(31, 0);
    let beta = random_topics(5, 80, 0.05, &mut r);
    let corpus = generate_corpus(&beta, &vec![60; 40], 32, &TopicFamily::symmetric_lda(5, 0.2)).unwrap();
    let fold = FoldIn {
        sweeps: 60,
        burn_in: 30,
        seed: 4,
    };
    let truth = heldout_loglik(&beta, &corpus.dtm, 0.2, &fold).unwrap();
    let uniform = Matrix::from_rows(vec![vec![1.0 / 80.0; 80]; 5]).unwrap();
    let flat = heldout_loglik(&uniform, &corpus.dtm, 0.2, &fold).unwrap();
    assert!((flat - (1.0f64 / 80.0).ln()).abs() < 1e-9);
    assert!(truth > flat + 0.5, "{truth} vs {flat}");
    assert_eq!(truth, heldout_loglik(&beta, &corpus.dtm, 0.2, &fold).unwrap());
}

#[test]
fn true_shares_disperse_less_than_shuffled_ones() {
    let mut r = rng::stream(41, 0);
    let beta = random_topics(4, 50, 0.05, &mut r);
    let corpus = generate_corpus(&beta, &vec![100; 60], 42, &TopicFamily::symmetric_lda(4, 0.1)).unwrap();
    let good = dispersion(&corpus.theta, &beta, &corpus.dtm).unwrap();
    let rows: Vec<Vec<f64>> = (0..60).map(|d| corpus.theta.row((d + 1) % 60).to_vec()).collect();
    let bad = dispersion(&Matrix::from_rows(rows).unwrap(), &beta, &corpus.dtm).unwrap();
    assert!(good < 3.0 && bad > 10.0 * good, "{good} {bad}");
}

use agenda_core::corpus::{preprocess, PreprocessConfig};
use agenda_core::event_model::{fit, simulate_panel, EventModelSpec, SimulationDesign, SimulationTruth};
use agenda_core::rng;
use agenda_core::topic_models::{generate_corpus, random_topics, sweep, GibbsState, LdaHyper, TopicFamily};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::Rng;

fn gibbs_sweep(c: &mut Criterion) {
    let mut r = rng::stream(1, 0);
    let beta = random_topics(20, 2000, 0.05, &mut r);
    let corpus = generate_corpus(&beta, &vec![200; 500], 2, &TopicFamily::symmetric_lda(20, 0.5)).unwrap();
    let hyper = LdaHyper::new(20);
    let state = GibbsState::random(&corpus.dtm, 20, &mut r).unwrap();
    let mut g = c.benchmark_group("lda");
    g.throughput(Throughput::Elements(corpus.dtm.total_tokens()));
    g.bench_function("sweep_100k_tokens_k20", |b| {
        let mut weights = Vec::new();
        b.iter_batched_ref(
            || state.clone(),
            |s| sweep(s, &hyper, &mut r, &mut weights),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn event_model(c: &mut Criterion) {
    let design = SimulationDesign::default();
    let sim = simulate_panel(&design, &SimulationTruth::draw(&design, 3), 4).unwrap();
    let spec = EventModelSpec {
        p: design.p,
        chains: 1,
        iters: 200,
        burn_in: 100,
        ..Default::default()
    };
    let mut g = c.benchmark_group("event_model");
    g.sample_size(10);
    g.bench_function("fit_200_iters_one_chain", |b| {
        b.iter(|| fit(&sim.panel, &sim.timeline, &spec).unwrap())
    });
    g.finish();
}

fn text(c: &mut Criterion) {
    let words = [
        "the", "tariff", "New", "South", "Wales", "wool,", "of", "Defence", "tbe", "budget", "1942", "wheat",
    ];
    let mut r = rng::stream(5, 0);
    let day: String = (0..20_000)
        .map(|_| words[r.random_range(0..words.len())])
        .collect::<Vec<_>>()
        .join(" ");
    let cfg = PreprocessConfig::default();
    let mut g = c.benchmark_group("corpus");
    g.throughput(Throughput::Bytes(day.len() as u64));
    g.bench_function("preprocess_20k_words", |b| b.iter(|| preprocess(&day, &cfg)));
    g.finish();
}

criterion_group!(benches, gibbs_sweep, event_model, text);
criterion_main!(benches);

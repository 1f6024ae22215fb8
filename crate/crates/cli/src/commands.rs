use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use agenda_core::cap_mapping::{aggregate, CapScheme, ThetaPanel};
use agenda_core::corpus::{build_matrix, derive_sitting_periods, read_docs_csv, write_calendar_csv, PreprocessConfig};
use agenda_core::diagnostics::{sweep_topics, write_report_csv, write_topic_csv, FoldIn, SweepOptions};
use agenda_core::event_model::{
    compare_neighbors, detect_outlier_days, fit, simulate_panel, write_election_table, write_government_table,
    write_outliers_csv, Block, EventModelSpec, EventPosterior, Level, SimulationDesign, SimulationTruth, Timeline,
};
use agenda_core::matrix::format_float;
use agenda_core::record_parser::{export_tidy, parse_days, write_tidy_csv, RawPage, SpeakerPatterns};
use agenda_core::topic_models::{
    fit_ctm, fit_lda, generate_corpus, random_topics, read_theta_csv, write_beta_csv, write_ctm_csv, write_theta_csv,
    CtmOptions, LdaHyper, TopicFamily, TopicModelFit,
};
use agenda_core::{rng, DocTermMatrix, Vocabulary};

use crate::config::{pick, resolve_seed, FileConfig};
use crate::error::{CliError, Result};
use crate::manifest::{check_upstream, Recorder};
use crate::pages::{generate_pages, PageDesign};
use crate::svg::{interval_chart, line_chart, Interval, Series};
use crate::{
    Command, Common, DiagnosticsArgs, FiguresArgs, FitEventsArgs, FitTopicsArgs, MapCapArgs, ModelKind, ParseArgs,
    PosteriorArgs, PreprocessArgs, SamplerArgs, SimulateArgs, SimulateKind,
};

/// Outcome of a command body: the effective settings and the seeds used.
type Settings = (Value, Vec<u64>);

pub fn execute(command: &Command) -> Result<()> {
    let (name, common) = match command {
        Command::Parse(a) => ("parse", &a.common),
        Command::Preprocess(a) => ("preprocess", &a.common),
        Command::FitTopics(a) => ("fit-topics", &a.common),
        Command::Diagnostics(a) => ("diagnostics", &a.common),
        Command::MapCap(a) => ("map-cap", &a.common),
        Command::FitEvents(a) => ("fit-events", &a.common),
        Command::Compare(a) => ("compare", &a.common),
        Command::Outliers(a) => ("outliers", &a.common),
        Command::Figures(a) => ("figures", &a.common),
        Command::Simulate(a) => ("simulate", &a.common),
    };
    let file = FileConfig::load_optional(common.config.as_deref())?;
    let threads = pick(common.threads, file.threads, 0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let mut rec = Recorder::new(name, &common.out)?;
    if let Some(c) = &common.config {
        rec.input(c)?;
    }
    let (settings, seeds) = pool.install(|| match command {
        Command::Parse(a) => parse(a, &file, &mut rec),
        Command::Preprocess(a) => preprocess(a, &file, &mut rec),
        Command::FitTopics(a) => fit_topics(a, &file, &mut rec),
        Command::Diagnostics(a) => diagnostics(a, &file, &mut rec),
        Command::MapCap(a) => map_cap(a, &file, &mut rec),
        Command::FitEvents(a) => fit_events(a, &file, &mut rec),
        Command::Compare(a) => compare(a, &file, &mut rec),
        Command::Outliers(a) => outliers(a, &file, &mut rec),
        Command::Figures(a) => figures(a, &file, &mut rec),
        Command::Simulate(a) => simulate(a, &file, &mut rec),
    })?;
    rec.finish(settings, seeds)?;
    Ok(())
}

fn open(path: &Path, rec: &mut Recorder) -> Result<BufReader<File>> {
    rec.input(path)?;
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(BufReader::new(f))
}

fn upstream(dir: &Path, common: &Common, rec: &mut Recorder) -> Result<()> {
    for w in check_upstream(dir, common.force)? {
        rec.warnings.push(w);
    }
    Ok(())
}

fn flush<W: Write>(mut w: csv::Writer<W>, path: &str) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn seed_of(common: &Common, file: &FileConfig) -> Result<u64> {
    resolve_seed(common.seed, file.seed)
}

fn path_json(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| json!(p.display().to_string()))
}

fn parse(a: &ParseArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    let lenient = a.lenient || file.lenient.unwrap_or(false);
    let patterns_path = a.speaker_patterns.clone().or_else(|| file.speaker_patterns.clone());
    let patterns = match &patterns_path {
        Some(p) => {
            rec.input(p)?;
            SpeakerPatterns::from_file(p)?
        }
        None => SpeakerPatterns::default(),
    };
    let entries = fs::read_dir(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(agenda_core::Error::invalid(format!("no .txt page files in {}", a.input.display())).into());
    }
    let mut pages = Vec::with_capacity(files.len());
    for path in &files {
        match RawPage::from_file(path) {
            Ok(p) => {
                rec.input(path)?;
                pages.push(p);
            }
            Err(e) if lenient => rec.warn(format!("skipping {}: {e}", path.display())),
            Err(e) => return Err(e.into()),
        }
    }
    let mut turns = Vec::new();
    let mut order: Vec<&RawPage> = pages.iter().collect();
    order.sort_by_key(|p| (p.date, p.chamber));
    for (page, result) in order.iter().zip(parse_days(&pages, &patterns)) {
        match result {
            Ok(t) => turns.extend(t),
            Err(e) if lenient => rec.warn(format!("skipping {} {}: {e}", page.chamber, page.date)),
            Err(e) => return Err(e.into()),
        }
    }
    let rows = export_tidy(&turns);
    let w = rec.create("tidy.csv")?;
    write_tidy_csv(&rows, w)?;
    Ok((
        json!({ "lenient": lenient, "speaker_patterns": path_json(&patterns_path), "pages": pages.len() }),
        vec![],
    ))
}

fn preprocess(a: &PreprocessArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    upstream(&a.corpus, &a.common, rec)?;
    let stopwords = a.stopwords.clone().or_else(|| file.stopwords.clone());
    let multiword = a.multiword.clone().or_else(|| file.multiword.clone());
    let substitutions = a.substitutions.clone().or_else(|| file.substitutions.clone());
    for p in [&stopwords, &multiword, &substitutions].into_iter().flatten() {
        rec.input(p)?;
    }
    let min_term_count = pick(
        a.min_term_count,
        file.min_term_count,
        PreprocessConfig::default().min_term_count,
    );
    let cfg = PreprocessConfig::load(
        stopwords.as_deref(),
        multiword.as_deref(),
        substitutions.as_deref(),
        Some(min_term_count),
    )?;
    let rows = agenda_core::record_parser::read_tidy_csv(open(&a.corpus.join("tidy.csv"), rec)?)?;
    let (vocab, dtm) = build_matrix(&rows, &cfg)?;
    write_corpus(&vocab, &dtm, rec)?;
    let dates: Vec<_> = dtm.docs().iter().map(|d| d.date).collect();
    let calendar = derive_sitting_periods(&dates)?;
    write_calendar_csv(&calendar, dtm.docs(), rec.create("calendar.csv")?)?;
    Ok((
        json!({
            "min_term_count": min_term_count,
            "stopwords": path_json(&stopwords),
            "multiword": path_json(&multiword),
            "substitutions": path_json(&substitutions),
        }),
        vec![],
    ))
}

fn write_corpus(vocab: &Vocabulary, dtm: &DocTermMatrix, rec: &mut Recorder) -> Result<()> {
    let w = rec.create("vocab.txt")?;
    vocab.write(w)?;
    dtm.write_triplets(rec.create("dtm.csv")?)?;
    dtm.write_docs(rec.create("docs.csv")?)?;
    Ok(())
}

fn load_corpus(dir: &Path, rec: &mut Recorder) -> Result<(Vocabulary, DocTermMatrix)> {
    let vocab = Vocabulary::read(open(&dir.join("vocab.txt"), rec)?)?;
    let docs = read_docs_csv(open(&dir.join("docs.csv"), rec)?)?;
    let dtm = DocTermMatrix::read_triplets(open(&dir.join("dtm.csv"), rec)?, docs, vocab.len())?;
    Ok((vocab, dtm))
}

fn hyper(k: usize, s: &SamplerArgs, file: &FileConfig, seed: u64) -> LdaHyper {
    let iters = pick(s.iters, file.iters, 1000);
    let base = LdaHyper::new(k.max(1));
    LdaHyper {
        k,
        alpha: pick(s.alpha, file.alpha, base.alpha),
        eta: pick(s.eta, file.eta, base.eta),
        iters,
        burn_in: pick(s.burn_in, file.burn_in, iters / 2),
        thin: pick(s.thin, file.thin, 1),
        chains: pick(s.chains, file.chains, 1),
        seed,
    }
}

fn hyper_json(h: &LdaHyper) -> Value {
    json!({
        "k": h.k, "alpha": h.alpha, "eta": h.eta, "iters": h.iters,
        "burn_in": h.burn_in, "thin": h.thin, "chains": h.chains, "seed": h.seed,
    })
}

fn fit_topics(a: &FitTopicsArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    upstream(&a.corpus, &a.common, rec)?;
    let seed = seed_of(&a.common, file)?;
    let model = match (a.model, &file.model) {
        (Some(m), _) => m,
        (None, Some(s)) => <ModelKind as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Config {
            path: a.common.config.clone().unwrap_or_default(),
            message: format!("model must be `lda` or `ctm`, got `{s}`"),
        })?,
        (None, None) => ModelKind::Lda,
    };
    let k = pick(a.k, file.k, 80);
    let h = hyper(k, &a.sampler, file, seed);
    let (vocab, dtm) = load_corpus(&a.corpus, rec)?;
    let fit: TopicModelFit = match model {
        ModelKind::Lda => fit_lda(&dtm, &h)?,
        ModelKind::Ctm => {
            let (fit, params) = fit_ctm(&dtm, &h, &CtmOptions::default())?;
            write_ctm_csv(&params, rec.create("ctm.csv")?)?;
            fit
        }
    };
    write_beta_csv(&fit.beta, vocab.terms(), rec.create("beta.csv")?)?;
    write_theta_csv(&fit.theta, dtm.docs(), rec.create("theta.csv")?)?;

    let mut w = csv::Writer::from_writer(rec.create("top_terms.csv")?);
    w.write_record(["topic", "rank", "term", "probability"])
        .map_err(agenda_core::Error::from)?;
    for t in 0..fit.k() {
        for (r, &v) in fit.top_terms(t, 10).iter().enumerate() {
            w.write_record([
                (t + 1).to_string(),
                (r + 1).to_string(),
                vocab.term(v).to_string(),
                format_float(fit.beta.get(t, v)),
            ])
            .map_err(agenda_core::Error::from)?;
        }
    }
    flush(w, "top_terms.csv")?;

    let mut w = csv::Writer::from_writer(rec.create("loglik.csv")?);
    w.write_record(["sweep", "loglik"]).map_err(agenda_core::Error::from)?;
    for (i, ll) in fit.loglik.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format_float(*ll)])
            .map_err(agenda_core::Error::from)?;
    }
    flush(w, "loglik.csv")?;

    let mut settings = hyper_json(&h);
    settings["model"] = json!(if model == ModelKind::Lda { "lda" } else { "ctm" });
    Ok((settings, vec![seed]))
}

fn diagnostics(a: &DiagnosticsArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    upstream(&a.corpus, &a.common, rec)?;
    let seed = seed_of(&a.common, file)?;
    let ks = pick(a.ks.clone(), file.ks.clone(), vec![20, 40, 60, 80, 100]);
    if ks.is_empty() {
        return Err(CliError::Usage("--ks needs at least one topic count".into()));
    }
    let template = hyper(ks[0], &a.sampler, file, seed);
    let defaults = SweepOptions::default();
    let opts = SweepOptions {
        heldout_fraction: pick(a.heldout_fraction, file.heldout_fraction, defaults.heldout_fraction),
        top_words: pick(a.top_words, file.top_words, defaults.top_words),
        fold_in: FoldIn {
            seed,
            ..defaults.fold_in
        },
    };
    let (_, dtm) = load_corpus(&a.corpus, rec)?;
    let mut reports = Vec::new();
    for (k, r) in sweep_topics(&dtm, &ks, &template, &opts)? {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => rec.warn(format!("K = {k} failed: {e}")),
        }
    }
    if reports.is_empty() {
        return Err(agenda_core::Error::model("every topic count in the sweep failed").into());
    }
    write_report_csv(&reports, rec.create("diagnostics.csv")?)?;
    write_topic_csv(&reports, rec.create("diagnostics_topics.csv")?)?;
    let series = vec![Series {
        name: "held-out".into(),
        points: reports.iter().map(|r| (r.k as f64, r.heldout_loglik)).collect(),
    }];
    write_text(
        rec,
        "diagnostics.svg",
        &line_chart("Held-out log-likelihood per word", "K", "log-likelihood", &series),
    )?;
    let mut settings = hyper_json(&template);
    settings["ks"] = json!(ks);
    settings["heldout_fraction"] = json!(opts.heldout_fraction);
    settings["top_words"] = json!(opts.top_words);
    Ok((settings, vec![seed]))
}

fn write_text(rec: &mut Recorder, name: &str, text: &str) -> Result<()> {
    let path = rec.output(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn map_cap(a: &MapCapArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    upstream(&a.topics, &a.common, rec)?;
    let scheme_path = a.scheme.clone().or_else(|| file.scheme.clone());
    let scheme = match &scheme_path {
        Some(p) => CapScheme::from_reader(open(p, rec)?)?,
        None => CapScheme::table1(),
    };
    let governments = a.governments.clone().or_else(|| file.governments.clone());
    let elections = a.elections.clone().or_else(|| file.elections.clone());
    let timeline = match (&governments, &elections) {
        (Some(g), Some(e)) => Timeline::from_readers(open(g, rec)?, open(e, rec)?)?,
        (None, None) => Timeline::australia(),
        _ => {
            return Err(CliError::Usage(
                "--governments and --elections must be given together".into(),
            ))
        }
    };
    let (docs, theta) = read_theta_csv(open(&a.topics.join("theta.csv"), rec)?)?;
    let shares = aggregate(&theta, &scheme)?;
    let dates: Vec<_> = docs.iter().map(|d| d.date).collect();
    let calendar = derive_sitting_periods(&dates)?;
    let panel = ThetaPanel::build(&docs, shares, scheme.groups().to_vec(), &calendar, &timeline)?;
    write_panel(&panel, &timeline, rec)?;
    scheme.write(rec.create("scheme.csv")?)?;
    write_calendar_csv(&calendar, &docs, rec.create("calendar.csv")?)?;
    Ok((
        json!({
            "scheme": path_json(&scheme_path),
            "governments": path_json(&governments),
            "elections": path_json(&elections),
        }),
        vec![],
    ))
}

fn write_panel(panel: &ThetaPanel, timeline: &Timeline, rec: &mut Recorder) -> Result<()> {
    panel.write_csv(rec.create("panel.csv")?)?;
    panel.write_groups_csv(rec.create("panel_groups.csv")?)?;
    timeline.write_governments(rec.create("timeline_governments.csv")?)?;
    timeline.write_elections(rec.create("timeline_elections.csv")?)?;
    Ok(())
}

fn load_panel(dir: &Path, rec: &mut Recorder) -> Result<(ThetaPanel, Timeline)> {
    let panel = ThetaPanel::read_csv(
        open(&dir.join("panel.csv"), rec)?,
        open(&dir.join("panel_groups.csv"), rec)?,
    )?;
    let timeline = Timeline::from_readers(
        open(&dir.join("timeline_governments.csv"), rec)?,
        open(&dir.join("timeline_elections.csv"), rec)?,
    )?;
    Ok((panel, timeline))
}

fn fit_events(a: &FitEventsArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    upstream(&a.panel, &a.common, rec)?;
    let seed = seed_of(&a.common, file)?;
    let (panel, timeline) = load_panel(&a.panel, rec)?;
    let d = EventModelSpec::default();
    let iters = pick(a.iters, file.event_iters, d.iters);
    let spec = EventModelSpec {
        p: panel.p(),
        prior_sd_alpha: pick(a.prior_sd_alpha, file.prior_sd_alpha, d.prior_sd_alpha),
        prior_sd_beta: pick(a.prior_sd_beta, file.prior_sd_beta, d.prior_sd_beta),
        prior_sd_mu: pick(a.prior_sd_mu, file.prior_sd_mu, d.prior_sd_mu),
        sigma_upper: pick(a.sigma_upper, file.sigma_upper, d.sigma_upper),
        chains: pick(a.chains, file.event_chains, d.chains),
        iters,
        burn_in: pick(a.burn_in, file.event_burn_in, iters / 2),
        thin: pick(a.thin, file.event_thin, d.thin),
        seed,
    };
    let post = fit(&panel, &timeline, &spec)?;
    post.write_draws_csv(rec.create("draws.csv")?)?;
    post.write_summary_csv(rec.create("summary.csv")?)?;
    post.write_trace_csv(rec.create("trace.csv")?)?;
    let mut w = csv::Writer::from_writer(rec.create("acceptance.csv")?);
    w.write_record(["chain", "acceptance"])
        .map_err(agenda_core::Error::from)?;
    for (c, ch) in post.chains.iter().enumerate() {
        w.write_record([c.to_string(), format_float(ch.acceptance)])
            .map_err(agenda_core::Error::from)?;
    }
    flush(w, "acceptance.csv")?;
    let spec_json = serde_json::to_value(&spec).expect("spec serializes");
    write_text(
        rec,
        "spec.json",
        &(serde_json::to_string_pretty(&spec_json).expect("json") + "\n"),
    )?;
    let (n, over) = post.rhat_counts();
    if over as f64 > 0.05 * n as f64 {
        rec.warnings
            .push(format!("{over} of {n} parameters have split R-hat above 1.1"));
    }
    Ok((spec_json, vec![seed]))
}

fn load_posterior(
    events: &Path,
    panel_dir: &Path,
    common: &Common,
    rec: &mut Recorder,
) -> Result<(ThetaPanel, Timeline, EventPosterior)> {
    upstream(events, common, rec)?;
    upstream(panel_dir, common, rec)?;
    let (panel, timeline) = load_panel(panel_dir, rec)?;
    let spec_path = events.join("spec.json");
    let text = fs::read_to_string(&spec_path).map_err(|e| CliError::io(&spec_path, e))?;
    rec.input(&spec_path)?;
    let spec: EventModelSpec = serde_json::from_str(&text).map_err(|source| CliError::Manifest {
        path: spec_path,
        source,
    })?;
    let post = EventPosterior::read_draws_csv(open(&events.join("draws.csv"), rec)?, &panel, &timeline, &spec)?;
    Ok((panel, timeline, post))
}

fn credibility(flag: Option<f64>, file: &FileConfig) -> Result<f64> {
    let c = pick(flag, file.credibility, 0.95);
    if !(c > 0.0 && c < 1.0) {
        return Err(CliError::Usage(format!("credibility must lie in (0, 1), got {c}")));
    }
    Ok(c)
}

fn compare(a: &PosteriorArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    let level = credibility(a.credibility, file)?;
    let (panel, timeline, post) = load_posterior(&a.events, &a.panel, &a.common, rec)?;
    let gov = compare_neighbors(&post, &timeline, Level::Government, level);
    write_government_table(&gov, &timeline, &panel.groups, rec.create("governments.csv")?)?;
    let elec = compare_neighbors(&post, &timeline, Level::Election, level);
    write_election_table(&elec, &timeline, &panel.groups, rec.create("elections.csv")?)?;
    Ok((json!({ "credibility": level }), vec![]))
}

fn outliers(a: &PosteriorArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    let threshold = pick(a.threshold, file.threshold, 3.0);
    let (panel, _, post) = load_posterior(&a.events, &a.panel, &a.common, rec)?;
    let days = detect_outlier_days(&panel, &post, threshold)?;
    write_outliers_csv(&days, &panel.groups, rec.create("outliers.csv")?)?;
    Ok((json!({ "threshold": threshold }), vec![]))
}

fn figures(a: &FiguresArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    let level = credibility(a.credibility, file)?;
    let (panel, timeline, post) = load_posterior(&a.events, &a.panel, &a.common, rec)?;
    let names: Vec<&str> = panel.groups.iter().map(|g| g.1.as_str()).collect();
    let starts: std::collections::BTreeMap<usize, chrono::NaiveDate> =
        panel.rows.iter().rev().map(|r| (r.period_id, r.date)).collect();

    // Model-implied mean share of each group by sitting period.
    let mut w = csv::Writer::from_writer(rec.create("prevalence_by_period.csv")?);
    w.write_record(["chamber", "period_id", "start", "topic", "share"])
        .map_err(agenda_core::Error::from)?;
    for chamber in agenda_core::Chamber::ALL {
        let mut series: Vec<Series> = names
            .iter()
            .map(|n| Series {
                name: n.to_string(),
                points: vec![],
            })
            .collect();
        for (i, cell) in post.data.cells.iter().enumerate().filter(|(_, c)| c.chamber == chamber) {
            let conc = post.mean_concentration(i);
            let total: f64 = conc.iter().sum();
            for (p, a) in conc.iter().enumerate() {
                let share = a / total;
                series[p].points.push((cell.period_id as f64, share));
                w.write_record([
                    chamber.to_string(),
                    cell.period_id.to_string(),
                    starts[&cell.period_id].to_string(),
                    names[p].to_string(),
                    format_float(share),
                ])
                .map_err(agenda_core::Error::from)?;
            }
        }
        if series.iter().any(|s| !s.points.is_empty()) {
            let title = format!("Model estimates of topic prevalence by sitting period ({chamber})");
            write_text(
                rec,
                &format!("prevalence_{chamber}.svg"),
                &line_chart(&title, "sitting period", "share", &series),
            )?;
        }
    }
    flush(w, "prevalence_by_period.csv")?;

    // Government levels, for governments with data.
    let mut w = csv::Writer::from_writer(rec.create("government_levels.csv")?);
    w.write_record(["government", "name", "topic", "mean", "lower", "upper"])
        .map_err(agenda_core::Error::from)?;
    let mut groups: Vec<(String, Vec<Interval>)> = names.iter().map(|n| (n.to_string(), vec![])).collect();
    for (g, cells) in post.data.government_cells.iter().enumerate() {
        if cells.is_empty() {
            continue;
        }
        let gov = &timeline.governments()[g];
        for p in 0..post.p() {
            let s = post.level_samples(g, p).concat();
            let (lower, mid, upper) = summarize(s, level);
            groups[p].1.push(Interval {
                x: gov.id as f64,
                lower,
                mid,
                upper,
            });
            w.write_record([
                gov.id.to_string(),
                gov.name.clone(),
                names[p].to_string(),
                format_float(mid),
                format_float(lower),
                format_float(upper),
            ])
            .map_err(agenda_core::Error::from)?;
        }
    }
    flush(w, "government_levels.csv")?;
    write_text(
        rec,
        "government_levels.svg",
        &interval_chart("Prime-minister levels", "government", "log concentration", &groups),
    )?;

    // Election coefficients, for elections whose periods carry decay information.
    let mut w = csv::Writer::from_writer(rec.create("election_effects.csv")?);
    w.write_record(["election", "date", "topic", "mean", "lower", "upper"])
        .map_err(agenda_core::Error::from)?;
    let mut groups: Vec<(String, Vec<Interval>)> = names.iter().map(|n| (n.to_string(), vec![])).collect();
    for (e, cells) in post.data.election_cells.iter().enumerate() {
        if cells.iter().all(|&i| post.data.cells[i].decay == 0.0) {
            continue;
        }
        let el = &timeline.elections()[e];
        for p in 0..post.p() {
            let (lower, mid, upper) = summarize(post.samples(Block::Beta, e, p), level);
            groups[p].1.push(Interval {
                x: el.id as f64,
                lower,
                mid,
                upper,
            });
            w.write_record([
                el.id.to_string(),
                el.date.to_string(),
                names[p].to_string(),
                format_float(mid),
                format_float(lower),
                format_float(upper),
            ])
            .map_err(agenda_core::Error::from)?;
        }
    }
    flush(w, "election_effects.csv")?;
    write_text(
        rec,
        "election_effects.svg",
        &interval_chart("Election effects", "election", "coefficient", &groups),
    )?;

    if let Some(dir) = &a.diagnostics {
        upstream(dir, &a.common, rec)?;
        let mut rdr = csv::Reader::from_reader(open(&dir.join("diagnostics.csv"), rec)?);
        let mut points = Vec::new();
        let mut w = csv::Writer::from_writer(rec.create("heldout_by_k.csv")?);
        w.write_record(["K", "heldout"]).map_err(agenda_core::Error::from)?;
        for r in rdr.records() {
            let r = r.map_err(agenda_core::Error::from)?;
            let (k, h) = (r.get(0).unwrap_or_default(), r.get(1).unwrap_or_default());
            let parsed = k.parse::<f64>().ok().zip(h.parse::<f64>().ok());
            let (kf, hf) = parsed.ok_or_else(|| agenda_core::Error::invalid("bad row in diagnostics.csv"))?;
            points.push((kf, hf));
            w.write_record([k, h]).map_err(agenda_core::Error::from)?;
        }
        flush(w, "heldout_by_k.csv")?;
        let series = vec![Series {
            name: "held-out".into(),
            points,
        }];
        write_text(
            rec,
            "heldout_by_k.svg",
            &line_chart("Held-out log-likelihood per word", "K", "log-likelihood", &series),
        )?;
    }
    Ok((
        json!({ "credibility": level, "diagnostics": path_json(&a.diagnostics) }),
        vec![],
    ))
}

fn summarize(mut s: Vec<f64>, level: f64) -> (f64, f64, f64) {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (
        agenda_core::stats::quantile(&s, tail),
        mean,
        agenda_core::stats::quantile(&s, 1.0 - tail),
    )
}

fn simulate(a: &SimulateArgs, file: &FileConfig, rec: &mut Recorder) -> Result<Settings> {
    let seed = seed_of(&a.common, file)?;
    match a.kind {
        SimulateKind::Pages => {
            let d = PageDesign::default();
            let design = PageDesign {
                periods: a.periods.unwrap_or(d.periods),
                days_per_period: a.days_per_period.unwrap_or(d.days_per_period),
                words_per_day: a.words_per_day.unwrap_or(d.words_per_day),
                seed,
                ..d
            };
            if design.periods == 0 || !(1..=6).contains(&design.days_per_period) {
                return Err(CliError::Usage("need at least one period of one to six days".into()));
            }
            for page in generate_pages(&design) {
                write_text(rec, &page.file_name, &page.content)?;
            }
            Ok((
                json!({
                    "kind": "pages", "start": design.start.to_string(), "periods": design.periods,
                    "days_per_period": design.days_per_period, "words_per_day": design.words_per_day,
                }),
                vec![seed],
            ))
        }
        SimulateKind::Topics => {
            let k = a.k.unwrap_or(5);
            let v = a.vocab_size.unwrap_or(200);
            let n_docs = a.docs.unwrap_or(500);
            let len = a.doc_len.unwrap_or(100);
            let alpha = a.alpha.unwrap_or(50.0 / k.max(1) as f64);
            let eta = a.eta.unwrap_or(0.1);
            if k == 0 || v == 0 || n_docs == 0 || len == 0 {
                return Err(CliError::Usage(
                    "topics, vocabulary, documents and lengths must be positive".into(),
                ));
            }
            let beta = random_topics(k, v, eta, &mut rng::stream(seed, 1));
            let corpus = generate_corpus(&beta, &vec![len; n_docs], seed, &TopicFamily::symmetric_lda(k, alpha))?;
            let width = v.to_string().len();
            let terms: Vec<String> = (0..v).map(|i| format!("w{i:0width$}")).collect();
            let vocab = Vocabulary::from_terms(terms)?;
            write_corpus(&vocab, &corpus.dtm, rec)?;
            write_beta_csv(&beta, vocab.terms(), rec.create("truth_beta.csv")?)?;
            write_theta_csv(&corpus.theta, corpus.dtm.docs(), rec.create("truth_theta.csv")?)?;
            Ok((
                json!({ "kind": "topics", "k": k, "vocab_size": v, "docs": n_docs, "doc_len": len, "alpha": alpha, "eta": eta }),
                vec![seed],
            ))
        }
        SimulateKind::Events => {
            let d = SimulationDesign::default();
            let design = SimulationDesign {
                n_governments: a.n_governments.unwrap_or(d.n_governments),
                n_elections: a.n_elections.unwrap_or(d.n_elections),
                n_periods: a.periods.unwrap_or(d.n_periods),
                days_per_period: a.days_per_period.unwrap_or(d.days_per_period),
                p: a.p.unwrap_or(d.p),
                ..d
            };
            let truth = SimulationTruth::draw(&design, seed);
            let sim = simulate_panel(&design, &truth, seed)?;
            write_panel(&sim.panel, &sim.timeline, rec)?;
            let mut w = csv::Writer::from_writer(rec.create("truth.csv")?);
            w.write_record(["param", "unit", "topic", "value"])
                .map_err(agenda_core::Error::from)?;
            let blocks = [
                ("alpha", &truth.alpha),
                ("beta", &truth.beta),
                ("mu", &truth.mu),
                ("sigma", &truth.sigma),
            ];
            for (name, m) in blocks {
                for u in 0..m.rows() {
                    let unit = if name == "mu" {
                        agenda_core::Chamber::ALL[u].to_string()
                    } else {
                        (u + 1).to_string()
                    };
                    for p in 0..m.cols() {
                        w.write_record([
                            name.to_string(),
                            unit.clone(),
                            (p + 1).to_string(),
                            format_float(m.get(u, p)),
                        ])
                        .map_err(agenda_core::Error::from)?;
                    }
                }
            }
            flush(w, "truth.csv")?;
            Ok((
                json!({
                    "kind": "events", "n_governments": design.n_governments, "n_elections": design.n_elections,
                    "periods": design.n_periods, "days_per_period": design.days_per_period, "p": design.p,
                }),
                vec![seed],
            ))
        }
    }
}

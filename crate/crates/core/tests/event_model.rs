use std::collections::{BTreeMap, BTreeSet, HashMap};

use agenda_core::cap_mapping::ThetaPanel;
use agenda_core::event_model::{
    compare_neighbors, dirichlet_moments, fit, log_posterior, perturb_share, simulate_panel, Block, EventModelSpec,
    Level, ModelData, Params, SimulationDesign, SimulationTruth, Timeline,
};
use agenda_core::{rng, Chamber, Matrix};
use nalgebra::DVector;
use rand::Rng;
use statrs::distribution::{Continuous, Dirichlet, Normal};

fn small_design() -> SimulationDesign {
    SimulationDesign {
        n_governments: 3,
        n_elections: 4,
        n_periods: 12,
        days_per_period: 2,
        p: 3,
        ..SimulationDesign::default()
    }
}

/// Simulated panel with some sitting periods missing, so that election
/// periods hold fewer data periods than the design laid out.
fn gappy_panel() -> (ThetaPanel, Timeline) {
    let design = small_design();
    let sim = simulate_panel(&design, &SimulationTruth::draw(&design, 1), 2).unwrap();
    let keep: Vec<usize> = (0..sim.panel.len())
        .filter(|&i| {
            let r = &sim.panel.rows[i];
            r.period_id != 5 && !(r.chamber == Chamber::Senate && r.period_id % 3 == 0)
        })
        .collect();
    let rows = keep.iter().map(|&i| sim.panel.rows[i].clone()).collect();
    let shares = Matrix::from_rows(keep.iter().map(|&i| sim.panel.shares.row(i).to_vec()).collect()).unwrap();
    (
        ThetaPanel::new(rows, shares, sim.panel.groups.clone()).unwrap(),
        sim.timeline,
    )
}

fn normal(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).unwrap().ln_pdf(x)
}

/// Log posterior written out row by row from the panel and timeline.
fn oracle(
    panel: &ThetaPanel,
    timeline: &Timeline,
    spec: &EventModelSpec,
    x: &Params,
    delta: &HashMap<(Chamber, usize), Vec<f64>>,
) -> f64 {
    let np = spec.p;
    let ci = |c: Chamber| {
        if c == Chamber::HouseOfRepresentatives {
            0
        } else {
            1
        }
    };
    let mut periods_of_election: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for r in &panel.rows {
        let e = timeline.election_index(r.election_id).unwrap();
        periods_of_election.entry(e).or_default().insert(r.period_id);
    }

    let mut lp = 0.0;
    for (r, shares) in panel.rows.iter().zip(panel.shares.iter_rows()) {
        let g = timeline.government_index(r.government_id).unwrap();
        let e = timeline.election_index(r.election_id).unwrap();
        let periods = &periods_of_election[&e];
        let n_e = periods.len() as f64;
        let s = periods.iter().position(|&q| q == r.period_id).unwrap() as f64 + 1.0;
        let d = &delta[&(r.chamber, r.period_id)];
        let conc: Vec<f64> = (0..np)
            .map(|p| (x.alpha[g * np + p] + x.beta[e * np + p] * (n_e - s) + d[p]).exp())
            .collect();
        lp += Dirichlet::new(conc)
            .unwrap()
            .ln_pdf(&DVector::from_vec(shares.to_vec()));
    }
    for a in &x.alpha {
        lp += normal(*a, 0.0, spec.prior_sd_alpha);
    }
    for b in &x.beta {
        lp += normal(*b, 0.0, spec.prior_sd_beta);
    }
    for m in &x.mu {
        lp += normal(*m, 0.0, spec.prior_sd_mu);
    }
    lp -= x.sigma.len() as f64 * spec.sigma_upper.ln();
    let mut cells: BTreeMap<(Chamber, usize), usize> = BTreeMap::new();
    for r in &panel.rows {
        cells.insert(
            (r.chamber, r.period_id),
            timeline.government_index(r.government_id).unwrap(),
        );
    }
    for ((c, s), g) in cells {
        for p in 0..np {
            lp += normal(delta[&(c, s)][p], x.mu[ci(c) * np + p], x.sigma[g * np + p]);
        }
    }
    lp
}

#[test]
fn log_posterior_matches_row_by_row_oracle() {
    let (panel, timeline) = gappy_panel();
    let data = ModelData::new(&panel, &timeline).unwrap();
    let spec = EventModelSpec {
        p: 3,
        prior_sd_alpha: 2.0,
        prior_sd_beta: 0.5,
        prior_sd_mu: 3.0,
        ..Default::default()
    };
    let mut r = rng::stream(99, 0);
    let np = spec.p;
    for _ in 0..100 {
        let mut x = Params::zeros(&data);
        x.alpha.iter_mut().for_each(|v| *v = r.random_range(-1.0..2.0));
        x.beta.iter_mut().for_each(|v| *v = r.random_range(-0.15..0.15));
        x.mu.iter_mut().for_each(|v| *v = r.random_range(-1.0..1.0));
        x.sigma.iter_mut().for_each(|v| *v = r.random_range(0.05..2.9));
        let mut delta = HashMap::new();
        for (i, c) in data.cells.iter().enumerate() {
            let d: Vec<f64> = (0..np).map(|_| r.random_range(-1.0..1.0)).collect();
            x.delta[i * np..(i + 1) * np].copy_from_slice(&d);
            delta.insert((c.chamber, c.period_id), d);
        }
        let got = log_posterior(&data, &x, &spec);
        let want = oracle(&panel, &timeline, &spec, &x, &delta);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
    let mut x = Params::zeros(&data);
    x.sigma[0] = spec.sigma_upper;
    assert_eq!(log_posterior(&data, &x, &spec), f64::NEG_INFINITY);
}

#[test]
fn four_sd_share_is_an_outlier_under_flat_concentration() {
    let conc = [20.0, 20.0, 20.0];
    let (m, sd) = dirichlet_moments(&conc);
    // Dirichlet(20,20,20): mean 1/3, variance (1/3)(2/3)/61.
    let want_sd = (2.0f64 / 549.0).sqrt();
    assert!(m.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    assert!(sd.iter().all(|x| (x - want_sd).abs() < 1e-15));
    let shares = perturb_share(&conc, 0, 4.0, &[1.0 / 3.0; 3]).unwrap();
    assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let z = (shares[0] - m[0]) / sd[0];
    assert!((z - 4.0).abs() < 1e-12 && z > 3.0);
    assert!((shares[1] - shares[2]).abs() < 1e-15);
}

fn quick_spec(p: usize, seed: u64) -> EventModelSpec {
    EventModelSpec {
        p,
        chains: 2,
        iters: 600,
        burn_in: 300,
        seed,
        ..Default::default()
    }
}

#[test]
fn same_seed_same_draws_and_thinning_keeps_every_kth() {
    let design = small_design();
    let sim = simulate_panel(&design, &SimulationTruth::draw(&design, 5), 6).unwrap();
    let spec = quick_spec(3, 7);
    let a = fit(&sim.panel, &sim.timeline, &spec).unwrap();
    let b = fit(&sim.panel, &sim.timeline, &spec).unwrap();
    assert_eq!(a.chains, b.chains);

    let thinned = fit(
        &sim.panel,
        &sim.timeline,
        &EventModelSpec {
            thin: 5,
            ..spec.clone()
        },
    )
    .unwrap();
    for block in [Block::Alpha, Block::Beta, Block::Sigma] {
        for u in 0..a.n_units(block) {
            for p in 0..3 {
                let full = a.chain_samples(block, u, p);
                let thin = thinned.chain_samples(block, u, p);
                for (f, t) in full.iter().zip(&thin) {
                    assert_eq!(f.iter().step_by(5).copied().collect::<Vec<_>>(), *t);
                }
            }
        }
    }
    let other = fit(&sim.panel, &sim.timeline, &EventModelSpec { seed: 8, ..spec }).unwrap();
    assert_ne!(a.chains, other.chains);
}

#[test]
fn comparisons_survive_thinning() {
    let design = SimulationDesign {
        n_governments: 3,
        n_elections: 3,
        n_periods: 30,
        days_per_period: 4,
        p: 3,
        ..Default::default()
    };
    let mut truth = SimulationTruth::draw(&design, 11);
    for g in 0..3 {
        for p in 0..3 {
            truth.alpha.set(g, p, 2.0);
            truth.sigma.set(g, p, 0.1);
        }
    }
    truth.alpha.set(2, 1, 3.0);
    let sim = simulate_panel(&design, &truth, 12).unwrap();
    let spec = EventModelSpec {
        p: 3,
        chains: 2,
        iters: 2000,
        burn_in: 1000,
        seed: 13,
        ..Default::default()
    };
    let full = fit(&sim.panel, &sim.timeline, &spec).unwrap();
    let thinned = fit(&sim.panel, &sim.timeline, &EventModelSpec { thin: 4, ..spec }).unwrap();
    let a = compare_neighbors(&full, &sim.timeline, Level::Government, 0.95);
    let b = compare_neighbors(&thinned, &sim.timeline, Level::Government, 0.95);
    assert_eq!(a, b);
    assert_eq!(a[1].flagged, [1]);
    assert!(!a[0].different());
}

#[test]
fn one_sitting_period_per_election_still_mixes() {
    let design = SimulationDesign {
        n_governments: 3,
        n_elections: 24,
        n_periods: 24,
        days_per_period: 3,
        p: 3,
        ..Default::default()
    };
    let sim = simulate_panel(&design, &SimulationTruth::draw(&design, 21), 22).unwrap();
    let data = ModelData::new(&sim.panel, &sim.timeline).unwrap();
    // Every period is the last of its election period, so the decay term vanishes.
    assert!(data.cells.iter().all(|c| c.decay == 0.0));
    let spec = EventModelSpec {
        p: 3,
        chains: 4,
        iters: 2000,
        burn_in: 1000,
        seed: 23,
        ..Default::default()
    };
    let post = fit(&sim.panel, &sim.timeline, &spec).unwrap();
    let (n, over) = post.rhat_counts();
    assert!(n > 0 && (over as f64) < 0.05 * n as f64, "{over} of {n} above 1.1");
}

#[test]
fn null_decay_is_covered_when_one_government_faces_one_election() {
    let design = SimulationDesign {
        n_governments: 1,
        n_elections: 1,
        n_periods: 20,
        days_per_period: 4,
        p: 3,
        ..Default::default()
    };
    let mut truth = SimulationTruth::draw(&design, 31);
    for p in 0..3 {
        truth.beta.set(0, p, 0.0);
    }
    let sim = simulate_panel(&design, &truth, 32).unwrap();
    let post = fit(&sim.panel, &sim.timeline, &quick_spec(3, 33)).unwrap();
    let covered = (0..3).filter(|&p| {
        let (lo, hi) = post.interval(Block::Beta, 0, p, 0.95);
        lo < 0.0 && 0.0 < hi
    });
    assert!(covered.count() >= 2);
}

#[test]
fn decay_counts_down_over_data_periods() {
    let (panel, timeline) = gappy_panel();
    let data = ModelData::new(&panel, &timeline).unwrap();
    let mut by_election: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for c in &data.cells {
        by_election.entry(c.election).or_default().insert(c.period_id);
    }
    for c in &data.cells {
        let periods = &by_election[&c.election];
        let after = periods.iter().filter(|&&q| q > c.period_id).count();
        assert_eq!(c.decay, after as f64);
    }
    assert!(data.cells.iter().all(|c| c.period_id != 5));
    assert_eq!(data.row_cell.len(), panel.len());
}

#[test]
fn bundled_timeline_is_ordered_and_assigns_every_day_in_office() {
    let t = Timeline::australia();
    let govs = t.governments();
    for w in govs.windows(2) {
        assert!(w[0].start < w[1].start);
        if let Some(end) = w[0].end {
            // A hand-over day belongs to the incoming government.
            assert!(end <= w[1].start && w[0].start <= end);
        }
    }
    for w in t.elections().windows(2) {
        assert!(w[0].date < w[1].date);
    }
    for g in govs {
        assert_eq!(t.government_at(g.start).map(|i| govs[i].id), Some(g.id));
    }
    for (later, earlier) in t.government_pairs() {
        assert_eq!(govs[later].compare_to, Some(govs[earlier].id));
    }
    assert_eq!(t.election_pairs().len(), t.elections().len() - 1);
    let first = t.elections()[0].date;
    assert!(t.assign(first - chrono::Days::new(1)).is_err());
    assert!(t.assign(first).is_ok());
}

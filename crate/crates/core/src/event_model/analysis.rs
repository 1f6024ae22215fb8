use std::collections::HashMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate};

use super::posterior::{equal_tailed, Block, EventPosterior};
use super::Timeline;
use crate::cap_mapping::ThetaPanel;
use crate::error::{Error, Result};
use crate::matrix::format_float;
use crate::record_parser::Chamber;

/// Which neighbouring units to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Government,
    Election,
}

/// One comparison of a unit with its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Timeline index of the later unit.
    pub later: usize,
    pub earlier: usize,
    /// Topics (0-based) whose credible intervals do not overlap.
    pub flagged: Vec<usize>,
}

impl Comparison {
    pub fn different(&self) -> bool {
        !self.flagged.is_empty()
    }
}

/// Compares each unit with its predecessor topic by topic and flags topics
/// whose equal-tailed credible intervals at `credibility` do not overlap.
///
/// Governments are compared on their identified level (see
/// [`EventPosterior::level_samples`]); elections on their decay coefficients.
pub fn compare_neighbors(
    post: &EventPosterior,
    timeline: &Timeline,
    level: Level,
    credibility: f64,
) -> Vec<Comparison> {
    let pairs = match level {
        Level::Government => timeline.government_pairs(),
        Level::Election => timeline.election_pairs(),
    };
    let interval = |unit: usize, p: usize| match level {
        Level::Government => equal_tailed(post.level_samples(unit, p).concat(), credibility),
        Level::Election => post.interval(Block::Beta, unit, p, credibility),
    };
    pairs
        .into_iter()
        .map(|(later, earlier)| {
            let flagged = (0..post.p())
                .filter(|&p| {
                    let (lo1, hi1) = interval(later, p);
                    let (lo0, hi0) = interval(earlier, p);
                    lo1 > hi0 || hi1 < lo0
                })
                .collect();
            Comparison {
                later,
                earlier,
                flagged,
            }
        })
        .collect()
}

fn topic_names(flagged: &[usize], groups: &[(u32, String)]) -> String {
    flagged
        .iter()
        .map(|&p| groups[p].1.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Writes `number,name,start,end,previous,party_changed,different,topics`.
pub fn write_government_table<W: Write>(
    comparisons: &[Comparison],
    timeline: &Timeline,
    groups: &[(u32, String)],
    w: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "number",
        "name",
        "start",
        "end",
        "previous",
        "party_changed",
        "different",
        "topics",
    ])?;
    let gs = timeline.governments();
    for c in comparisons {
        let (g, prev) = (&gs[c.later], &gs[c.earlier]);
        w.write_record([
            g.id.to_string(),
            g.name.clone(),
            g.start.to_string(),
            g.end.map(|d| d.to_string()).unwrap_or_default(),
            prev.name.clone(),
            (g.party != prev.party).to_string(),
            c.different().to_string(),
            topic_names(&c.flagged, groups),
        ])?;
    }
    w.flush().map_err(|e| Error::io("government comparisons", e))?;
    Ok(())
}

/// Writes `number,year,date,seats,winner,changed_party,different,topics`.
pub fn write_election_table<W: Write>(
    comparisons: &[Comparison],
    timeline: &Timeline,
    groups: &[(u32, String)],
    w: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "number",
        "year",
        "date",
        "seats",
        "winner",
        "changed_party",
        "different",
        "topics",
    ])?;
    let es = timeline.elections();
    for c in comparisons {
        let (e, prev) = (&es[c.later], &es[c.earlier]);
        w.write_record([
            e.id.to_string(),
            e.date.year().to_string(),
            e.date.to_string(),
            e.seats.map(|s| s.to_string()).unwrap_or_default(),
            e.winner.clone(),
            (e.winner != prev.winner).to_string(),
            c.different().to_string(),
            topic_names(&c.flagged, groups),
        ])?;
    }
    w.flush().map_err(|e| Error::io("election comparisons", e))?;
    Ok(())
}

/// Means and standard deviations of the components of a Dirichlet distribution.
pub fn dirichlet_moments(concentration: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let total: f64 = concentration.iter().sum();
    let means = concentration.iter().map(|a| a / total).collect();
    let sds = concentration
        .iter()
        .map(|a| (a * (total - a) / (total * total * (total + 1.0))).sqrt())
        .collect();
    (means, sds)
}

/// A sitting day with at least one extreme topic share.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierDay {
    /// Panel row.
    pub row: usize,
    pub chamber: Chamber,
    pub date: NaiveDate,
    pub period_id: usize,
    /// Standardized share of every topic.
    pub z: Vec<f64>,
    /// Topics (0-based) with `|z|` above the threshold.
    pub flagged: Vec<usize>,
}

/// Standardizes each day's shares by the Dirichlet moments at the posterior
/// mean concentration of its cell and returns the days where some topic has
/// `|z| > threshold`.
pub fn detect_outlier_days(panel: &ThetaPanel, post: &EventPosterior, threshold: f64) -> Result<Vec<OutlierDay>> {
    if panel.p() != post.p() {
        return Err(Error::invalid(
            "panel and posterior differ in the number of topic groups",
        ));
    }
    let mut moments: HashMap<usize, (Vec<f64>, Vec<f64>)> = HashMap::new();
    let mut out = Vec::new();
    for (row, (r, shares)) in panel.rows.iter().zip(panel.shares.iter_rows()).enumerate() {
        let cell = post
            .cell_of(r.chamber, r.period_id)
            .ok_or_else(|| Error::invalid(format!("{} {} has no cell in the fitted model", r.chamber, r.date)))?;
        let (m, sd) = moments
            .entry(cell)
            .or_insert_with(|| dirichlet_moments(&post.mean_concentration(cell)));
        let z: Vec<f64> = shares
            .iter()
            .zip(m.iter().zip(sd.iter()))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let flagged: Vec<usize> = (0..z.len()).filter(|&p| z[p].abs() > threshold).collect();
        if !flagged.is_empty() {
            out.push(OutlierDay {
                row,
                chamber: r.chamber,
                date: r.date,
                period_id: r.period_id,
                z,
                flagged,
            });
        }
    }
    Ok(out)
}

/// Writes `chamber,date,period_id,topic_id,topic,z`, one row per flagged topic.
pub fn write_outliers_csv<W: Write>(days: &[OutlierDay], groups: &[(u32, String)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["chamber", "date", "period_id", "topic_id", "topic", "z"])?;
    for d in days {
        for &p in &d.flagged {
            w.write_record([
                d.chamber.to_string(),
                d.date.to_string(),
                d.period_id.to_string(),
                (p + 1).to_string(),
                groups.get(p).map(|g| g.1.clone()).unwrap_or_default(),
                format_float(d.z[p]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("outliers", e))?;
    Ok(())
}

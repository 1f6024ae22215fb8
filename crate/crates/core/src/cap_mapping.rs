//! Grouping fitted topics into Comparative Agendas Project major topics, and
//! the day-level panel of group shares used by the event model.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocKey, SittingCalendar};
use crate::error::{Error, Result};
use crate::event_model::Timeline;
use crate::matrix::{format_float, Matrix};
use crate::record_parser::Chamber;

/// Major-topic codes of the CAP master codebook.
pub const CAP_CODEBOOK: [(u32, &str); 21] = [
    (1, "Macroeconomics"),
    (2, "Civil Rights"),
    (3, "Health"),
    (4, "Agriculture"),
    (5, "Labor"),
    (6, "Education"),
    (7, "Environment"),
    (8, "Energy"),
    (9, "Immigration"),
    (10, "Transportation"),
    (12, "Law and Crime"),
    (13, "Social Welfare"),
    (14, "Housing"),
    (15, "Domestic Commerce"),
    (16, "Defense"),
    (17, "Technology"),
    (18, "Foreign Trade"),
    (19, "International Affairs"),
    (20, "Government Operations"),
    (21, "Public Lands"),
    (23, "Culture"),
];

/// Floor applied to group shares before renormalising.
pub const SHARE_FLOOR: f64 = 1e-6;

const TABLE1_SCHEME: &str = include_str!("../assets/cap_scheme_table1.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeEntry {
    pub topic_id: usize,
    pub cap_code: u32,
    pub cap_name: String,
}

/// Assignment of topics (ids from 1) to CAP groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapScheme {
    entries: Vec<SchemeEntry>,
    /// Distinct groups ordered by CAP code.
    groups: Vec<(u32, String)>,
}

impl CapScheme {
    pub fn new(mut entries: Vec<SchemeEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("CAP scheme is empty"));
        }
        entries.sort_by_key(|e| e.topic_id);
        let dups: Vec<String> = entries
            .windows(2)
            .filter(|w| w[0].topic_id == w[1].topic_id)
            .map(|w| w[0].topic_id.to_string())
            .collect();
        if !dups.is_empty() {
            return Err(Error::invalid(format!(
                "duplicate topic ids in CAP scheme: {}",
                dups.join(", ")
            )));
        }
        if entries[0].topic_id == 0 {
            return Err(Error::invalid("topic ids start at 1"));
        }
        let mut names: BTreeMap<u32, String> = BTreeMap::new();
        for e in &entries {
            if !CAP_CODEBOOK.iter().any(|(c, _)| *c == e.cap_code) {
                return Err(Error::invalid(format!(
                    "topic {}: {} is not a CAP major-topic code",
                    e.topic_id, e.cap_code
                )));
            }
            let name = names.entry(e.cap_code).or_insert_with(|| e.cap_name.clone());
            if *name != e.cap_name {
                return Err(Error::invalid(format!(
                    "CAP code {} is named both `{name}` and `{}`",
                    e.cap_code, e.cap_name
                )));
            }
        }
        Ok(CapScheme {
            entries,
            groups: names.into_iter().collect(),
        })
    }

    /// Topic-to-category assignment of the 80-topic model reported with the method.
    pub fn table1() -> Self {
        Self::from_reader(TABLE1_SCHEME.as_bytes()).expect("shipped scheme is valid")
    }

    /// Reads a scheme CSV with header `topic_id,cap_code,cap_name`.
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header != ["topic_id", "cap_code", "cap_name"] {
            return Err(Error::invalid("CAP scheme header must be topic_id,cap_code,cap_name"));
        }
        let entries = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<SchemeEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io("CAP scheme", e))?;
        Ok(())
    }

    pub fn entries(&self) -> &[SchemeEntry] {
        &self.entries
    }

    /// Number of distinct groups.
    pub fn p(&self) -> usize {
        self.groups.len()
    }

    /// `(code, name)` of each group, in output column order.
    pub fn groups(&self) -> &[(u32, String)] {
        &self.groups
    }

    /// Column index of each topic's group, for topics `1..=k`.
    fn group_of_topics(&self, k: usize) -> Result<Vec<usize>> {
        let mut out = vec![usize::MAX; k];
        for e in &self.entries {
            if e.topic_id <= k {
                out[e.topic_id - 1] = self
                    .groups
                    .iter()
                    .position(|(c, _)| *c == e.cap_code)
                    .expect("group exists");
            }
        }
        let missing: Vec<String> = (1..=k)
            .filter(|t| out[t - 1] == usize::MAX)
            .map(|t| t.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!(
                "topics missing from CAP scheme: {}",
                missing.join(", ")
            )));
        }
        let extra: Vec<String> = self
            .entries
            .iter()
            .filter(|e| e.topic_id > k)
            .map(|e| e.topic_id.to_string())
            .collect();
        if !extra.is_empty() {
            return Err(Error::invalid(format!(
                "CAP scheme lists topics the fit does not have: {}",
                extra.join(", ")
            )));
        }
        Ok(out)
    }
}

/// Sums topic shares within each group, without flooring.
pub fn aggregate_raw(theta: &Matrix, scheme: &CapScheme) -> Result<Matrix> {
    let group = scheme.group_of_topics(theta.cols())?;
    let mut out = Matrix::zeros(theta.rows(), scheme.p());
    for d in 0..theta.rows() {
        let row = out.row_mut(d);
        for (t, &x) in theta.row(d).iter().enumerate() {
            row[group[t]] += x;
        }
    }
    Ok(out)
}

/// Group shares with every entry raised to at least [`SHARE_FLOOR`]. Rows that
/// needed the floor are renormalised; other rows are left exactly as summed.
pub fn aggregate(theta: &Matrix, scheme: &CapScheme) -> Result<Matrix> {
    let mut out = aggregate_raw(theta, scheme)?;
    for d in 0..out.rows() {
        let row = out.row_mut(d);
        if row.iter().any(|&x| x < SHARE_FLOOR) {
            row.iter_mut().for_each(|x| *x = x.max(SHARE_FLOOR));
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    Ok(out)
}

/// Identifiers of one panel row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelRow {
    pub chamber: Chamber,
    pub date: NaiveDate,
    pub period_id: usize,
    pub government_id: u32,
    pub election_id: u32,
}

/// Day-level CAP group shares with their sitting period, government and election.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPanel {
    pub rows: Vec<PanelRow>,
    /// `rows × P` shares, every entry strictly positive.
    pub shares: Matrix,
    /// `(code, name)` of each share column.
    pub groups: Vec<(u32, String)>,
}

impl ThetaPanel {
    pub fn new(rows: Vec<PanelRow>, shares: Matrix, groups: Vec<(u32, String)>) -> Result<Self> {
        if rows.len() != shares.rows() || groups.len() != shares.cols() {
            return Err(Error::invalid("panel ids, shares and groups disagree in size"));
        }
        if rows.is_empty() {
            return Err(Error::invalid("panel has no rows"));
        }
        for (i, row) in shares.iter_rows().enumerate() {
            if row.iter().any(|&x| !(x > 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "panel row {} ({} {}) is not a strictly positive composition",
                    i + 1,
                    rows[i].chamber,
                    rows[i].date
                )));
            }
        }
        Ok(ThetaPanel { rows, shares, groups })
    }

    pub fn p(&self) -> usize {
        self.shares.cols()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Panel of documents `docs` with group shares `shares`. Each day takes the
    /// sitting period of the calendar and the government and election in force
    /// on the first day of that period.
    pub fn build(
        docs: &[DocKey],
        shares: Matrix,
        groups: Vec<(u32, String)>,
        calendar: &SittingCalendar,
        timeline: &Timeline,
    ) -> Result<Self> {
        let starts = calendar.period_starts();
        let mut period_units = Vec::with_capacity(starts.len());
        for s in &starts {
            period_units.push(timeline.assign(*s)?);
        }
        let rows = docs
            .iter()
            .map(|k| {
                let period_id = calendar
                    .period_of(k.date)
                    .ok_or_else(|| Error::invalid(format!("{} is not in the sitting calendar", k.date)))?;
                let (government_id, election_id) = period_units[period_id];
                Ok(PanelRow {
                    chamber: k.chamber,
                    date: k.date,
                    period_id,
                    government_id,
                    election_id,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, shares, groups)
    }

    /// Writes `chamber,date,period_id,government_id,election_id,share_1..share_P`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["chamber", "date", "period_id", "government_id", "election_id"]
            .map(String::from)
            .to_vec();
        header.extend((1..=self.p()).map(|p| format!("share_{p}")));
        w.write_record(&header)?;
        for (r, shares) in self.rows.iter().zip(self.shares.iter_rows()) {
            let mut rec = vec![
                r.chamber.to_string(),
                r.date.to_string(),
                r.period_id.to_string(),
                r.government_id.to_string(),
                r.election_id.to_string(),
            ];
            rec.extend(shares.iter().map(|&x| format_float(x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("panel", e))?;
        Ok(())
    }

    /// Writes the share-column legend `share,cap_code,cap_name`.
    pub fn write_groups_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["share", "cap_code", "cap_name"])?;
        for (i, (code, name)) in self.groups.iter().enumerate() {
            w.write_record([format!("share_{}", i + 1), code.to_string(), name.clone()])?;
        }
        w.flush().map_err(|e| Error::io("panel groups", e))?;
        Ok(())
    }

    pub fn read_csv<R1: Read, R2: Read>(panel: R1, groups: R2) -> Result<Self> {
        let mut g = csv::Reader::from_reader(groups);
        let mut group_list = Vec::new();
        for rec in g.records() {
            let rec = rec?;
            let code = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::invalid("bad cap_code in panel groups"))?;
            group_list.push((code, rec.get(2).unwrap_or_default().to_string()));
        }
        let mut rdr = csv::Reader::from_reader(panel);
        let header = rdr.headers()?.clone();
        let p = header.len().saturating_sub(5);
        if p == 0
            || header
                .iter()
                .take(5)
                .ne(["chamber", "date", "period_id", "government_id", "election_id"])
        {
            return Err(Error::invalid(
                "panel header must be chamber,date,period_id,government_id,election_id,share_1..",
            ));
        }
        let mut rows = Vec::new();
        let mut shares = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Parse {
                source_name: "panel".into(),
                line: i + 2,
                message: format!("bad {what}"),
            };
            rows.push(PanelRow {
                chamber: rec[0].parse().map_err(|_| bad("chamber"))?,
                date: rec[1].parse().map_err(|_| bad("date"))?,
                period_id: rec[2].parse().map_err(|_| bad("period_id"))?,
                government_id: rec[3].parse().map_err(|_| bad("government_id"))?,
                election_id: rec[4].parse().map_err(|_| bad("election_id"))?,
            });
            shares.push(
                rec.iter()
                    .skip(5)
                    .map(|s| s.parse::<f64>().map_err(|_| bad("share")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if shares.is_empty() {
            return Err(Error::invalid("panel has no rows"));
        }
        Self::new(rows, Matrix::from_rows(shares)?, group_list)
    }
}

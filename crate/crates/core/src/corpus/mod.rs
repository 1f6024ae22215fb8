//! Day-level documents, vocabulary, sparse counts and sitting periods.

mod calendar;
mod preprocess;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use calendar::{derive_sitting_periods, read_calendar_csv, write_calendar_csv, CalendarRow, SittingCalendar};
pub use preprocess::{preprocess, raw_tokens, PreprocessConfig, DEFAULT_PROBE_WORDS};

use crate::error::{Error, Result};
use crate::record_parser::{Chamber, TidyRow};

/// One document: everything said in one chamber on one sitting day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocKey {
    pub date: NaiveDate,
    pub chamber: Chamber,
}

impl DocKey {
    pub fn new(chamber: Chamber, date: NaiveDate) -> Self {
        DocKey { date, chamber }
    }

    /// Stand-in keys for corpora that have no calendar, one day apart from 2000-01-01.
    pub fn placeholder(index: usize) -> Self {
        let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        DocKey::new(Chamber::HouseOfRepresentatives, base + chrono::Days::new(index as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from unique terms, keeping their order as ids.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary term `{t}`")));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.terms {
            writeln!(w, "{t}").map_err(|e| Error::io("vocabulary", e))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let terms = r
            .lines()
            .map(|l| l.map(|s| s.trim_end().to_string()))
            .filter(|l| !matches!(l, Ok(s) if s.is_empty()))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io("vocabulary", e))?;
        Vocabulary::from_terms(terms)
    }
}

/// Documents × terms count matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    docs: Vec<DocKey>,
    n_terms: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    counts: Vec<u32>,
}

impl DocTermMatrix {
    /// Builds the matrix from per-document `(term, count)` lists. Entries with
    /// the same term are summed, zero counts dropped and columns sorted.
    pub fn from_rows(docs: Vec<DocKey>, n_terms: usize, rows: Vec<Vec<(usize, u32)>>) -> Result<Self> {
        if docs.len() != rows.len() {
            return Err(Error::invalid(format!(
                "{} document keys for {} rows",
                docs.len(),
                rows.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut counts = Vec::new();
        row_ptr.push(0);
        for (d, row) in rows.into_iter().enumerate() {
            let mut merged: BTreeMap<usize, u32> = BTreeMap::new();
            for (t, c) in row {
                if t >= n_terms {
                    return Err(Error::invalid(format!(
                        "document {d}: term id {t} out of range 0..{n_terms}"
                    )));
                }
                *merged.entry(t).or_insert(0) += c;
            }
            for (t, c) in merged.into_iter().filter(|&(_, c)| c > 0) {
                cols.push(t as u32);
                counts.push(c);
            }
            row_ptr.push(cols.len());
        }
        Ok(DocTermMatrix {
            docs,
            n_terms,
            row_ptr,
            cols,
            counts,
        })
    }

    /// Builds a matrix from dense count rows, with placeholder document keys.
    pub fn from_dense(rows: &[Vec<u32>]) -> Result<Self> {
        let n_terms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_terms) {
            return Err(Error::invalid("ragged dense count rows"));
        }
        let sparse = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(t, &c)| (t, c)).collect())
            .collect();
        Self::from_rows((0..rows.len()).map(DocKey::placeholder).collect(), n_terms, sparse)
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn docs(&self) -> &[DocKey] {
        &self.docs
    }

    /// Non-zero `(term, count)` pairs of document `d`, ordered by term.
    pub fn row(&self, d: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let span = self.row_ptr[d]..self.row_ptr[d + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.counts[span])
            .map(|(&t, &c)| (t as usize, c))
    }

    pub fn get(&self, d: usize, t: usize) -> u32 {
        let span = self.row_ptr[d]..self.row_ptr[d + 1];
        match self.cols[span.clone()].binary_search(&(t as u32)) {
            Ok(i) => self.counts[span.start + i],
            Err(_) => 0,
        }
    }

    pub fn doc_len(&self, d: usize) -> u64 {
        self.counts[self.row_ptr[d]..self.row_ptr[d + 1]]
            .iter()
            .map(|&c| c as u64)
            .sum()
    }

    pub fn total_tokens(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Number of documents containing each term.
    pub fn doc_frequencies(&self) -> Vec<u32> {
        let mut df = vec![0u32; self.n_terms];
        for &t in &self.cols {
            df[t as usize] += 1;
        }
        df
    }

    /// Token stream for document `d`: each term repeated by its count, in term order.
    pub fn doc_tokens(&self, d: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.doc_len(d) as usize);
        for (t, c) in self.row(d) {
            out.extend(std::iter::repeat_n(t, c as usize));
        }
        out
    }

    /// Sub-matrix of the given documents, in the given order.
    pub fn select(&self, docs: &[usize]) -> DocTermMatrix {
        let rows = docs.iter().map(|&d| self.row(d).collect()).collect();
        DocTermMatrix::from_rows(docs.iter().map(|&d| self.docs[d]).collect(), self.n_terms, rows)
            .expect("selected rows are valid")
    }

    /// Sparse triplets `doc_id,term_id,count` with zero-based ids.
    pub fn write_triplets<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["doc_id", "term_id", "count"])?;
        for d in 0..self.n_docs() {
            for (t, c) in self.row(d) {
                w.write_record([d.to_string(), t.to_string(), c.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("triplets", e))?;
        Ok(())
    }

    pub fn read_triplets<R: Read>(r: R, docs: Vec<DocKey>, n_terms: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Triplet {
            doc_id: usize,
            term_id: usize,
            count: u32,
        }
        let mut rows: Vec<Vec<(usize, u32)>> = vec![Vec::new(); docs.len()];
        for rec in csv::Reader::from_reader(r).deserialize::<Triplet>() {
            let t = rec?;
            let row = rows
                .get_mut(t.doc_id)
                .ok_or_else(|| Error::invalid(format!("triplet doc_id {} out of range", t.doc_id)))?;
            row.push((t.term_id, t.count));
        }
        DocTermMatrix::from_rows(docs, n_terms, rows)
    }

    /// Document list `doc_id,chamber,date`.
    pub fn write_docs<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["doc_id", "chamber", "date"])?;
        for (i, k) in self.docs.iter().enumerate() {
            w.write_record([i.to_string(), k.chamber.to_string(), k.date.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("docs", e))?;
        Ok(())
    }
}

pub fn read_docs_csv<R: Read>(r: R) -> Result<Vec<DocKey>> {
    #[derive(Deserialize)]
    struct Row {
        doc_id: usize,
        chamber: Chamber,
        date: NaiveDate,
    }
    let mut out = Vec::new();
    for (i, rec) in csv::Reader::from_reader(r).deserialize::<Row>().enumerate() {
        let row = rec?;
        if row.doc_id != i {
            return Err(Error::invalid(format!(
                "docs csv: expected doc_id {i}, found {}",
                row.doc_id
            )));
        }
        out.push(DocKey::new(row.chamber, row.date));
    }
    Ok(out)
}

fn group_by_day(corpus: &[TidyRow]) -> BTreeMap<DocKey, Vec<&str>> {
    let mut days: BTreeMap<DocKey, Vec<&str>> = BTreeMap::new();
    for row in corpus {
        days.entry(DocKey::new(row.chamber, row.date))
            .or_default()
            .push(&row.text);
    }
    days
}

/// Builds the vocabulary and day-level count matrix from tidy rows.
///
/// Documents are ordered by `(date, chamber)` and terms alphabetically. Terms
/// occurring fewer than `config.min_term_count` times in the whole corpus are
/// dropped; documents left without tokens are dropped with a warning.
pub fn build_matrix(corpus: &[TidyRow], config: &PreprocessConfig) -> Result<(Vocabulary, DocTermMatrix)> {
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    let days = group_by_day(corpus);
    let tokenised: Vec<(DocKey, Vec<String>)> = days
        .into_par_iter()
        .map(|(key, texts)| (key, texts.iter().flat_map(|t| preprocess(t, config)).collect()))
        .collect();

    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for (_, toks) in &tokenised {
        for t in toks {
            *totals.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let terms: Vec<String> = totals
        .into_iter()
        .filter(|&(_, n)| n >= config.min_term_count.max(1))
        .map(|(t, _)| t.to_string())
        .collect();
    let vocab = Vocabulary::from_terms(terms)?;

    let mut docs = Vec::new();
    let mut rows = Vec::new();
    for (key, toks) in tokenised {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for t in &toks {
            if let Some(id) = vocab.id(t) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            log::warn!("dropping {} {}: no tokens after preprocessing", key.chamber, key.date);
            continue;
        }
        docs.push(key);
        rows.push(counts.into_iter().collect());
    }
    if docs.is_empty() {
        return Err(Error::invalid("no document has any in-vocabulary token"));
    }
    let dtm = DocTermMatrix::from_rows(docs, vocab.len(), rows)?;
    Ok((vocab, dtm))
}

/// Share of each day's raw words (before stopword removal) that are probe words.
pub fn stopword_share(corpus: &[TidyRow], probe_words: &[&str], config: &PreprocessConfig) -> Vec<(DocKey, f64)> {
    let probe: std::collections::HashSet<String> = probe_words.iter().map(|w| w.to_lowercase()).collect();
    group_by_day(corpus)
        .into_iter()
        .map(|(key, texts)| {
            let mut total = 0usize;
            let mut hits = 0usize;
            for t in texts {
                for w in raw_tokens(t, config) {
                    total += 1;
                    if probe.contains(&w) {
                        hits += 1;
                    }
                }
            }
            let share = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
            (key, share)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(chamber: Chamber, day: u32, text: &str) -> TidyRow {
        TidyRow {
            date: NaiveDate::from_ymd_opt(1950, 6, day).unwrap(),
            chamber,
            speaker: "X".into(),
            text: text.into(),
        }
    }

    fn cfg1() -> PreprocessConfig {
        PreprocessConfig::default().with_min_term_count(1)
    }

    #[test]
    fn single_day_counts() {
        let (vocab, dtm) = build_matrix(&[row(Chamber::Senate, 1, "vote vote bill")], &cfg1()).unwrap();
        assert_eq!(dtm.n_docs(), 1);
        assert_eq!(dtm.get(0, vocab.id("vote").unwrap()), 2);
        assert_eq!(dtm.get(0, vocab.id("bill").unwrap()), 1);
        assert_eq!(dtm.doc_len(0), 3);
    }

    #[test]
    fn disjoint_days_have_disjoint_columns() {
        let corpus = [
            row(Chamber::Senate, 1, "wheat wool"),
            row(Chamber::Senate, 2, "army navy"),
        ];
        let (_, dtm) = build_matrix(&corpus, &cfg1()).unwrap();
        let a: Vec<_> = dtm.row(0).map(|(t, _)| t).collect();
        let b: Vec<_> = dtm.row(1).map(|(t, _)| t).collect();
        assert!(a.iter().all(|t| !b.contains(t)));
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(build_matrix(&[], &cfg1()).is_err());
    }

    #[test]
    fn empty_days_are_dropped() {
        let corpus = [row(Chamber::Senate, 1, "the and of"), row(Chamber::Senate, 2, "tariff")];
        let (_, dtm) = build_matrix(&corpus, &cfg1()).unwrap();
        assert_eq!(dtm.n_docs(), 1);
        assert_eq!(chrono::Datelike::day0(&dtm.docs()[0].date), 1);
    }

    #[test]
    fn min_term_count_filters_rare_terms() {
        let corpus = [row(Chamber::Senate, 1, "tariff tariff rare")];
        let (vocab, dtm) = build_matrix(&corpus, &PreprocessConfig::default().with_min_term_count(2)).unwrap();
        assert_eq!(vocab.terms(), ["tariff"]);
        assert_eq!(dtm.total_tokens(), 2);
    }

    #[test]
    fn chambers_on_same_day_are_separate_documents() {
        let corpus = [
            row(Chamber::Senate, 1, "wheat"),
            row(Chamber::HouseOfRepresentatives, 1, "wool"),
            row(Chamber::Senate, 1, "wheat"),
        ];
        let (_, dtm) = build_matrix(&corpus, &cfg1()).unwrap();
        assert_eq!(dtm.n_docs(), 2);
        assert_eq!(dtm.docs()[0].chamber, Chamber::HouseOfRepresentatives);
        assert_eq!(dtm.doc_len(1), 2);
    }

    #[test]
    fn triplets_round_trip() {
        let corpus = [
            row(Chamber::Senate, 1, "wheat wool wheat"),
            row(Chamber::Senate, 3, "army"),
        ];
        let (vocab, dtm) = build_matrix(&corpus, &cfg1()).unwrap();
        let mut buf = Vec::new();
        dtm.write_triplets(&mut buf).unwrap();
        let back = DocTermMatrix::read_triplets(buf.as_slice(), dtm.docs().to_vec(), vocab.len()).unwrap();
        assert_eq!(back, dtm);

        let mut vbuf = Vec::new();
        vocab.write(&mut vbuf).unwrap();
        assert_eq!(Vocabulary::read(vbuf.as_slice()).unwrap(), vocab);

        let mut dbuf = Vec::new();
        dtm.write_docs(&mut dbuf).unwrap();
        assert_eq!(read_docs_csv(dbuf.as_slice()).unwrap(), dtm.docs());
    }

    #[test]
    fn stopword_share_cases() {
        let cfg = PreprocessConfig::default();
        let s = stopword_share(&[row(Chamber::Senate, 1, "the the")], &["the"], &cfg);
        assert_eq!(s[0].1, 1.0);
        let s = stopword_share(&[row(Chamber::Senate, 1, "wheat wool")], &DEFAULT_PROBE_WORDS, &cfg);
        assert_eq!(s[0].1, 0.0);
    }

    #[test]
    fn stopword_share_hand_count() {
        // 30 words; probe words counted by hand: the x5, and x2, of x2, to x1, be x1 = 11.
        let text = "The member for Kooyong rose to ask the minister whether the tariff on wool \
                    and wheat would be reduced and when the report of the board of inquiry \
                    would reach";
        let cfg = PreprocessConfig::default();
        assert_eq!(raw_tokens(text, &cfg).len(), 30);
        let s = stopword_share(&[row(Chamber::Senate, 1, text)], &DEFAULT_PROBE_WORDS, &cfg);
        assert!((s[0].1 - 11.0 / 30.0).abs() < 1e-15);
    }
}

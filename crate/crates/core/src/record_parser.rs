//! Transcript ingestion: column reflow, speaker segmentation and tidy export.
//!
//! Pages arrive as already-extracted text with a column tag on every line
//! (`L|`, `R|` or `F|`). Full-width lines split a page into regions; inside a
//! region the left column is read before the right column.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speaker assigned to text that precedes the first recognised speaker header.
pub const UNATTRIBUTED: &str = "UNATTRIBUTED";

const DEFAULT_SPEAKER_PATTERNS: &str = include_str!("../assets/speaker_patterns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Chamber {
    #[serde(rename = "hor")]
    HouseOfRepresentatives,
    #[serde(rename = "senate")]
    Senate,
}

impl Chamber {
    pub const ALL: [Chamber; 2] = [Chamber::HouseOfRepresentatives, Chamber::Senate];

    pub fn code(self) -> &'static str {
        match self {
            Chamber::HouseOfRepresentatives => "hor",
            Chamber::Senate => "senate",
        }
    }

    /// Dense index used for chamber-indexed parameters.
    pub fn index(self) -> usize {
        match self {
            Chamber::HouseOfRepresentatives => 0,
            Chamber::Senate => 1,
        }
    }
}

impl fmt::Display for Chamber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Chamber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hor" | "house" | "houseofrepresentatives" | "reps" => Ok(Chamber::HouseOfRepresentatives),
            "senate" => Ok(Chamber::Senate),
            other => Err(Error::invalid(format!("unknown chamber `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Left,
    Right,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageLine {
    /// 1-based line number in the source file.
    pub number: usize,
    pub column: Option<Column>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPage {
    pub chamber: Chamber,
    pub date: NaiveDate,
    pub lines: Vec<PageLine>,
}

impl RawPage {
    /// Parses tagged page text. Blank lines are skipped; any other line
    /// without a recognised tag is kept untagged and judged by `reflow_columns`.
    pub fn parse(chamber: Chamber, date: NaiveDate, content: &str) -> RawPage {
        let lines = content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, raw)| {
                let (column, text) = match raw.split_once('|') {
                    Some(("L", rest)) => (Some(Column::Left), rest),
                    Some(("R", rest)) => (Some(Column::Right), rest),
                    Some(("F", rest)) => (Some(Column::Full), rest),
                    _ => (None, raw),
                };
                PageLine {
                    number: i + 1,
                    column,
                    text: text.to_string(),
                }
            })
            .collect();
        RawPage { chamber, date, lines }
    }

    pub fn from_file(path: &Path) -> Result<RawPage> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::invalid(format!("bad page file name {}", path.display())))?;
        let (chamber, date) = parse_page_filename(name)?;
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(RawPage::parse(chamber, date, &content))
    }
}

/// Page files are named `<chamber>_<YYYY-MM-DD>.txt`, e.g. `senate_1902-02-06.txt`.
pub fn parse_page_filename(name: &str) -> Result<(Chamber, NaiveDate)> {
    let stem = name
        .strip_suffix(".txt")
        .ok_or_else(|| Error::invalid(format!("page file `{name}` must end in .txt")))?;
    let (chamber, date) = stem
        .split_once('_')
        .ok_or_else(|| Error::invalid(format!("page file `{name}` is not <chamber>_<date>.txt")))?;
    let chamber: Chamber = chamber.parse()?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| Error::invalid(format!("page file `{name}`: bad date: {e}")))?;
    Ok((chamber, date))
}

/// Reorders a page into reading order.
///
/// Full-width lines are emitted in place and close the current region. Within a
/// region that holds any column-tagged line, every left line precedes every right
/// line. Regions without column tags may contain untagged lines, which keep their
/// order; an untagged line inside a two-column region is an error.
pub fn reflow_columns(page: &RawPage) -> Result<Vec<PageLine>> {
    let mut out = Vec::with_capacity(page.lines.len());
    let mut region: Vec<&PageLine> = Vec::new();

    fn flush(region: &mut Vec<&PageLine>, out: &mut Vec<PageLine>, page: &RawPage) -> Result<()> {
        let two_column = region
            .iter()
            .any(|l| matches!(l.column, Some(Column::Left | Column::Right)));
        if two_column {
            if let Some(bad) = region.iter().find(|l| l.column.is_none()) {
                return Err(Error::Parse {
                    source_name: format!("{}_{}", page.chamber, page.date),
                    line: bad.number,
                    message: "untagged line inside a two-column region".into(),
                });
            }
            out.extend(
                region
                    .iter()
                    .filter(|l| l.column == Some(Column::Left))
                    .map(|l| (*l).clone()),
            );
            out.extend(
                region
                    .iter()
                    .filter(|l| l.column == Some(Column::Right))
                    .map(|l| (*l).clone()),
            );
        } else {
            out.extend(region.iter().map(|l| (*l).clone()));
        }
        region.clear();
        Ok(())
    }

    for line in &page.lines {
        if line.column == Some(Column::Full) {
            flush(&mut region, &mut out, page)?;
            out.push(line.clone());
        } else {
            region.push(line);
        }
    }
    flush(&mut region, &mut out, page)?;
    Ok(out)
}

/// Joins reflowed lines into the day's text stream.
pub fn day_text(lines: &[PageLine]) -> String {
    let mut s = String::new();
    for (i, l) in lines.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&l.text);
    }
    s
}

/// Regular expressions that recognise the start of a speaker's turn. Each
/// pattern must define a capture group called `name`.
#[derive(Debug, Clone)]
pub struct SpeakerPatterns {
    patterns: Vec<Regex>,
}

impl SpeakerPatterns {
    /// One pattern per line; blank lines and lines starting with `#` are ignored.
    pub fn from_lines(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let re = Regex::new(line).map_err(|e| Error::Parse {
                source_name: "speaker patterns".into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if re.capture_names().flatten().all(|n| n != "name") {
                return Err(Error::Parse {
                    source_name: "speaker patterns".into(),
                    line: i + 1,
                    message: "pattern has no `name` capture group".into(),
                });
            }
            patterns.push(re);
        }
        Ok(SpeakerPatterns { patterns })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_lines(&text)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Non-overlapping header matches, leftmost first; on equal starts the longer wins.
    fn headers(&self, text: &str) -> Vec<(usize, usize, String)> {
        let mut found: Vec<(usize, usize, String)> = Vec::new();
        for re in &self.patterns {
            for caps in re.captures_iter(text) {
                let whole = caps.get(0).expect("group 0 always present");
                let name = caps.name("name").map(|m| m.as_str()).unwrap_or_default();
                found.push((whole.start(), whole.end(), normalize_speaker(name)));
            }
        }
        found.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut kept: Vec<(usize, usize, String)> = Vec::with_capacity(found.len());
        for m in found {
            if m.1 == m.0 {
                continue;
            }
            if kept.last().is_none_or(|k| m.0 >= k.1) {
                kept.push(m);
            }
        }
        kept
    }
}

impl Default for SpeakerPatterns {
    fn default() -> Self {
        SpeakerPatterns::from_lines(DEFAULT_SPEAKER_PATTERNS).expect("bundled speaker patterns are valid")
    }
}

fn normalize_speaker(name: &str) -> String {
    let upper = name.to_uppercase();
    let collapsed = upper.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

/// A contiguous slice of the day stream: an optional speaker header followed by its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub speaker: String,
    pub header: std::ops::Range<usize>,
    pub body: std::ops::Range<usize>,
}

/// Splits `text` into segments that tile it exactly, in order.
pub fn segment(text: &str, patterns: &SpeakerPatterns) -> Vec<Segment> {
    let headers = patterns.headers(text);
    let mut segments = Vec::with_capacity(headers.len() + 1);
    let first_start = headers.first().map_or(text.len(), |h| h.0);
    if first_start > 0 {
        segments.push(Segment {
            speaker: UNATTRIBUTED.to_string(),
            header: 0..0,
            body: 0..first_start,
        });
    }
    for (i, (start, end, name)) in headers.iter().enumerate() {
        let body_end = headers.get(i + 1).map_or(text.len(), |h| h.0);
        segments.push(Segment {
            speaker: name.clone(),
            header: *start..*end,
            body: *end..body_end,
        });
    }
    segments
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerTurn {
    pub speaker: String,
    pub date: NaiveDate,
    pub chamber: Chamber,
    pub text: String,
    pub turn_index: usize,
}

/// Splits one day's text into speaker turns. Turns whose body is blank are
/// dropped; interjections that do not match a header pattern stay inside the
/// surrounding turn.
pub fn split_speakers(
    day_text: &str,
    patterns: &SpeakerPatterns,
    chamber: Chamber,
    date: NaiveDate,
) -> Vec<SpeakerTurn> {
    segment(day_text, patterns)
        .into_iter()
        .filter_map(|seg| {
            let body = day_text[seg.body].trim();
            (!body.is_empty()).then(|| (seg.speaker, body.to_string()))
        })
        .enumerate()
        .map(|(turn_index, (speaker, text))| SpeakerTurn {
            speaker,
            date,
            chamber,
            text,
            turn_index,
        })
        .collect()
}

/// Reflows and splits a single page.
pub fn parse_day(page: &RawPage, patterns: &SpeakerPatterns) -> Result<Vec<SpeakerTurn>> {
    let lines = reflow_columns(page)?;
    Ok(split_speakers(&day_text(&lines), patterns, page.chamber, page.date))
}

/// Parses many pages independently. Output order follows `(date, chamber)`.
pub fn parse_days(pages: &[RawPage], patterns: &SpeakerPatterns) -> Vec<Result<Vec<SpeakerTurn>>> {
    let mut order: Vec<usize> = (0..pages.len()).collect();
    order.sort_by_key(|&i| (pages[i].date, pages[i].chamber));
    order.par_iter().map(|&i| parse_day(&pages[i], patterns)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TidyRow {
    pub date: NaiveDate,
    pub chamber: Chamber,
    pub speaker: String,
    pub text: String,
}

pub fn export_tidy(turns: &[SpeakerTurn]) -> Vec<TidyRow> {
    turns
        .iter()
        .map(|t| TidyRow {
            date: t.date,
            chamber: t.chamber,
            speaker: t.speaker.clone(),
            text: t.text.clone(),
        })
        .collect()
}

/// Inverse of [`export_tidy`]: turn indices restart at zero for each `(chamber, date)`.
pub fn import_tidy(rows: &[TidyRow]) -> Vec<SpeakerTurn> {
    let mut next: std::collections::HashMap<(Chamber, NaiveDate), usize> = Default::default();
    rows.iter()
        .map(|r| {
            let idx = next.entry((r.chamber, r.date)).or_insert(0);
            let turn = SpeakerTurn {
                speaker: r.speaker.clone(),
                date: r.date,
                chamber: r.chamber,
                text: r.text.clone(),
                turn_index: *idx,
            };
            *idx += 1;
            turn
        })
        .collect()
}

pub fn write_tidy_csv<W: Write>(rows: &[TidyRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("tidy csv", e))?;
    Ok(())
}

pub fn read_tidy_csv<R: Read>(reader: R) -> Result<Vec<TidyRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "chamber", "speaker", "text"] {
        return Err(Error::invalid(format!(
            "tidy csv header must be date,chamber,speaker,text (got {})",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(1902, 2, 6).unwrap()
    }

    fn page(content: &str) -> RawPage {
        RawPage::parse(Chamber::Senate, date(), content)
    }

    fn texts(lines: &[PageLine]) -> Vec<&str> {
        lines.iter().map(|l| l.text.as_str()).collect()
    }

    #[test]
    fn reflow_single_region() {
        let p = page("L|L1\nR|R1\nL|L2\nR|R2\n");
        assert_eq!(texts(&reflow_columns(&p).unwrap()), ["L1", "L2", "R1", "R2"]);
    }

    #[test]
    fn reflow_full_width_only_is_identity() {
        let p = page("F|a\nF|b\nF|c\n");
        assert_eq!(texts(&reflow_columns(&p).unwrap()), ["a", "b", "c"]);
    }

    #[test]
    fn untagged_line_in_two_column_region_names_line() {
        let p = page("F|head\nL|x\noops\nR|y\n");
        match reflow_columns(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn untagged_lines_outside_columns_keep_order() {
        let p = page("plain one\nplain two\nF|rule\nL|a\nR|b\n");
        assert_eq!(
            texts(&reflow_columns(&p).unwrap()),
            ["plain one", "plain two", "rule", "a", "b"]
        );
    }

    #[test]
    fn split_two_speakers() {
        let turns = split_speakers(
            "Mr SMITH— Hello. Mr JONES— Reply.",
            &SpeakerPatterns::default(),
            Chamber::HouseOfRepresentatives,
            date(),
        );
        let got: Vec<_> = turns.iter().map(|t| (t.speaker.as_str(), t.text.as_str())).collect();
        assert_eq!(got, [("SMITH", "Hello."), ("JONES", "Reply.")]);
        assert_eq!(turns[1].turn_index, 1);
    }

    #[test]
    fn no_matches_gives_one_unattributed_turn() {
        let turns = split_speakers(
            "nothing to see here",
            &SpeakerPatterns::default(),
            Chamber::Senate,
            date(),
        );
        assert_eq!(turns.len(), 1);
        assert_eq!(turns[0].speaker, UNATTRIBUTED);
    }

    #[test]
    fn empty_stream_gives_no_turns() {
        assert!(split_speakers("", &SpeakerPatterns::default(), Chamber::Senate, date()).is_empty());
    }

    #[test]
    fn presiding_officers_and_interjections() {
        let text = "The PRESIDENT— Order! Senator McGREGOR— I rise. Mr Smith interjecting— Senator McGREGOR continued.";
        let turns = split_speakers(text, &SpeakerPatterns::default(), Chamber::Senate, date());
        let speakers: Vec<_> = turns.iter().map(|t| t.speaker.as_str()).collect();
        assert_eq!(speakers, ["PRESIDENT", "MCGREGOR"]);
        assert!(turns[1].text.contains("interjecting"));
    }

    #[test]
    fn segments_tile_input() {
        let text = "Preamble. Mr SMITH— a Mr JONES— b";
        let segs = segment(text, &SpeakerPatterns::default());
        let rebuilt: String = segs
            .iter()
            .map(|s| format!("{}{}", &text[s.header.clone()], &text[s.body.clone()]))
            .collect();
        assert_eq!(rebuilt, text);
        assert_eq!(segs[0].speaker, UNATTRIBUTED);
    }

    #[test]
    fn pattern_without_name_group_rejected() {
        assert!(SpeakerPatterns::from_lines("Mr [A-Z]+—").is_err());
    }

    #[test]
    fn filename_round_trip() {
        let (c, d) = parse_page_filename("senate_1902-02-06.txt").unwrap();
        assert_eq!((c, d), (Chamber::Senate, date()));
        assert!(parse_page_filename("senate-1902-02-06.txt").is_err());
        assert!(parse_page_filename("lords_1902-02-06.txt").is_err());
        assert!(parse_page_filename("hor_1902-02-30.txt").is_err());
    }

    #[test]
    fn tidy_round_trip() {
        let turns = split_speakers(
            "Mr SMITH— Hello, \"world\". Mr JONES— Reply,\nwith newline.",
            &SpeakerPatterns::default(),
            Chamber::HouseOfRepresentatives,
            date(),
        );
        let rows = export_tidy(&turns);
        assert_eq!(rows.len(), 2);
        let mut buf = Vec::new();
        write_tidy_csv(&rows, &mut buf).unwrap();
        let back = read_tidy_csv(buf.as_slice()).unwrap();
        assert_eq!(import_tidy(&back), turns);
    }
}

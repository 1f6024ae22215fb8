use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One prime-ministerial period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Government {
    pub id: u32,
    pub name: String,
    pub party: String,
    pub start: NaiveDate,
    /// `None` for a period still open at the end of the record.
    pub end: Option<NaiveDate>,
    /// Excluded periods are never compared, neither as the later nor the earlier unit.
    pub excluded: bool,
    /// The government this one is compared with.
    pub compare_to: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Election {
    pub id: u32,
    pub date: NaiveDate,
    pub winner: String,
    #[serde(default)]
    pub seats: Option<u32>,
}

/// Prime ministers and elections, each ordered in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    governments: Vec<Government>,
    elections: Vec<Election>,
}

const GOVERNMENTS_CSV: &str = include_str!("../../assets/governments.csv");
const ELECTIONS_CSV: &str = include_str!("../../assets/elections.csv");

impl Timeline {
    pub fn new(governments: Vec<Government>, elections: Vec<Election>) -> Result<Self> {
        if governments.is_empty() || elections.is_empty() {
            return Err(Error::invalid(
                "timeline needs at least one government and one election",
            ));
        }
        for w in governments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.start <= a.start || a.end.is_none_or(|end| end > b.start) {
                return Err(Error::invalid(format!(
                    "governments {} and {} overlap or are out of order",
                    a.id, b.id
                )));
            }
        }
        for g in &governments {
            if g.end.is_some_and(|end| end < g.start) {
                return Err(Error::invalid(format!("government {} ends before it starts", g.id)));
            }
        }
        let mut ids: Vec<u32> = governments.iter().map(|g| g.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != governments.len() {
            return Err(Error::invalid("duplicate government ids"));
        }
        for (i, g) in governments.iter().enumerate() {
            if let Some(target) = g.compare_to {
                let pos = governments
                    .iter()
                    .position(|h| h.id == target)
                    .ok_or_else(|| Error::invalid(format!("government {} compares to unknown id {target}", g.id)))?;
                if pos >= i {
                    return Err(Error::invalid(format!(
                        "government {} compares to a later government",
                        g.id
                    )));
                }
                if governments[pos].excluded && !g.excluded {
                    return Err(Error::invalid(format!(
                        "government {} compares to excluded government {target}",
                        g.id
                    )));
                }
            }
        }
        for w in elections.windows(2) {
            if w[1].date <= w[0].date || w[1].id == w[0].id {
                return Err(Error::invalid(format!(
                    "elections {} and {} are out of order",
                    w[0].id, w[1].id
                )));
            }
        }
        Ok(Timeline { governments, elections })
    }

    /// Prime ministers 1901–2018 and the 45 elections of the same span.
    pub fn australia() -> Self {
        Self::from_readers(GOVERNMENTS_CSV.as_bytes(), ELECTIONS_CSV.as_bytes()).expect("shipped timeline is valid")
    }

    pub fn from_readers<R1: Read, R2: Read>(governments: R1, elections: R2) -> Result<Self> {
        let governments = csv::Reader::from_reader(governments)
            .deserialize()
            .collect::<std::result::Result<Vec<Government>, _>>()?;
        let elections = csv::Reader::from_reader(elections)
            .deserialize()
            .collect::<std::result::Result<Vec<Election>, _>>()?;
        Self::new(governments, elections)
    }

    pub fn from_files(governments: &Path, elections: &Path) -> Result<Self> {
        let g = std::fs::File::open(governments).map_err(|e| Error::io(governments, e))?;
        let e = std::fs::File::open(elections).map_err(|e| Error::io(elections, e))?;
        Self::from_readers(g, e)
    }

    pub fn write_governments<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for g in &self.governments {
            w.serialize(g)?;
        }
        w.flush().map_err(|e| Error::io("governments", e))?;
        Ok(())
    }

    pub fn write_elections<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for e in &self.elections {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io("elections", e))?;
        Ok(())
    }

    pub fn governments(&self) -> &[Government] {
        &self.governments
    }

    pub fn elections(&self) -> &[Election] {
        &self.elections
    }

    pub fn government_index(&self, id: u32) -> Option<usize> {
        self.governments.iter().position(|g| g.id == id)
    }

    pub fn election_index(&self, id: u32) -> Option<usize> {
        self.elections.iter().position(|e| e.id == id)
    }

    /// Index of the government in office on `date`: the latest one started on
    /// or before it, provided that one has not ended before it.
    pub fn government_at(&self, date: NaiveDate) -> Option<usize> {
        let i = self.governments.partition_point(|g| g.start <= date).checked_sub(1)?;
        match self.governments[i].end {
            Some(end) if end < date => None,
            _ => Some(i),
        }
    }

    /// Index of the latest election held on or before `date`.
    pub fn election_at(&self, date: NaiveDate) -> Option<usize> {
        self.elections.partition_point(|e| e.date <= date).checked_sub(1)
    }

    /// Government and election ids in force on `date`.
    pub fn assign(&self, date: NaiveDate) -> Result<(u32, u32)> {
        let g = self
            .government_at(date)
            .ok_or_else(|| Error::invalid(format!("no government in office on {date}")))?;
        let e = self
            .election_at(date)
            .ok_or_else(|| Error::invalid(format!("no election held on or before {date}")))?;
        Ok((self.governments[g].id, self.elections[e].id))
    }

    /// Pairs `(later, earlier)` of government indices to compare.
    pub fn government_pairs(&self) -> Vec<(usize, usize)> {
        self.governments
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.excluded)
            .filter_map(|(i, g)| {
                let j = self.government_index(g.compare_to?)?;
                (!self.governments[j].excluded).then_some((i, j))
            })
            .collect()
    }

    /// Pairs `(later, earlier)` of consecutive election indices.
    pub fn election_pairs(&self) -> Vec<(usize, usize)> {
        (1..self.elections.len()).map(|i| (i, i - 1)).collect()
    }
}

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DocKey;
use crate::error::{Error, Result};
use crate::record_parser::Chamber;

/// A gap of this many calendar days or more between sitting days starts a new period.
pub const PERIOD_GAP_DAYS: i64 = 7;

/// Sitting days grouped into sitting periods (runs of days less than a week apart).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SittingCalendar {
    days: Vec<NaiveDate>,
    period_of_day: BTreeMap<NaiveDate, usize>,
    period_count: usize,
}

impl SittingCalendar {
    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn period_count(&self) -> usize {
        self.period_count
    }

    pub fn period_of(&self, date: NaiveDate) -> Option<usize> {
        self.period_of_day.get(&date).copied()
    }

    /// First sitting day of each period.
    pub fn period_starts(&self) -> Vec<NaiveDate> {
        let mut starts = Vec::with_capacity(self.period_count);
        for d in &self.days {
            if self.period_of_day[d] == starts.len() {
                starts.push(*d);
            }
        }
        starts
    }
}

/// Groups sitting days into periods. Input may be unsorted or contain repeats
/// (for example the union of both chambers' days); it must not be empty.
pub fn derive_sitting_periods(days: &[NaiveDate]) -> Result<SittingCalendar> {
    if days.is_empty() {
        return Err(Error::invalid("no sitting days"));
    }
    let mut days = days.to_vec();
    days.sort_unstable();
    days.dedup();

    let mut period_of_day = BTreeMap::new();
    let mut period = 0usize;
    for (i, d) in days.iter().enumerate() {
        if i > 0 && (*d - days[i - 1]).num_days() >= PERIOD_GAP_DAYS {
            period += 1;
        }
        period_of_day.insert(*d, period);
    }
    Ok(SittingCalendar {
        days,
        period_of_day,
        period_count: period + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarRow {
    pub date: NaiveDate,
    pub chamber: Chamber,
    pub period_id: usize,
}

/// Writes `date,chamber,period_id` for every document.
pub fn write_calendar_csv<W: Write>(calendar: &SittingCalendar, docs: &[DocKey], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for k in docs {
        let period_id = calendar
            .period_of(k.date)
            .ok_or_else(|| Error::invalid(format!("{} is not a sitting day of the calendar", k.date)))?;
        w.serialize(CalendarRow {
            date: k.date,
            chamber: k.chamber,
            period_id,
        })?;
    }
    w.flush().map_err(|e| Error::io("calendar", e))?;
    Ok(())
}

pub fn read_calendar_csv<R: Read>(r: R) -> Result<Vec<CalendarRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jun(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(1950, 6, d).unwrap()
    }

    #[test]
    fn gaps_under_a_week_stay_together() {
        let cal = derive_sitting_periods(&[jun(1), jun(2), jun(7)]).unwrap();
        assert_eq!(cal.period_count(), 1);
    }

    #[test]
    fn seven_day_gap_splits() {
        let cal = derive_sitting_periods(&[jun(1), jun(8)]).unwrap();
        assert_eq!(cal.period_count(), 2);
        assert_eq!(cal.period_of(jun(8)), Some(1));
        assert_eq!(cal.period_starts(), [jun(1), jun(8)]);
    }

    #[test]
    fn empty_is_error() {
        assert!(derive_sitting_periods(&[]).is_err());
    }

    #[test]
    fn duplicates_and_order_ignored() {
        let cal = derive_sitting_periods(&[jun(9), jun(1), jun(1), jun(2)]).unwrap();
        assert_eq!(cal.days(), [jun(1), jun(2), jun(9)]);
        assert_eq!(cal.period_count(), 2);
    }
}

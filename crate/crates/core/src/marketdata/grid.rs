use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar quarter, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Quarter {
    year: i32,
    index: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Invalid(format!(
                "quarter must be 1..=4, got {quarter}"
            )));
        }
        Ok(Quarter {
            year,
            index: quarter,
        })
    }

    pub fn of(date: NaiveDate) -> Self {
        Quarter {
            year: date.year(),
            index: (date.month0() / 3 + 1) as u8,
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn number(self) -> u8 {
        self.index
    }

    pub fn first_day(self) -> NaiveDate {
        let month = u32::from(self.index - 1) * 3 + 1;
        NaiveDate::from_ymd_opt(self.year, month, 1).expect("valid quarter start")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next()
            .first_day()
            .pred_opt()
            .expect("valid quarter end")
    }

    pub fn days(self) -> i64 {
        (self.last_day() - self.first_day()).num_days() + 1
    }

    pub fn next(self) -> Self {
        if self.index == 4 {
            Quarter {
                year: self.year + 1,
                index: 1,
            }
        } else {
            Quarter {
                year: self.year,
                index: self.index + 1,
            }
        }
    }

    pub fn prev(self) -> Self {
        if self.index == 1 {
            Quarter {
                year: self.year - 1,
                index: 4,
            }
        } else {
            Quarter {
                year: self.year,
                index: self.index - 1,
            }
        }
    }

    /// Number of quarters from `self` to `other` (negative if `other` is earlier).
    pub fn offset_to(self, other: Quarter) -> i64 {
        (i64::from(other.year) * 4 + i64::from(other.index))
            - (i64::from(self.year) * 4 + i64::from(self.index))
    }

    pub fn plus(self, quarters: i64) -> Self {
        let linear = i64::from(self.year) * 4 + i64::from(self.index - 1) + quarters;
        Quarter {
            year: linear.div_euclid(4) as i32,
            index: (linear.rem_euclid(4) + 1) as u8,
        }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.index)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("invalid quarter `{s}`, expected e.g. 2015Q3"));
        let (year, q) = s.trim().split_once(['Q', 'q']).ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let q: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q)
    }
}

impl TryFrom<String> for Quarter {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Quarter> for String {
    fn from(q: Quarter) -> Self {
        q.to_string()
    }
}

/// Contiguous run of calendar quarters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarterGrid {
    quarters: Vec<Quarter>,
}

impl QuarterGrid {
    /// Grid from `first` to `last`, inclusive.
    pub fn new(first: Quarter, last: Quarter) -> Result<Self> {
        if last < first {
            return Err(Error::Invalid(format!(
                "empty quarter grid {first}..{last}"
            )));
        }
        let mut quarters = vec![first];
        let mut q = first;
        while q < last {
            q = q.next();
            quarters.push(q);
        }
        Ok(QuarterGrid { quarters })
    }

    /// Every quarter touched by the closed date interval `[start, end]`.
    pub fn covering(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        Self::new(Quarter::of(start), Quarter::of(end))
    }

    pub fn quarters(&self) -> &[Quarter] {
        &self.quarters
    }

    pub fn len(&self) -> usize {
        self.quarters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quarters.is_empty()
    }

    pub fn first(&self) -> Quarter {
        self.quarters[0]
    }

    pub fn last(&self) -> Quarter {
        *self.quarters.last().expect("grid is never empty")
    }

    pub fn contains(&self, q: Quarter) -> bool {
        self.first() <= q && q <= self.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = Quarter> + '_ {
        self.quarters.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn quarter_bounds() {
        let q = Quarter::of(d(2016, 2, 29));
        assert_eq!(q.to_string(), "2016Q1");
        assert_eq!(q.first_day(), d(2016, 1, 1));
        assert_eq!(q.last_day(), d(2016, 3, 31));
        assert_eq!(q.days(), 91);
        assert_eq!(Quarter::of(d(2015, 12, 31)).last_day(), d(2015, 12, 31));
        assert_eq!(
            Quarter::new(2015, 4).unwrap().next(),
            Quarter::new(2016, 1).unwrap()
        );
        assert_eq!(
            Quarter::new(2016, 1).unwrap().prev(),
            Quarter::new(2015, 4).unwrap()
        );
    }

    #[test]
    fn quarter_arithmetic() {
        let q = Quarter::new(2010, 1).unwrap();
        assert_eq!(q.plus(47).to_string(), "2021Q4");
        assert_eq!(q.plus(-1).to_string(), "2009Q4");
        assert_eq!(q.offset_to(q.plus(47)), 47);
        assert_eq!("2021q4".parse::<Quarter>().unwrap(), q.plus(47));
        assert!("2021Q5".parse::<Quarter>().is_err());
    }

    #[test]
    fn grid_covers_window() {
        let g = QuarterGrid::covering(d(2010, 1, 1), d(2022, 5, 31)).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g.first().to_string(), "2010Q1");
        assert_eq!(g.last().to_string(), "2022Q2");
        assert!(g.quarters().windows(2).all(|w| w[0].next() == w[1]));
    }
}

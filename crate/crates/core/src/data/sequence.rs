use serde::{Deserialize, Serialize};

use super::activity::ActivityCategory;
use crate::error::{Error, Result};

pub const TIME_BINS: u8 = 96;
/// Travel mode codes 1..=5 are concrete modes, 6 is "Unknown".
pub const MODE_CODES: u8 = 6;
pub const MODE_UNKNOWN: u8 = 6;
pub const STATIC_LEVELS: u8 = 5;

/// One activity with its per-activity (unknown) covariates. Bins and mode
/// are 0 when `observed` is false.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub label: ActivityCategory,
    pub arr: u8,
    pub dep: u8,
    pub mode: u8,
    pub dist: f64,
    pub observed: bool,
}

impl Activity {
    /// A placeholder for an activity inserted by the decoder.
    pub fn unobserved(label: ActivityCategory) -> Self {
        Self {
            label,
            arr: 0,
            dep: 0,
            mode: 0,
            dist: 0.0,
            observed: false,
        }
    }
}

/// One person-day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaySequence {
    pub person_id: u64,
    pub date: u32,
    pub weekday: u8,
    pub holiday: u8,
    #[serde(rename = "static")]
    pub static_codes: [u8; 4],
    pub activities: Vec<Activity>,
}

impl DaySequence {
    pub fn labels(&self) -> Vec<ActivityCategory> {
        self.activities.iter().map(|a| a.label).collect()
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    /// Same day, different activity list.
    pub fn with_activities(&self, activities: Vec<Activity>) -> Self {
        Self {
            activities,
            ..self.clone()
        }
    }

    /// Checks every covariate code against the schema.
    pub fn validate(&self) -> Result<()> {
        if !(1..=7).contains(&self.weekday) {
            return Err(Error::Vocabulary {
                what: "weekday",
                code: self.weekday.into(),
            });
        }
        if self.holiday > 1 {
            return Err(Error::Vocabulary {
                what: "holiday",
                code: self.holiday.into(),
            });
        }
        for &s in &self.static_codes {
            if !(1..=STATIC_LEVELS).contains(&s) {
                return Err(Error::Vocabulary {
                    what: "static covariate",
                    code: s.into(),
                });
            }
        }
        for a in &self.activities {
            if !a.observed {
                continue;
            }
            for (what, bin) in [("arrival bin", a.arr), ("departure bin", a.dep)] {
                if !(1..=TIME_BINS).contains(&bin) {
                    return Err(Error::Vocabulary {
                        what,
                        code: bin.into(),
                    });
                }
            }
            if !(1..=MODE_CODES).contains(&a.mode) {
                return Err(Error::Vocabulary {
                    what: "travel mode",
                    code: a.mode.into(),
                });
            }
            if !(a.dist >= 0.0 && a.dist.is_finite()) {
                return Err(Error::Config(format!("invalid trip distance {}", a.dist)));
            }
        }
        Ok(())
    }
}

/// An (incomplete, complete) training/evaluation pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoverySample {
    pub complete: DaySequence,
    pub incomplete: DaySequence,
    pub removed_positions: Vec<usize>,
}

impl RecoverySample {
    pub fn new(complete: DaySequence, mut removed_positions: Vec<usize>) -> Result<Self> {
        removed_positions.sort_unstable();
        removed_positions.dedup();
        if removed_positions.last().is_some_and(|&p| p >= complete.len()) {
            return Err(Error::Contract(format!(
                "removed position out of range for length {}",
                complete.len()
            )));
        }
        let kept = complete
            .activities
            .iter()
            .enumerate()
            .filter(|(i, _)| removed_positions.binary_search(i).is_err())
            .map(|(_, a)| a.clone())
            .collect();
        Ok(Self {
            incomplete: complete.with_activities(kept),
            complete,
            removed_positions,
        })
    }

    /// Positions in `complete` that survived masking, in order.
    pub fn kept_positions(&self) -> Vec<usize> {
        (0..self.complete.len())
            .filter(|i| self.removed_positions.binary_search(i).is_err())
            .collect()
    }
}

/// On-disk form of a recovery sample: the complete day plus removed positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub day: DaySequence,
    pub removed_positions: Vec<usize>,
}

impl From<&RecoverySample> for SampleRecord {
    fn from(s: &RecoverySample) -> Self {
        Self {
            day: s.complete.clone(),
            removed_positions: s.removed_positions.clone(),
        }
    }
}

impl TryFrom<SampleRecord> for RecoverySample {
    type Error = Error;

    fn try_from(r: SampleRecord) -> Result<Self> {
        RecoverySample::new(r.day, r.removed_positions)
    }
}

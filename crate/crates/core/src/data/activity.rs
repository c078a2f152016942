use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Closed activity vocabulary. Discriminants are the model's label indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityCategory {
    GoShopping = 0,
    Other = 1,
    PersonalBusiness = 2,
    GoToSchool = 3,
    Healthcare = 4,
    Recreation = 5,
    EatOut = 6,
    HomeActivity = 7,
    WorkForPay = 8,
}

pub use ActivityCategory as Act;

impl ActivityCategory {
    pub const COUNT: usize = 9;

    pub const ALL: [ActivityCategory; 9] = [
        Act::GoShopping,
        Act::Other,
        Act::PersonalBusiness,
        Act::GoToSchool,
        Act::Healthcare,
        Act::Recreation,
        Act::EatOut,
        Act::HomeActivity,
        Act::WorkForPay,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Act::GoShopping => "GoShopping",
            Act::Other => "Other",
            Act::PersonalBusiness => "PersonalBusiness",
            Act::GoToSchool => "GoToSchool",
            Act::Healthcare => "Healthcare",
            Act::Recreation => "Recreation",
            Act::EatOut => "EatOut",
            Act::HomeActivity => "HomeActivity",
            Act::WorkForPay => "WorkForPay",
        }
    }
}

impl fmt::Display for ActivityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or(Error::Vocabulary {
                what: "activity",
                code: -1,
            })
    }
}

/// NAICS two-digit sector codes mapped to activity categories, with the
/// number of activities observed per category in the source roster.
/// Home and work are inferred rather than matched to a POI.
pub const NAICS_CATEGORIES: [(&[u8], ActivityCategory, Option<u32>); 9] = [
    (&[42, 44, 45], Act::GoShopping, Some(234_358)),
    (&[51, 53], Act::Other, Some(133_036)),
    (&[52, 54, 56, 81, 92], Act::PersonalBusiness, Some(312_299)),
    (&[61], Act::GoToSchool, Some(36_198)),
    (&[62], Act::Healthcare, Some(181_699)),
    (&[71], Act::Recreation, Some(52_143)),
    (&[72], Act::EatOut, Some(150_089)),
    (&[], Act::HomeActivity, None),
    (&[], Act::WorkForPay, None),
];

pub fn category_for_naics(sector: u8) -> Option<ActivityCategory> {
    NAICS_CATEGORIES
        .iter()
        .find(|(codes, _, _)| codes.contains(&sector))
        .map(|(_, cat, _)| *cat)
}

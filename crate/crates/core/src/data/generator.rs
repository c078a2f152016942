//! Synthetic person-day generator.
//!
//! Labels follow a first-order Markov chain whose initial distribution and
//! transition matrix depend on the day regime (weekday, weekend, holiday).
//! Each activity draws a duration in 15-minute bins; trips between activities
//! draw a mode, a distance, and a travel time, and arrival/departure bins are
//! chained through the 96-bin day. A home activity reached at or after
//! `evening_home_bin` closes the day.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activity::{Act, ActivityCategory};
use super::sequence::{Activity, DaySequence, MODE_UNKNOWN, TIME_BINS};
use crate::error::{Error, Result};

const N: usize = ActivityCategory::COUNT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Weekday,
    Weekend,
    Holiday,
}

impl Regime {
    pub fn of(weekday: u8, holiday: bool) -> Self {
        if holiday {
            Regime::Holiday
        } else if weekday >= 6 {
            Regime::Weekend
        } else {
            Regime::Weekday
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub initial: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regimes {
    pub weekday: RegimeConfig,
    pub weekend: RegimeConfig,
    pub holiday: RegimeConfig,
}

impl Regimes {
    pub fn get(&self, r: Regime) -> &RegimeConfig {
        match r {
            Regime::Weekday => &self.weekday,
            Regime::Weekend => &self.weekend,
            Regime::Holiday => &self.holiday,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub person_days: usize,
    pub days_per_person: usize,
    /// Weekday (1 = Monday) of date index 0.
    pub first_weekday: u8,
    /// Date indices that are holidays.
    pub holidays: Vec<u32>,
    pub regimes: Regimes,
    /// Inclusive duration range in bins, indexed by label.
    pub durations: Vec<[u8; 2]>,
    /// Inclusive range for the departure bin of the day's first activity.
    pub day_start_departure: [u8; 2],
    pub evening_home_bin: u8,
    /// Weights over travel modes 1..=6 (6 = Unknown).
    pub mode_weights: Vec<f64>,
    pub p_remove: f64,
    pub target_mean_activities: f64,
}

#[rustfmt::skip]
const WEEKDAY: [[f64; N]; N] = [
    // Shop  Other  PB    School Health Rec   Eat   Home  Work
    [0.00, 0.05, 0.10, 0.00, 0.03, 0.07, 0.15, 0.55, 0.05], // GoShopping
    [0.10, 0.00, 0.10, 0.00, 0.05, 0.05, 0.10, 0.55, 0.05], // Other
    [0.12, 0.05, 0.00, 0.00, 0.05, 0.05, 0.13, 0.50, 0.10], // PersonalBusiness
    [0.05, 0.05, 0.05, 0.00, 0.02, 0.15, 0.08, 0.60, 0.00], // GoToSchool
    [0.10, 0.05, 0.10, 0.00, 0.00, 0.02, 0.08, 0.60, 0.05], // Healthcare
    [0.08, 0.05, 0.05, 0.00, 0.02, 0.00, 0.20, 0.60, 0.00], // Recreation
    [0.12, 0.05, 0.10, 0.00, 0.03, 0.10, 0.00, 0.45, 0.15], // EatOut
    [0.06, 0.04, 0.07, 0.08, 0.03, 0.03, 0.04, 0.00, 0.65], // HomeActivity
    [0.12, 0.05, 0.12, 0.00, 0.03, 0.05, 0.18, 0.45, 0.00], // WorkForPay
];

#[rustfmt::skip]
const WEEKEND: [[f64; N]; N] = [
    [0.00, 0.05, 0.05, 0.00, 0.02, 0.15, 0.20, 0.53, 0.00],
    [0.15, 0.00, 0.05, 0.00, 0.02, 0.15, 0.13, 0.50, 0.00],
    [0.20, 0.05, 0.00, 0.00, 0.02, 0.13, 0.15, 0.45, 0.00],
    [0.10, 0.05, 0.05, 0.00, 0.00, 0.20, 0.10, 0.50, 0.00],
    [0.15, 0.05, 0.05, 0.00, 0.00, 0.10, 0.15, 0.50, 0.00],
    [0.10, 0.05, 0.03, 0.00, 0.02, 0.00, 0.25, 0.55, 0.00],
    [0.15, 0.05, 0.05, 0.00, 0.02, 0.18, 0.00, 0.55, 0.00],
    [0.22, 0.08, 0.06, 0.00, 0.03, 0.45, 0.13, 0.00, 0.03],
    [0.10, 0.05, 0.05, 0.00, 0.00, 0.10, 0.20, 0.50, 0.00],
];

#[rustfmt::skip]
const HOLIDAY: [[f64; N]; N] = [
    [0.00, 0.05, 0.02, 0.00, 0.01, 0.20, 0.22, 0.50, 0.00],
    [0.15, 0.00, 0.02, 0.00, 0.01, 0.20, 0.12, 0.50, 0.00],
    [0.15, 0.05, 0.00, 0.00, 0.02, 0.18, 0.15, 0.45, 0.00],
    [0.10, 0.05, 0.05, 0.00, 0.00, 0.20, 0.10, 0.50, 0.00],
    [0.15, 0.05, 0.05, 0.00, 0.00, 0.10, 0.15, 0.50, 0.00],
    [0.08, 0.05, 0.02, 0.00, 0.00, 0.00, 0.30, 0.55, 0.00],
    [0.10, 0.05, 0.02, 0.00, 0.01, 0.22, 0.00, 0.60, 0.00],
    [0.15, 0.08, 0.03, 0.00, 0.02, 0.50, 0.20, 0.00, 0.02],
    [0.10, 0.05, 0.05, 0.00, 0.00, 0.10, 0.20, 0.50, 0.00],
];

fn rows(m: &[[f64; N]; N]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let initial = |home: f64, work: f64| {
            let mut v = vec![0.0; N];
            v[Act::HomeActivity.index()] = home;
            v[Act::WorkForPay.index()] = work;
            v[Act::Other.index()] = 1.0 - home - work;
            v
        };
        Self {
            seed: 2020,
            person_days: 10_000,
            days_per_person: 31,
            first_weekday: 3,
            holidays: vec![0, 19],
            regimes: Regimes {
                weekday: RegimeConfig {
                    initial: initial(0.94, 0.03),
                    transitions: rows(&WEEKDAY),
                },
                weekend: RegimeConfig {
                    initial: initial(0.97, 0.0),
                    transitions: rows(&WEEKEND),
                },
                holiday: RegimeConfig {
                    initial: initial(0.97, 0.0),
                    transitions: rows(&HOLIDAY),
                },
            },
            durations: vec![
                [3, 8],   // GoShopping
                [3, 12],  // Other
                [3, 10],  // PersonalBusiness
                [20, 28], // GoToSchool
                [4, 10],  // Healthcare
                [8, 20],  // Recreation
                [4, 8],   // EatOut
                [16, 36], // HomeActivity (after the first activity)
                [26, 36], // WorkForPay
            ],
            day_start_departure: [26, 38],
            evening_home_bin: 60,
            mode_weights: vec![0.15, 0.03, 0.15, 0.55, 0.02, 0.10],
            p_remove: 0.3,
            target_mean_activities: 4.49,
        }
    }
}

fn check_distribution(what: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::Config(format!("{what}: expected {len} entries, got {}", v.len())));
    }
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Config(format!("{what}: negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{what}: sums to {s}, not 1")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("weekday", &self.regimes.weekday),
            ("weekend", &self.regimes.weekend),
            ("holiday", &self.regimes.holiday),
        ] {
            check_distribution(&format!("{name} initial"), &r.initial, N)?;
            if r.transitions.len() != N {
                return Err(Error::Config(format!("{name} transitions: expected {N} rows")));
            }
            for (i, row) in r.transitions.iter().enumerate() {
                check_distribution(&format!("{name} transitions row {i}"), row, N)?;
            }
        }
        if self.durations.len() != N {
            return Err(Error::Config(format!("durations: expected {N} ranges")));
        }
        for d in self.durations.iter().chain([&self.day_start_departure]) {
            if d[0] == 0 || d[0] > d[1] || d[1] > TIME_BINS {
                return Err(Error::Config(format!("invalid bin range {d:?}")));
            }
        }
        if self.mode_weights.len() != MODE_UNKNOWN as usize
            || self.mode_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.mode_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Config("mode_weights: need 6 nonnegative weights".into()));
        }
        if !(0.0..=1.0).contains(&self.p_remove) {
            return Err(Error::Config(format!("p_remove {} outside [0, 1]", self.p_remove)));
        }
        if !(1..=7).contains(&self.first_weekday) {
            return Err(Error::Config("first_weekday must be in 1..=7".into()));
        }
        if self.days_per_person == 0 {
            return Err(Error::Config("days_per_person must be positive".into()));
        }
        Ok(())
    }

    pub fn weekday_of(&self, date: u32) -> u8 {
        ((self.first_weekday as u32 - 1 + date) % 7) as u8 + 1
    }

    pub fn is_holiday(&self, date: u32) -> bool {
        self.holidays.contains(&date)
    }
}

/// Independent sub-stream `stream` of the master seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const PERSON_STREAM: u64 = 1 << 40;

pub fn sample_categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding fell off the end: last index with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

// Distance range (miles) and speed (miles per 15-minute bin) for modes 1..=6.
const MODE_DISTANCE: [(f64, f64, f64); 6] = [
    (0.2, 1.5, 0.75),
    (0.5, 4.0, 2.5),
    (1.0, 10.0, 3.0),
    (1.0, 20.0, 6.0),
    (1.0, 12.0, 5.0),
    (0.2, 15.0, 4.0),
];

fn generate_day(config: &GeneratorConfig, index: usize, seed: u64) -> DaySequence {
    let person = (index / config.days_per_person) as u64;
    let date = (index % config.days_per_person) as u32;
    let weekday = config.weekday_of(date);
    let holiday = config.is_holiday(date);
    let regime = config.regimes.get(Regime::of(weekday, holiday));

    let mut prng = substream(seed, PERSON_STREAM + person);
    let static_codes = [0; 4].map(|_| prng.gen_range(1..=5u8));

    let mut rng = substream(seed, index as u64);
    let mut activities = Vec::new();
    let mut label = sample_categorical(&mut rng, &regime.initial);
    let [lo, hi] = config.day_start_departure;
    let mut arr = 1u8;
    let mut dep = rng.gen_range(lo..=hi);
    let (mut mode, mut dist) = (MODE_UNKNOWN, 0.0);
    loop {
        let closes_day =
            label == Act::HomeActivity.index() && arr >= config.evening_home_bin && !activities.is_empty();
        if closes_day {
            dep = TIME_BINS;
        }
        dep = dep.clamp(arr, TIME_BINS);
        activities.push(Activity {
            label: ActivityCategory::from_index(label).expect("label index"),
            arr,
            dep,
            mode,
            dist,
            observed: true,
        });
        if closes_day || dep >= TIME_BINS {
            break;
        }
        label = sample_categorical(&mut rng, &regime.transitions[label]);
        mode = sample_categorical(&mut rng, &config.mode_weights) as u8 + 1;
        let (dmin, dmax, speed) = MODE_DISTANCE[mode as usize - 1];
        dist = (rng.gen_range(dmin..dmax) * 100.0f64).round() / 100.0;
        let travel = ((dist / speed).ceil() as u8).max(1);
        let [dlo, dhi] = config.durations[label];
        let duration = rng.gen_range(dlo..=dhi);
        let next_arr = dep as u16 + travel as u16;
        if next_arr > TIME_BINS as u16 {
            break;
        }
        arr = next_arr as u8;
        dep = (arr as u16 + duration as u16 - 1).min(TIME_BINS as u16) as u8;
    }

    DaySequence {
        person_id: person,
        date,
        weekday,
        holiday: holiday as u8,
        static_codes,
        activities,
    }
}

/// Generates `config.person_days` days. Day `k` belongs to person
/// `k / days_per_person` on date `k % days_per_person`; each day draws from
/// its own sub-stream of `seed`.
pub fn generate_population(config: &GeneratorConfig, seed: u64) -> Result<Vec<DaySequence>> {
    config.validate()?;
    Ok((0..config.person_days)
        .map(|k| generate_day(config, k, seed))
        .collect())
}

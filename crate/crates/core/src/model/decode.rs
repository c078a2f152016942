use super::network::{Model, SlotDistribution, NO_INSERT};
use crate::data::sequence::{Activity, DaySequence};
use crate::data::ActivityCategory;
use crate::error::Result;

/// Outcome of iterative insertion decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub day: DaySequence,
    /// Rounds that inserted at least one token.
    pub rounds: usize,
    /// Set when an insertion round hit `max_len`; the result keeps the
    /// insertions that fit, leftmost slots first.
    pub truncated: bool,
}

/// Applies one round of parallel greedy insertions. Returns the new
/// sequence, the number of insertions and whether any were dropped for
/// capacity.
pub fn apply_insertions(
    day: &DaySequence,
    dist: &SlotDistribution,
    max_len: usize,
) -> (DaySequence, usize, bool) {
    let choice = dist.argmax();
    let mut room = max_len.saturating_sub(day.len());
    let mut truncated = false;
    let mut inserted = 0;
    let mut out = Vec::with_capacity(day.len() + choice.len());
    for (s, &c) in choice.iter().enumerate() {
        if c != NO_INSERT {
            if room > 0 {
                let label = ActivityCategory::from_index(c).expect("activity class");
                out.push(Activity::unobserved(label));
                room -= 1;
                inserted += 1;
            } else {
                truncated = true;
            }
        }
        if s < day.len() {
            out.push(day.activities[s].clone());
        }
    }
    (day.with_activities(out), inserted, truncated)
}

/// Recovers one sequence; see [`recover_batch`].
pub fn recover(model: &Model, day: &DaySequence, max_rounds: usize) -> Result<Recovery> {
    Ok(recover_batch(model, std::slice::from_ref(day), max_rounds)?.remove(0))
}

/// Parallel greedy insertion decoding. Every round, each slot's argmax is
/// inserted simultaneously; a sequence stops when all its slots choose
/// `NO_INSERT`, when `max_rounds` rounds have run, or when it reaches the
/// model's `max_len`. Sequences still decoding share one forward pass per
/// round.
pub fn recover_batch(model: &Model, days: &[DaySequence], max_rounds: usize) -> Result<Vec<Recovery>> {
    let mut out: Vec<Recovery> = days
        .iter()
        .map(|d| Recovery {
            day: d.clone(),
            rounds: 0,
            truncated: false,
        })
        .collect();
    let mut active: Vec<usize> = (0..days.len()).collect();
    for _ in 0..max_rounds {
        if active.is_empty() {
            break;
        }
        let states: Vec<&DaySequence> = active.iter().map(|&i| &out[i].day).collect();
        let dists = model.slot_distributions(&states)?;
        let mut still = Vec::with_capacity(active.len());
        for (&i, dist) in active.iter().zip(&dists) {
            let r = &mut out[i];
            let (next, inserted, truncated) = apply_insertions(&r.day, dist, model.config.max_len);
            r.truncated |= truncated;
            if inserted > 0 {
                r.day = next;
                r.rounds += 1;
            }
            if inserted > 0 && !truncated && r.day.len() < model.config.max_len {
                still.push(i);
            }
        }
        active = still;
    }
    Ok(out)
}

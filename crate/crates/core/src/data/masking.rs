use rand::seq::SliceRandom;
use rand::Rng;

use super::generator::substream;
use super::sequence::{DaySequence, RecoverySample};
use crate::error::{Error, Result};

const MASK_STREAM: u64 = 1 << 48;

/// Removes each activity independently with probability `p_remove`. The
/// removed activities' covariates leave with them.
pub fn mask_sequence<R: Rng>(complete: &DaySequence, p_remove: f64, rng: &mut R) -> RecoverySample {
    let removed = (0..complete.len())
        .filter(|_| rng.gen_bool(p_remove))
        .collect();
    RecoverySample::new(complete.clone(), removed).expect("positions in range")
}

/// Masks every day with its own sub-stream of `seed`.
pub fn build_samples(days: &[DaySequence], p_remove: f64, seed: u64) -> Result<Vec<RecoverySample>> {
    if !(0.0..=1.0).contains(&p_remove) {
        return Err(Error::Config(format!("p_remove {p_remove} outside [0, 1]")));
    }
    Ok(days
        .iter()
        .enumerate()
        .map(|(i, d)| mask_sequence(d, p_remove, &mut substream(seed, MASK_STREAM + i as u64)))
        .collect())
}

/// Seeded 80/10/10 split into (train, validation, test).
pub fn split_samples<T: Clone>(items: &[T], seed: u64) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut substream(seed, MASK_STREAM - 1));
    let n_train = items.len() * 8 / 10;
    let n_valid = items.len() / 10;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    (
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_valid]),
        pick(&order[n_train + n_valid..]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generator::{generate_population, GeneratorConfig};

    fn days(n: usize) -> Vec<DaySequence> {
        let c = GeneratorConfig {
            person_days: n,
            ..Default::default()
        };
        generate_population(&c, 1).unwrap()
    }

    #[test]
    fn boundary_probabilities() {
        let d = &days(1)[0];
        let mut rng = substream(0, 0);
        let s = mask_sequence(d, 0.0, &mut rng);
        assert_eq!(&s.incomplete, d);
        assert!(s.removed_positions.is_empty());
        let s = mask_sequence(d, 1.0, &mut rng);
        assert!(s.incomplete.is_empty());
        assert_eq!(s.removed_positions.len(), d.len());
    }

    #[test]
    fn removal_rate_matches_probability() {
        let ds = days(25_000);
        let samples = build_samples(&ds, 0.3, 4).unwrap();
        let tokens: usize = ds.iter().map(|d| d.len()).sum();
        assert!(tokens >= 100_000, "{tokens}");
        let removed: usize = samples.iter().map(|s| s.removed_positions.len()).sum();
        let rate = removed as f64 / tokens as f64;
        assert!((rate - 0.3).abs() < 0.01, "{rate}");
    }

    #[test]
    fn incomplete_is_complete_minus_removed() {
        for s in build_samples(&days(300), 0.4, 2).unwrap() {
            let rebuilt: Vec<_> = s
                .complete
                .activities
                .iter()
                .enumerate()
                .filter(|(i, _)| !s.removed_positions.contains(i))
                .map(|(_, a)| a.clone())
                .collect();
            assert_eq!(rebuilt, s.incomplete.activities);
        }
    }

    #[test]
    fn masking_is_pure() {
        let ds = days(50);
        assert_eq!(build_samples(&ds, 0.3, 8).unwrap(), build_samples(&ds, 0.3, 8).unwrap());
    }

    #[test]
    fn split_partitions() {
        let items: Vec<usize> = (0..101).collect();
        let (a, b, c) = split_samples(&items, 3);
        assert_eq!((a.len(), b.len(), c.len()), (80, 10, 11));
        let mut all: Vec<usize> = a.into_iter().chain(b).chain(c).collect();
        all.sort();
        assert_eq!(all, items);
    }
}

use rand::Rng;

use super::network::{Model, NO_INSERT, SLOT_CLASSES};
use crate::autograd::{Tape, Var};
use crate::data::align::check_anchors;
use crate::data::sequence::{Activity, DaySequence, RecoverySample};
use crate::data::ActivityCategory;
use crate::error::{Error, Result};
use crate::layers::Dropout;
use crate::tensor::Tensor;

/// Labels each slot of the partial sequence still needs. Slot `s` lies
/// between partial tokens `s-1` and `s`; an empty list means `NO_INSERT`.
pub fn insertion_targets(
    incomplete: &[ActivityCategory],
    complete: &[ActivityCategory],
    anchors: &[usize],
) -> Result<Vec<Vec<ActivityCategory>>> {
    check_anchors(incomplete, complete, anchors)?;
    let mut out = Vec::with_capacity(incomplete.len() + 1);
    let mut from = 0;
    for &a in anchors.iter().chain(std::iter::once(&complete.len())) {
        out.push(complete[from..a].to_vec());
        from = a + 1;
    }
    Ok(out)
}

/// Row `s` is the uniform distribution over slot `s`'s required labels
/// (counted with multiplicity), or the `NO_INSERT` one-hot.
pub fn target_distribution(targets: &[Vec<ActivityCategory>]) -> Tensor {
    let mut t = Tensor::zeros(&[targets.len(), SLOT_CLASSES]);
    for (s, labels) in targets.iter().enumerate() {
        let row = t.row_mut(s);
        if labels.is_empty() {
            row[NO_INSERT] = 1.0;
        } else {
            let w = 1.0 / labels.len() as f64;
            for l in labels {
                row[l.index()] += w;
            }
        }
    }
    t
}

/// A decoder state paired with its per-slot targets.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub state: DaySequence,
    pub targets: Vec<Vec<ActivityCategory>>,
}

impl TrainingExample {
    /// The sample's incomplete sequence as the state.
    pub fn from_sample(sample: &RecoverySample) -> Result<Self> {
        Self::with_reinserted(sample, &[])
    }

    /// The incomplete sequence with the listed removed positions put back as
    /// decoder insertions (labels only, unknown covariates unobserved), which
    /// is what a later decoding round sees.
    pub fn with_reinserted(sample: &RecoverySample, reinsert: &[usize]) -> Result<Self> {
        let complete = &sample.complete;
        let mut activities = Vec::with_capacity(complete.len());
        let mut anchors = Vec::with_capacity(complete.len());
        for (i, a) in complete.activities.iter().enumerate() {
            if sample.removed_positions.binary_search(&i).is_err() {
                activities.push(a.clone());
                anchors.push(i);
            } else if reinsert.contains(&i) {
                activities.push(Activity::unobserved(a.label));
                anchors.push(i);
            }
        }
        let state = complete.with_activities(activities);
        let targets = insertion_targets(&state.labels(), &complete.labels(), &anchors)?;
        Ok(Self { state, targets })
    }

    /// With probability `partial_prob` (and at least one removal), puts back
    /// a random subset of the removed activities, each kept with a
    /// per-example rate drawn uniformly from (0, 1).
    pub fn sample<R: Rng>(sample: &RecoverySample, partial_prob: f64, rng: &mut R) -> Result<Self> {
        if sample.removed_positions.is_empty() || rng.gen::<f64>() >= partial_prob {
            return Self::from_sample(sample);
        }
        let rate = rng.gen::<f64>();
        let chosen: Vec<usize> = sample
            .removed_positions
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() < rate)
            .collect();
        Self::with_reinserted(sample, &chosen)
    }
}

/// Mean over slots, then mean over the batch, of the soft cross entropy
/// between slot distributions and target distributions. `pad_to` pads every
/// state to that many positions; padding never enters the loss.
pub fn insertion_loss(
    model: &Model,
    tape: &mut Tape,
    examples: &[&TrainingExample],
    pad_to: Option<usize>,
    dropout: &mut Dropout,
) -> Result<Var> {
    let states: Vec<&DaySequence> = examples.iter().map(|e| &e.state).collect();
    let fwd = model.forward(tape, &states, pad_to, dropout)?;
    let total: usize = fwd.slots.iter().map(|s| s.len()).sum();
    let mut targets = Tensor::zeros(&[total, SLOT_CLASSES]);
    let mut weights = vec![0.0; total];
    let batch = examples.len() as f64;
    for (ex, range) in examples.iter().zip(&fwd.slots) {
        if ex.targets.len() != range.len() {
            return Err(Error::Contract(format!(
                "{} slot targets for {} slots",
                ex.targets.len(),
                range.len()
            )));
        }
        let t = target_distribution(&ex.targets);
        for (k, r) in range.clone().enumerate() {
            targets.row_mut(r).copy_from_slice(t.row(k));
            weights[r] = 1.0 / (range.len() as f64 * batch);
        }
    }
    tape.soft_cross_entropy(fwd.logits, targets, weights)
}

/// Per-example losses, without gradients.
pub fn per_example_losses(
    model: &Model,
    examples: &[&TrainingExample],
    pad_to: Option<usize>,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new(&model.store);
    let states: Vec<&DaySequence> = examples.iter().map(|e| &e.state).collect();
    let fwd = model.forward(&mut tape, &states, pad_to, &mut Dropout::Off)?;
    let probs = tape.softmax(fwd.logits, 1)?;
    let p = tape.value(probs);
    Ok(examples
        .iter()
        .zip(&fwd.slots)
        .map(|(ex, range)| {
            let t = target_distribution(&ex.targets);
            let mut loss = 0.0;
            for (k, r) in range.clone().enumerate() {
                for c in 0..SLOT_CLASSES {
                    let tk = t.get(k, c);
                    if tk > 0.0 {
                        loss -= tk * p.get(r, c).ln();
                    }
                }
            }
            loss / range.len() as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityCategory as A;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: A = A::HomeActivity;
    const W: A = A::WorkForPay;

    #[test]
    fn hand_aligned_targets() {
        let t = insertion_targets(&[H, H], &[H, W, H], &[0, 2]).unwrap();
        assert_eq!(t, vec![vec![], vec![W], vec![]]);
        let t = insertion_targets(&[H, W], &[H, W], &[0, 1]).unwrap();
        assert!(t.iter().all(|s| s.is_empty()));
        let t = insertion_targets(&[], &[H, W], &[]).unwrap();
        assert_eq!(t, vec![vec![H, W]]);
        assert!(insertion_targets(&[H, H], &[H, W, H], &[0, 1]).is_err());
    }

    #[test]
    fn target_rows_are_distributions() {
        let t = target_distribution(&[vec![], vec![H, W], vec![W, W]]);
        assert_eq!(t.get(0, NO_INSERT), 1.0);
        assert_eq!(t.get(1, H.index()), 0.5);
        assert_eq!(t.get(1, W.index()), 0.5);
        assert_eq!(t.get(2, W.index()), 1.0);
    }

    fn sample() -> RecoverySample {
        let mut day = super::super::network::tests::day(&[H, W, A::EatOut, W, H]);
        day.weekday = 3;
        RecoverySample::new(day, vec![1, 2, 3]).unwrap()
    }

    #[test]
    fn reinserted_states_are_unobserved_and_targets_shrink() {
        let s = sample();
        let ex = TrainingExample::with_reinserted(&s, &[2]).unwrap();
        assert_eq!(ex.state.labels(), vec![H, A::EatOut, H]);
        assert!(!ex.state.activities[1].observed);
        assert_eq!(ex.targets, vec![vec![], vec![W], vec![W], vec![]]);
        let base = TrainingExample::from_sample(&s).unwrap();
        assert_eq!(base.state, s.incomplete);
        assert_eq!(base.targets, vec![vec![], vec![W, A::EatOut, W], vec![]]);
    }

    #[test]
    fn sampled_states_stay_between_incomplete_and_complete() {
        let s = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen_partial = false;
        for _ in 0..200 {
            let ex = TrainingExample::sample(&s, 0.5, &mut rng).unwrap();
            let n = ex.state.len();
            assert!((2..=5).contains(&n));
            let missing: usize = ex.targets.iter().map(|t| t.len()).sum();
            assert_eq!(n + missing, 5);
            seen_partial |= n > 2 && n < 5;
        }
        assert!(seen_partial);
    }

    fn small(use_vsn: bool) -> Model {
        Model::new(crate::model::ModelConfig {
            d_m: 8,
            heads: 2,
            d_attn: 4,
            d_val: 4,
            n_layers: 1,
            use_vsn,
            ..Default::default()
        })
        .unwrap()
    }

    fn uniform_predictor(use_vsn: bool) -> Model {
        let mut m = small(use_vsn);
        let names: Vec<String> = ["slot.out.weight", "slot.out.bias"].map(String::from).to_vec();
        for p in m.store.iter_mut().filter(|p| names.contains(&p.name)) {
            p.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        m
    }

    #[test]
    fn uniform_predictor_loss_is_ln_ten() {
        let m = uniform_predictor(true);
        let s = sample();
        let ex = TrainingExample::from_sample(&s).unwrap();
        let two = TrainingExample {
            state: s.incomplete.clone(),
            targets: vec![vec![], vec![H, W], vec![]],
        };
        for e in [&ex, &two] {
            let mut tape = Tape::new(&m.store);
            let l = insertion_loss(&m, &mut tape, &[e], None, &mut Dropout::Off).unwrap();
            assert!((tape.value(l).data()[0] - 10f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_leaves_per_example_losses_unchanged() {
        let m = small(true);
        let s = sample();
        let a = TrainingExample::from_sample(&s).unwrap();
        let b = TrainingExample::with_reinserted(&s, &[1, 3]).unwrap();
        let tight = per_example_losses(&m, &[&a, &b], None).unwrap();
        let padded = per_example_losses(&m, &[&a, &b], Some(12)).unwrap();
        for (x, y) in tight.iter().zip(&padded) {
            assert!((x - y).abs() < 1e-9);
        }
        let mut tape = Tape::new(&m.store);
        let l = insertion_loss(&m, &mut tape, &[&a, &b], Some(12), &mut Dropout::Off).unwrap();
        let mean = (tight[0] + tight[1]) / 2.0;
        assert!((tape.value(l).data()[0] - mean).abs() < 1e-9);
    }

    #[test]
    fn insertion_loss_gradients() {
        use crate::autograd::ParamId;
        use crate::gradcheck::grad_check;
        for use_vsn in [true, false] {
            let mut m = small(use_vsn);
            let s = RecoverySample::new(
                super::super::network::tests::day(&[H, A::GoShopping, W, H]),
                vec![2],
            )
            .unwrap();
            let ex = TrainingExample::from_sample(&s).unwrap();
            assert_eq!(ex.state.len(), 3);
            let ids: Vec<ParamId> = m.store.iter().map(|(id, _)| id).collect();
            let model = m.clone();
            let report = grad_check("insertion_loss", &mut m.store, &ids, 1e-5, |t| {
                insertion_loss(&model, t, &[&ex], None, &mut Dropout::Off)
            })
            .unwrap();
            assert!(report.max_rel_error < 1e-4, "{report:?}");
        }
    }
}

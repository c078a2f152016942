//! Recovery metrics: position-anchored and order-independent precision,
//! recall and F1, activity histograms, insertion patterns and transition
//! tables.

mod tables;
mod transitions;

pub use tables::{
    activity_distribution, insertion_pattern_topk, inserted_labels, write_patterns_csv, DistributionTable,
    PatternCount,
};
pub use transitions::{
    compare_transitions, transition_analysis, CellVerdict, Role, TransitionComparison,
    TransitionTable, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::data::align::align_subsequence;
use crate::data::sequence::{DaySequence, RecoverySample};
use crate::data::ActivityCategory;
use crate::error::{Error, Result};

const N: usize = ActivityCategory::COUNT;

/// `num / den`, or 0 when `den` is 0.
pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, or 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision, recall and F1 from aggregate counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(correct: usize, inserted: usize, removed: usize) -> Self {
        let precision = ratio(correct, inserted);
        let recall = ratio(correct, removed);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub total_inserted: usize,
    pub total_removed: usize,
    pub avg_daily_hypothesis: f64,
    pub avg_daily_target: f64,
    pub avg_correct_location_pct: f64,
    pub avg_correct_location_pct_missing_only: f64,
    pub correct_inserted: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub oi_correct: usize,
    pub oi_precision: f64,
    pub oi_recall: f64,
    pub oi_f1: f64,
}

/// Per-sample slot buckets: labels the hypothesis inserted and labels the
/// target removed, both indexed by slot of the incomplete source.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotBuckets {
    pub inserted: Vec<Vec<ActivityCategory>>,
    pub removed: Vec<Vec<ActivityCategory>>,
}

fn buckets(source: &[ActivityCategory], full: &[ActivityCategory]) -> Result<Vec<Vec<ActivityCategory>>> {
    let anchors = align_subsequence(source, full)
        .map_err(|e| Error::Contract(format!("hypothesis does not preserve its input: {e}")))?;
    let mut out = Vec::with_capacity(source.len() + 1);
    let mut from = 0;
    for &a in anchors.iter().chain(std::iter::once(&full.len())) {
        out.push(full[from..a].to_vec());
        from = a + 1;
    }
    Ok(out)
}

impl SlotBuckets {
    pub fn new(sample: &RecoverySample, hypothesis: &DaySequence) -> Result<Self> {
        let source = sample.incomplete.labels();
        Ok(Self {
            inserted: buckets(&source, &hypothesis.labels())?,
            removed: buckets(&source, &sample.complete.labels())?,
        })
    }

    pub fn n_inserted(&self) -> usize {
        self.inserted.iter().map(Vec::len).sum()
    }

    pub fn n_removed(&self) -> usize {
        self.removed.iter().map(Vec::len).sum()
    }

    /// Insertions in a slot that also lost activities, capped per slot.
    pub fn location_correct(&self) -> usize {
        self.inserted
            .iter()
            .zip(&self.removed)
            .map(|(i, r)| i.len().min(r.len()))
            .sum()
    }

    /// Insertions matching a removed activity in both slot and label.
    pub fn label_correct(&self) -> usize {
        self.inserted
            .iter()
            .zip(&self.removed)
            .map(|(i, r)| {
                let (ci, cr) = (histogram(i), histogram(r));
                (0..N).map(|k| ci[k].min(cr[k])).sum::<usize>()
            })
            .sum()
    }

    /// Location-correct share of insertions; 1 when nothing was inserted
    /// and nothing was missing, 0 when nothing was inserted but something
    /// was.
    pub fn location_pct(&self) -> f64 {
        match (self.n_inserted(), self.n_removed()) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (n, _) => self.location_correct() as f64 / n as f64,
        }
    }
}

pub(crate) fn histogram(labels: &[ActivityCategory]) -> [usize; N] {
    let mut h = [0; N];
    for l in labels {
        h[l.index()] += 1;
    }
    h
}

fn check_aligned(samples: &[RecoverySample], hyps: &[DaySequence]) -> Result<()> {
    if samples.len() != hyps.len() {
        return Err(Error::Contract(format!(
            "{} samples but {} hypotheses",
            samples.len(),
            hyps.len()
        )));
    }
    Ok(())
}

/// Mean token count per sequence.
pub fn average_daily_activities<'a>(seqs: impl IntoIterator<Item = &'a DaySequence>) -> Result<f64> {
    let (mut n, mut total) = (0usize, 0usize);
    for s in seqs {
        n += 1;
        total += s.len();
    }
    if n == 0 {
        return Err(Error::UndefinedInput("average over an empty set".into()));
    }
    Ok(total as f64 / n as f64)
}

/// Position-anchored block: counts and location percentages.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionMetrics {
    pub total_inserted: usize,
    pub total_removed: usize,
    pub correct_inserted: usize,
    pub scores: Scores,
    pub avg_correct_location_pct: f64,
    pub avg_correct_location_pct_missing_only: f64,
}

pub fn position_metrics(samples: &[RecoverySample], hyps: &[DaySequence]) -> Result<PositionMetrics> {
    check_aligned(samples, hyps)?;
    let (mut inserted, mut removed, mut correct) = (0, 0, 0);
    let (mut pct_sum, mut pct_missing_sum, mut n_missing) = (0.0, 0.0, 0usize);
    for (s, h) in samples.iter().zip(hyps) {
        let b = SlotBuckets::new(s, h)?;
        inserted += b.n_inserted();
        removed += b.n_removed();
        correct += b.label_correct();
        let pct = b.location_pct();
        pct_sum += pct;
        if b.n_removed() > 0 {
            pct_missing_sum += pct;
            n_missing += 1;
        }
    }
    Ok(PositionMetrics {
        total_inserted: inserted,
        total_removed: removed,
        correct_inserted: correct,
        scores: Scores::from_counts(correct, inserted, removed),
        avg_correct_location_pct: if samples.is_empty() { 0.0 } else { pct_sum / samples.len() as f64 },
        avg_correct_location_pct_missing_only: if n_missing == 0 {
            0.0
        } else {
            pct_missing_sum / n_missing as f64
        },
    })
}

/// Order-independent block: label multisets over the whole dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderIndependentMetrics {
    pub inserted: [usize; N],
    pub removed: [usize; N],
    pub correct: usize,
    pub scores: Scores,
}

pub fn order_independent_metrics(
    samples: &[RecoverySample],
    hyps: &[DaySequence],
) -> Result<OrderIndependentMetrics> {
    check_aligned(samples, hyps)?;
    let (mut ins, mut rem) = ([0; N], [0; N]);
    for (s, h) in samples.iter().zip(hyps) {
        let b = SlotBuckets::new(s, h)?;
        for (k, (i, r)) in histogram(&b.inserted.concat())
            .iter()
            .zip(histogram(&b.removed.concat()))
            .enumerate()
        {
            ins[k] += i;
            rem[k] += r;
        }
    }
    let correct = (0..N).map(|k| ins[k].min(rem[k])).sum();
    Ok(OrderIndependentMetrics {
        inserted: ins,
        removed: rem,
        correct,
        scores: Scores::from_counts(correct, ins.iter().sum(), rem.iter().sum()),
    })
}

pub fn evaluate(samples: &[RecoverySample], hyps: &[DaySequence]) -> Result<MetricsReport> {
    let pos = position_metrics(samples, hyps)?;
    let oi = order_independent_metrics(samples, hyps)?;
    Ok(MetricsReport {
        samples: samples.len(),
        total_inserted: pos.total_inserted,
        total_removed: pos.total_removed,
        avg_daily_hypothesis: average_daily_activities(hyps)?,
        avg_daily_target: average_daily_activities(samples.iter().map(|s| &s.complete))?,
        avg_correct_location_pct: pos.avg_correct_location_pct,
        avg_correct_location_pct_missing_only: pos.avg_correct_location_pct_missing_only,
        correct_inserted: pos.correct_inserted,
        precision: pos.scores.precision,
        recall: pos.scores.recall,
        f1: pos.scores.f1,
        oi_correct: oi.correct,
        oi_precision: oi.scores.precision,
        oi_recall: oi.scores.recall,
        oi_f1: oi.scores.f1,
    })
}

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{histogram, SlotBuckets, N};
use crate::data::sequence::{DaySequence, RecoverySample};
use crate::data::ActivityCategory;
use crate::error::{Error, Result};

/// Label histogram over a set of sequences.
pub fn activity_distribution<'a>(seqs: impl IntoIterator<Item = &'a DaySequence>) -> [usize; N] {
    let mut h = [0; N];
    for s in seqs {
        for (k, c) in histogram(&s.labels()).iter().enumerate() {
            h[k] += c;
        }
    }
    h
}

/// Named histograms emitted side by side, one column per set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub columns: Vec<(String, [usize; N])>,
}

impl DistributionTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["activity".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        out.write_record(&header).map_err(csv_err)?;
        for label in ActivityCategory::ALL {
            let mut row = vec![label.name().to_string()];
            row.extend(self.columns.iter().map(|(_, h)| h[label.index()].to_string()));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Labels the hypothesis added, in sequence order.
pub fn inserted_labels(sample: &RecoverySample, hypothesis: &DaySequence) -> Result<Vec<ActivityCategory>> {
    Ok(SlotBuckets::new(sample, hypothesis)?.inserted.concat())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCount {
    pub pattern: Vec<ActivityCategory>,
    pub count: usize,
}

impl PatternCount {
    pub fn label(&self) -> String {
        if self.pattern.is_empty() {
            "(none)".into()
        } else {
            self.pattern
                .iter()
                .map(|a| a.name())
                .collect::<Vec<_>>()
                .join(">")
        }
    }
}

/// The `k` most frequent per-sample insertion patterns (ordered tuples of
/// inserted labels, the empty tuple included). Ties go to the pattern whose
/// label names sort first.
pub fn insertion_pattern_topk(
    samples: &[RecoverySample],
    hyps: &[DaySequence],
    k: usize,
) -> Result<Vec<PatternCount>> {
    if samples.len() != hyps.len() {
        return Err(Error::Contract("samples and hypotheses differ in length".into()));
    }
    let mut counts: HashMap<Vec<ActivityCategory>, usize> = HashMap::new();
    for (s, h) in samples.iter().zip(hyps) {
        *counts.entry(inserted_labels(s, h)?).or_default() += 1;
    }
    let mut ranked: Vec<PatternCount> = counts
        .into_iter()
        .map(|(pattern, count)| PatternCount { pattern, count })
        .collect();
    let key = |p: &PatternCount| p.pattern.iter().map(|a| a.name()).collect::<Vec<_>>();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| key(a).cmp(&key(b))));
    ranked.truncate(k);
    Ok(ranked)
}

/// CSV with columns `rank,pattern,count`.
pub fn write_patterns_csv<W: Write>(patterns: &[PatternCount], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "pattern", "count"]).map_err(csv_err)?;
    for (i, p) in patterns.iter().enumerate() {
        out.write_record([(i + 1).to_string(), p.label(), p.count.to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::{sample, seq};
    use super::*;
    use crate::data::ActivityCategory as A;

    const H: A = A::HomeActivity;
    const W: A = A::WorkForPay;

    #[test]
    fn histogram_cases() {
        assert_eq!(activity_distribution(&[] as &[DaySequence]), [0; N]);
        let h = activity_distribution(&[seq(&[H, W, H])]);
        assert_eq!(h[H.index()], 2);
        assert_eq!(h[W.index()], 1);
        let many = [seq(&[H, W]), seq(&[A::EatOut; 4])];
        assert_eq!(activity_distribution(&many).iter().sum::<usize>(), 6);
    }

    #[test]
    fn no_insertions_collapse_to_the_empty_pattern() {
        let samples = vec![sample(&[H, W, H], vec![1]), sample(&[H], vec![])];
        let hyps: Vec<_> = samples.iter().map(|s| s.incomplete.clone()).collect();
        let top = insertion_pattern_topk(&samples, &hyps, 20).unwrap();
        assert_eq!(top, vec![PatternCount { pattern: vec![], count: 2 }]);
    }

    #[test]
    fn ranking_by_count_then_names() {
        let s = sample(&[H, H], vec![]);
        let mut hyps = vec![seq(&[H, W, H]); 3];
        hyps.extend(vec![seq(&[H, W, H, H]); 2]);
        hyps.push(seq(&[H, A::EatOut, H]));
        hyps.push(seq(&[H, A::Recreation, H]));
        let samples = vec![s; hyps.len()];
        let top = insertion_pattern_topk(&samples, &hyps, 20).unwrap();
        assert_eq!(top[0], PatternCount { pattern: vec![W], count: 3 });
        assert_eq!(top[1], PatternCount { pattern: vec![W, H], count: 2 });
        assert_eq!(top[2].pattern, vec![A::EatOut]);
        assert_eq!(top[3].pattern, vec![A::Recreation]);
        assert_eq!(insertion_pattern_topk(&samples, &hyps, 1).unwrap().len(), 1);
    }

    #[test]
    fn csv_headers_are_fixed() {
        let t = DistributionTable {
            columns: vec![("target".into(), [1; N]), ("vsnit".into(), [2; N])],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("activity,target,vsnit\nGoShopping,1,2\n"));
        let mut buf = Vec::new();
        write_patterns_csv(&[PatternCount { pattern: vec![], count: 4 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "rank,pattern,count\n1,(none),4\n");
    }
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::tables::csv_err;
use super::N;
use crate::data::align::align_subsequence;
use crate::data::sequence::{DaySequence, RecoverySample};
use crate::data::ActivityCategory;
use crate::error::{Error, Result};

pub type Grid = [[usize; N]; N];

/// Transition counts from removal (`broken`) and from the model's
/// insertions (`inserted`).
///
/// `broken` and `inserted` count adjacent pairs `first -> second` as the
/// per-sample multiset difference against the incomplete source. The role
/// grids attribute pairs to the changed activity: `*_as_first[a][b]` counts
/// `a -> b` where `a` was removed or inserted, `*_as_second[a][b]` counts
/// `b -> a` where `a` was.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub broken: Grid,
    pub inserted: Grid,
    pub broken_as_first: Grid,
    pub broken_as_second: Grid,
    pub inserted_as_first: Grid,
    pub inserted_as_second: Grid,
}

fn pairs(labels: &[ActivityCategory]) -> Grid {
    let mut g = [[0; N]; N];
    for w in labels.windows(2) {
        g[w[0].index()][w[1].index()] += 1;
    }
    g
}

fn add_difference(into: &mut Grid, more: &Grid, less: &Grid) {
    for a in 0..N {
        for b in 0..N {
            into[a][b] += more[a][b].saturating_sub(less[a][b]);
        }
    }
}

// Adds pairs of `full` touching a token not anchored to `source`.
fn add_roles(
    first: &mut Grid,
    second: &mut Grid,
    source: &[ActivityCategory],
    full: &[ActivityCategory],
) -> Result<()> {
    let anchors = align_subsequence(source, full)
        .map_err(|e| Error::Contract(format!("sequence does not contain its source: {e}")))?;
    let mut changed = vec![true; full.len()];
    for a in anchors {
        changed[a] = false;
    }
    for i in 1..full.len() {
        let (x, y) = (full[i - 1].index(), full[i].index());
        if changed[i - 1] {
            first[x][y] += 1;
        }
        if changed[i] {
            second[y][x] += 1;
        }
    }
    Ok(())
}

pub fn transition_analysis(samples: &[RecoverySample], hyps: &[DaySequence]) -> Result<TransitionTable> {
    if samples.len() != hyps.len() {
        return Err(Error::Contract("samples and hypotheses differ in length".into()));
    }
    let mut t = TransitionTable::default();
    for (s, h) in samples.iter().zip(hyps) {
        let (src, full, hyp) = (s.incomplete.labels(), s.complete.labels(), h.labels());
        let p_src = pairs(&src);
        add_difference(&mut t.broken, &pairs(&full), &p_src);
        add_difference(&mut t.inserted, &pairs(&hyp), &p_src);
        add_roles(&mut t.broken_as_first, &mut t.broken_as_second, &src, &full)?;
        add_roles(&mut t.inserted_as_first, &mut t.inserted_as_second, &src, &hyp)?;
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The changed activity follows its neighbour.
    Second,
    /// The changed activity precedes its neighbour.
    First,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    A,
    B,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub role: Role,
    pub activity: ActivityCategory,
    pub neighbour: ActivityCategory,
    pub broken: usize,
    pub inserted_a: usize,
    pub inserted_b: usize,
    pub verdict: Verdict,
}

/// Cell-by-cell comparison of two models over both roles (162 cells).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionComparison {
    pub cells: Vec<CellVerdict>,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

/// The model whose inserted count is closer to the broken count wins a
/// cell; equal distances tie.
pub fn compare_transitions(a: &TransitionTable, b: &TransitionTable) -> Result<TransitionComparison> {
    if a.broken_as_first != b.broken_as_first || a.broken_as_second != b.broken_as_second {
        return Err(Error::Contract(
            "transition tables come from different samples".into(),
        ));
    }
    let mut cells = Vec::with_capacity(2 * N * N);
    for role in [Role::Second, Role::First] {
        let (target, ia, ib) = match role {
            Role::Second => (&a.broken_as_second, &a.inserted_as_second, &b.inserted_as_second),
            Role::First => (&a.broken_as_first, &a.inserted_as_first, &b.inserted_as_first),
        };
        for x in 0..N {
            for y in 0..N {
                let t = target[x][y];
                let (da, db) = (ia[x][y].abs_diff(t), ib[x][y].abs_diff(t));
                let verdict = match da.cmp(&db) {
                    std::cmp::Ordering::Less => Verdict::A,
                    std::cmp::Ordering::Greater => Verdict::B,
                    std::cmp::Ordering::Equal => Verdict::Tie,
                };
                cells.push(CellVerdict {
                    role,
                    activity: ActivityCategory::ALL[x],
                    neighbour: ActivityCategory::ALL[y],
                    broken: t,
                    inserted_a: ia[x][y],
                    inserted_b: ib[x][y],
                    verdict,
                });
            }
        }
    }
    let count = |v: Verdict| cells.iter().filter(|c| c.verdict == v).count();
    Ok(TransitionComparison {
        wins_a: count(Verdict::A),
        wins_b: count(Verdict::B),
        ties: count(Verdict::Tie),
        cells,
    })
}

impl TransitionTable {
    /// Long-format CSV: `table,first,second,count` for every cell of the
    /// `broken` and `inserted` grids, then the role grids as
    /// `broken_as_first` etc. with `first`/`second` being the pair order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["table", "first", "second", "count"]).map_err(csv_err)?;
        let name = |i: usize| ActivityCategory::ALL[i].name();
        let grids: [(&str, &Grid, bool); 6] = [
            ("broken", &self.broken, false),
            ("inserted", &self.inserted, false),
            ("broken_as_first", &self.broken_as_first, false),
            ("broken_as_second", &self.broken_as_second, true),
            ("inserted_as_first", &self.inserted_as_first, false),
            ("inserted_as_second", &self.inserted_as_second, true),
        ];
        for (table, g, swapped) in grids {
            for x in 0..N {
                for y in 0..N {
                    let (f, s) = if swapped { (y, x) } else { (x, y) };
                    out.write_record([table, name(f), name(s), &g[x][y].to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

impl TransitionComparison {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["role", "activity", "neighbour", "broken", "inserted_a", "inserted_b", "verdict"])
            .map_err(csv_err)?;
        for c in &self.cells {
            let role = match c.role {
                Role::First => "first",
                Role::Second => "second",
            };
            let verdict = match c.verdict {
                Verdict::A => "a",
                Verdict::B => "b",
                Verdict::Tie => "tie",
            };
            out.write_record([
                role,
                c.activity.name(),
                c.neighbour.name(),
                &c.broken.to_string(),
                &c.inserted_a.to_string(),
                &c.inserted_b.to_string(),
                verdict,
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

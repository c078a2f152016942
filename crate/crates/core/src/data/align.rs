use super::activity::ActivityCategory;
use crate::error::{Error, Result};

/// Leftmost-greedy subsequence alignment: `anchors[i]` is the smallest index
/// in `complete` after `anchors[i-1]` whose label equals `incomplete[i]`.
pub fn align_subsequence(
    incomplete: &[ActivityCategory],
    complete: &[ActivityCategory],
) -> Result<Vec<usize>> {
    let mut anchors = Vec::with_capacity(incomplete.len());
    let mut next = 0;
    for (i, label) in incomplete.iter().enumerate() {
        let pos = complete[next.min(complete.len())..]
            .iter()
            .position(|c| c == label)
            .map(|p| p + next)
            .ok_or_else(|| {
                Error::Alignment(format!(
                    "token {i} ({label}) has no match after position {next}"
                ))
            })?;
        anchors.push(pos);
        next = pos + 1;
    }
    Ok(anchors)
}

pub fn is_subsequence(short: &[ActivityCategory], long: &[ActivityCategory]) -> bool {
    align_subsequence(short, long).is_ok()
}

/// Checks that `anchors` is a valid alignment of `incomplete` into `complete`.
pub fn check_anchors(
    incomplete: &[ActivityCategory],
    complete: &[ActivityCategory],
    anchors: &[usize],
) -> Result<()> {
    if anchors.len() != incomplete.len() {
        return Err(Error::Alignment(format!(
            "{} anchors for {} tokens",
            anchors.len(),
            incomplete.len()
        )));
    }
    for (i, &a) in anchors.iter().enumerate() {
        if a >= complete.len() || complete[a] != incomplete[i] {
            return Err(Error::Alignment(format!("anchor {i} -> {a} does not match")));
        }
        if i > 0 && anchors[i - 1] >= a {
            return Err(Error::Alignment("anchors not strictly increasing".into()));
        }
    }
    Ok(())
}

//! Closed toeprint-id intervals and the ≤k covering used for both per-tile
//! interval lists and query sweeps.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl Interval {
    pub fn new(lo: u32, hi: u32) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    /// Number of ids covered.
    pub fn len(&self) -> u64 {
        u64::from(self.hi - self.lo) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: u32) -> bool {
        (self.lo..=self.hi).contains(&id)
    }
}

pub fn covered_len(intervals: &[Interval]) -> u64 {
    intervals.iter().map(Interval::len).sum()
}

/// Sorts and merges overlapping or adjacent intervals.
pub fn normalize(mut intervals: Vec<Interval>) -> Vec<Interval> {
    intervals.sort_unstable();
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(last) if u64::from(iv.lo) <= u64::from(last.hi) + 1 => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Maximal runs of consecutive ids in an ascending id list.
pub fn runs_of(ids: &[u32]) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for &id in ids {
        match out.last_mut() {
            Some(last) if u64::from(id) <= u64::from(last.hi) + 1 => last.hi = last.hi.max(id),
            _ => out.push(Interval::new(id, id)),
        }
    }
    out
}

/// Covers normalized `runs` with at most `k` intervals by cutting only at the
/// `k - 1` widest gaps, which minimizes the total covered length. Equal gaps
/// are cut left to right.
pub fn cover_at_most(runs: &[Interval], k: usize) -> Vec<Interval> {
    if runs.len() <= k {
        return runs.to_vec();
    }
    if k == 0 {
        return Vec::new();
    }
    let mut gaps: Vec<(u32, usize)> = runs.windows(2).enumerate().map(|(i, w)| (w[1].lo - w[0].hi - 1, i)).collect();
    gaps.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps[..k - 1].iter().map(|&(_, i)| i).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(runs.len() - 1)) {
        out.push(Interval::new(runs[start].lo, runs[c].hi));
        start = c + 1;
    }
    out
}

/// Up to `k` sweeps covering the union of `intervals`.
pub fn compute_sweeps(intervals: Vec<Interval>, k: usize) -> Result<Vec<Interval>> {
    if k < 1 {
        return Err(Error::contract("number of sweeps must be >= 1"));
    }
    Ok(cover_at_most(&normalize(intervals), k))
}

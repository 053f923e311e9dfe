//! Exact nearest-neighbour lists under inner-product similarity.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::embedding::{dot, EmbeddingSet};
use crate::error::{Error, Result};

/// Per-sample neighbour lists. `lists[i][0] == i`; the rest are ordered by
/// non-increasing inner product with sample `i`, ties broken by ascending
/// index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborLists {
    lists: Vec<Vec<usize>>,
}

impl NeighborLists {
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.lists.first().map_or(0, Vec::len)
    }

    pub fn list(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    /// 1-based position of `j` in sample `i`'s list.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.lists[i].iter().position(|&x| x == j).map(|p| p + 1)
    }
}

/// Descending similarity, then ascending index.
fn neighbor_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Builds top-`depth` lists for every sample (self included).
pub fn build_nn_lists(set: &EmbeddingSet, depth: usize) -> Result<NeighborLists> {
    let n = set.len();
    if depth == 0 || depth > n {
        return Err(Error::Config(format!(
            "neighbour depth {depth} must be between 1 and the sample count {n}"
        )));
    }
    let lists = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = set.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dot(xi, set.row(j)), j)).collect();
            let keep = depth - 1;
            if keep > 0 && keep < cand.len() {
                cand.select_nth_unstable_by(keep - 1, neighbor_order);
            }
            cand.truncate(keep);
            cand.sort_unstable_by(neighbor_order);
            std::iter::once(i).chain(cand.into_iter().map(|(_, j)| j)).collect()
        })
        .collect();
    Ok(NeighborLists { lists })
}

/// Positive set size `k` and the 1-based inclusive negative window
/// `[neg_start, neg_end]` of each neighbour list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborWindow {
    pub k: usize,
    pub neg_start: usize,
    pub neg_end: usize,
}

impl NeighborWindow {
    pub fn new(k: usize, neg_start: usize, neg_end: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if neg_start <= k {
            return Err(Error::Config(format!(
                "negative window start {neg_start} must exceed K = {k}"
            )));
        }
        if neg_end < neg_start {
            return Err(Error::Config(format!(
                "negative window end {neg_end} is before its start {neg_start}"
            )));
        }
        Ok(Self { k, neg_start, neg_end })
    }

    /// List depth needed for `n` samples: the window end clamped to `n`.
    pub fn depth_for(&self, n: usize) -> usize {
        self.neg_end.min(n)
    }

    /// Fails when `n` samples cannot supply a single negative.
    pub fn check_fits(&self, n: usize) -> Result<()> {
        if self.neg_start > n {
            return Err(Error::Config(format!(
                "negative window starts at rank {} but there are only {n} samples",
                self.neg_start
            )));
        }
        Ok(())
    }

    /// `lists[i][1..=K]`, with `K` clamped to the list length.
    pub fn positives<'a>(&self, nn: &'a NeighborLists, i: usize) -> &'a [usize] {
        let list = nn.list(i);
        &list[..self.k.min(list.len())]
    }

    /// `lists[i][N1..=N2]`, with `N2` clamped to the list length. Empty when
    /// the list is shorter than `N1`.
    pub fn negatives<'a>(&self, nn: &'a NeighborLists, i: usize) -> &'a [usize] {
        let list = nn.list(i);
        let end = self.neg_end.min(list.len());
        let start = (self.neg_start - 1).min(end);
        &list[start..end]
    }
}

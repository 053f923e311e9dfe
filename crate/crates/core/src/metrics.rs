//! Pairwise precision and recall of a partition against class labels.
//!
//! Precision is the fraction of same-cluster pairs that share a class;
//! recall is the fraction of same-class pairs that share a cluster. With no
//! same-cluster pairs precision is 1, and with no same-class pairs recall
//! is 1, so every partition has a defined operating point.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::agglomerative::{Clustering, Dendrogram};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub same_cluster: u64,
    pub same_class: u64,
    pub same_both: u64,
}

impl PairCounts {
    pub fn precision(&self) -> f64 {
        if self.same_cluster == 0 {
            1.0
        } else {
            self.same_both as f64 / self.same_cluster as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.same_class == 0 {
            1.0
        } else {
            self.same_both as f64 / self.same_class as f64
        }
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pair counts by cross-tabulating cluster and class.
pub fn pair_counts(c: &Clustering, labels: &[i64]) -> Result<PairCounts> {
    if c.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} assignments but {} labels",
            c.len(),
            labels.len()
        )));
    }
    let mut cluster_sizes: HashMap<usize, u64> = HashMap::new();
    let mut class_sizes: HashMap<i64, u64> = HashMap::new();
    let mut cells: HashMap<(usize, i64), u64> = HashMap::new();
    for (&k, &l) in c.assignment.iter().zip(labels) {
        *cluster_sizes.entry(k).or_default() += 1;
        *class_sizes.entry(l).or_default() += 1;
        *cells.entry((k, l)).or_default() += 1;
    }
    Ok(PairCounts {
        same_cluster: cluster_sizes.values().map(|&n| pairs(n)).sum(),
        same_class: class_sizes.values().map(|&n| pairs(n)).sum(),
        same_both: cells.values().map(|&n| pairs(n)).sum(),
    })
}

pub fn pairwise_precision_recall(c: &Clustering, labels: &[i64]) -> Result<(f64, f64)> {
    let counts = pair_counts(c, labels)?;
    Ok((counts.precision(), counts.recall()))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub num_clusters: usize,
}

impl PrPoint {
    pub fn new(threshold: f64, counts: PairCounts, num_clusters: usize) -> Self {
        let (p, r) = (counts.precision(), counts.recall());
        Self {
            threshold,
            precision: p,
            recall: r,
            f1: f1(p, r),
            num_clusters,
        }
    }
}

/// The full PR curve of a dendrogram. The first point is the cut at the
/// lowest merge height (all singletons, since merges need `height < eta`);
/// then one point just above each distinct height, so every piecewise-constant
/// segment of the curve appears exactly once.
pub fn pr_sweep(dend: &Dendrogram, labels: &[i64]) -> Result<Vec<PrPoint>> {
    let n = dend.n_leaves;
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "dendrogram has {n} leaves but {} labels were given",
            labels.len()
        )));
    }
    let mut tracker = PairTracker::new(labels);
    let first = dend.merges.first().map_or(0.0, |m| m.height);
    let mut points = vec![tracker.point(first)];
    // cluster id -> one of its leaves
    let mut rep: Vec<usize> = (0..n).collect();
    let mut k = 0;
    while k < dend.merges.len() {
        let h = dend.merges[k].height;
        while k < dend.merges.len() && dend.merges[k].height == h {
            let m = dend.merges[k];
            tracker.join(rep[m.a], rep[m.b]);
            rep.push(rep[m.a]);
            k += 1;
        }
        points.push(tracker.point(h.next_up()));
    }
    Ok(points)
}

/// Pair counts of a partition that only ever coarsens, updated per join by
/// merging per-cluster label histograms (smaller into larger).
pub(crate) struct PairTracker {
    uf: UnionFind,
    hist: Vec<HashMap<i64, u64>>,
    size: Vec<u64>,
    counts: PairCounts,
    clusters: usize,
}

impl PairTracker {
    pub fn new(labels: &[i64]) -> Self {
        let mut class_sizes: HashMap<i64, u64> = HashMap::new();
        for &l in labels {
            *class_sizes.entry(l).or_default() += 1;
        }
        Self {
            uf: UnionFind::new(labels.len()),
            hist: labels.iter().map(|&l| HashMap::from([(l, 1)])).collect(),
            size: vec![1; labels.len()],
            counts: PairCounts {
                same_cluster: 0,
                same_class: class_sizes.values().map(|&n| pairs(n)).sum(),
                same_both: 0,
            },
            clusters: labels.len(),
        }
    }

    /// Joins the clusters containing leaves `a` and `b`.
    pub fn join(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.uf.find(a), self.uf.find(b));
        let Some(root) = self.uf.union(ra, rb) else {
            return;
        };
        let other = if root == ra { rb } else { ra };
        let (mut big, mut small) = (
            std::mem::take(&mut self.hist[root]),
            std::mem::take(&mut self.hist[other]),
        );
        if big.len() < small.len() {
            std::mem::swap(&mut big, &mut small);
        }
        for (l, c) in small {
            let e = big.entry(l).or_default();
            self.counts.same_both += c * *e;
            *e += c;
        }
        self.hist[root] = big;
        self.counts.same_cluster += self.size[ra] * self.size[rb];
        self.size[root] = self.size[ra] + self.size[rb];
        self.clusters -= 1;
    }

    pub fn point(&self, threshold: f64) -> PrPoint {
        PrPoint::new(threshold, self.counts, self.clusters)
    }
}

pub fn best_f1(points: &[PrPoint]) -> Option<PrPoint> {
    points
        .iter()
        .copied()
        .fold(None, |best: Option<PrPoint>, p| match best {
            Some(b) if b.f1 >= p.f1 => Some(b),
            _ => Some(p),
        })
}

pub const PR_CSV_HEADER: &str = "threshold,precision,recall,f1,num_clusters";

pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut out = format!("{PR_CSV_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{}",
            p.threshold, p.precision, p.recall, p.f1, p.num_clusters
        );
    }
    out
}

pub fn write_pr_csv(points: &[PrPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, pr_csv(points)).map_err(|e| Error::io(path, e))
}

//! Average-linkage agglomerative clustering and threshold cuts.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::similarity::{condensed_index, DistanceMatrix};
use crate::unionfind::UnionFind;

/// One merge. Leaves are clusters `0..n`; merge `k` creates cluster `n + k`.
/// `a < b` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub n_leaves: usize,
}

/// Flat partition with cluster ids `0..k` numbered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
}

impl Clustering {
    /// Renumbers arbitrary labels into contiguous ids by first appearance.
    pub fn from_labels<T: Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        Self { assignment }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Member lists by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Clustering) -> bool {
        let mut image = vec![usize::MAX; self.num_clusters()];
        self.assignment.iter().zip(&coarser.assignment).all(|(&f, &c)| {
            if image[f] == usize::MAX {
                image[f] = c;
            }
            image[f] == c
        })
    }
}

/// Tie-broken ordering key of a candidate merge.
#[derive(Clone, Copy)]
struct Key {
    dist: f64,
    lo: usize,
    hi: usize,
}

impl Key {
    fn new(dist: f64, x: usize, y: usize) -> Self {
        Self {
            dist,
            lo: x.min(y),
            hi: x.max(y),
        }
    }

    fn cmp(&self, other: &Key) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.lo.cmp(&other.lo))
            .then(self.hi.cmp(&other.hi))
    }
}

struct Workspace {
    n: usize,
    dist: Vec<f64>,
    active: Vec<bool>,
    id: Vec<usize>,
    size: Vec<usize>,
    nn: Vec<usize>,
}

impl Workspace {
    #[inline]
    fn d(&self, s: usize, t: usize) -> f64 {
        if s < t {
            self.dist[condensed_index(self.n, s, t)]
        } else {
            self.dist[condensed_index(self.n, t, s)]
        }
    }

    #[inline]
    fn set_d(&mut self, s: usize, t: usize, v: f64) {
        let k = if s < t {
            condensed_index(self.n, s, t)
        } else {
            condensed_index(self.n, t, s)
        };
        self.dist[k] = v;
    }

    fn key(&self, s: usize, t: usize) -> Key {
        Key::new(self.d(s, t), self.id[s], self.id[t])
    }

    fn rescan(&mut self, s: usize) {
        let mut best: Option<(usize, Key)> = None;
        for t in 0..self.n {
            if t == s || !self.active[t] {
                continue;
            }
            let k = self.key(s, t);
            if best.as_ref().is_none_or(|(_, b)| k.cmp(b) == Ordering::Less) {
                best = Some((t, k));
            }
        }
        if let Some((t, _)) = best {
            self.nn[s] = t;
        }
    }
}

/// Average-linkage dendrogram with Lance-Williams updates. Each step merges
/// the closest pair; equal distances go to the smallest `(min id, max id)`
/// cluster-id pair.
pub fn build_dendrogram(d: &DistanceMatrix) -> Dendrogram {
    let n = d.len();
    let mut ws = Workspace {
        n,
        dist: d.values().to_vec(),
        active: vec![true; n],
        id: (0..n).collect(),
        size: vec![1; n],
        nn: vec![0; n],
    };
    for s in 0..n {
        ws.rescan(s);
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut last = f64::NEG_INFINITY;
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, Key)> = None;
        for s in (0..n).filter(|&s| ws.active[s]) {
            let k = ws.key(s, ws.nn[s]);
            if best.as_ref().is_none_or(|(_, b)| k.cmp(b) == Ordering::Less) {
                best = Some((s, k));
            }
        }
        let (s, key) = best.expect("at least two active clusters");
        let t = ws.nn[s];
        let (keep, gone) = (s.min(t), s.max(t));
        assert!(
            key.dist >= last,
            "average-linkage inversion: height {} after {}",
            key.dist,
            last
        );
        last = key.dist;

        let (na, nb) = (ws.size[keep] as f64, ws.size[gone] as f64);
        for k in 0..n {
            if k == keep || k == gone || !ws.active[k] {
                continue;
            }
            let (x, y) = (ws.d(k, keep), ws.d(k, gone));
            let lw = (na * x + nb * y) / (na + nb);
            ws.set_d(k, keep, lw.clamp(x.min(y), x.max(y)));
        }
        ws.active[gone] = false;
        ws.size[keep] += ws.size[gone];
        ws.id[keep] = n + step;
        merges.push(Merge {
            a: key.lo,
            b: key.hi,
            height: key.dist,
            size: ws.size[keep],
        });
        if step + 2 == n {
            break;
        }

        ws.rescan(keep);
        for k in 0..n {
            if k == keep || !ws.active[k] {
                continue;
            }
            if ws.nn[k] == keep || ws.nn[k] == gone {
                ws.rescan(k);
            } else if ws.key(k, keep).cmp(&ws.key(k, ws.nn[k])) == Ordering::Less {
                ws.nn[k] = keep;
            }
        }
    }
    Dendrogram { merges, n_leaves: n }
}

/// Applies every merge with `height < eta`.
pub fn cut(dend: &Dendrogram, eta: f64) -> Clustering {
    let n = dend.n_leaves;
    let mut uf = UnionFind::new(n);
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &dend.merges {
        let (ra, rb) = (rep[m.a], rep[m.b]);
        rep.push(ra);
        if m.height < eta {
            uf.union(ra, rb);
        }
    }
    Clustering {
        assignment: uf.labels(),
    }
}

pub fn hierarchical(d: &DistanceMatrix, eta: f64) -> Clustering {
    cut(&build_dendrogram(d), eta)
}

impl Dendrogram {
    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }

    /// `merge_index,cluster_a,cluster_b,height,new_size`, with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("merge_index,cluster_a,cluster_b,height,new_size\n");
        for (k, m) in self.merges.iter().enumerate() {
            let _ = writeln!(out, "{k},{},{},{},{}", m.a, m.b, m.height, m.size);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::DistanceKind;
    use proptest::prelude::*;

    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, DistanceKind::Cosine, f).unwrap()
    }

    fn line(points: &[f64]) -> DistanceMatrix {
        let p = points.to_vec();
        matrix(p.len(), move |i, j| (p[i] - p[j]).abs())
    }

    #[test]
    fn three_points_on_a_line() {
        let dend = build_dendrogram(&line(&[0.0, 1.0, 5.0]));
        assert_eq!(dend.merges.len(), 2);
        assert_eq!((dend.merges[0].a, dend.merges[0].b, dend.merges[0].height), (0, 1, 1.0));
        assert_eq!((dend.merges[1].a, dend.merges[1].b, dend.merges[1].height), (2, 3, 4.5));
        assert_eq!(dend.merges[1].size, 3);
        assert_eq!(cut(&dend, 2.0).assignment, vec![0, 0, 1]);
        assert_eq!(cut(&dend, 1.0).assignment, vec![0, 1, 2]);
        assert_eq!(cut(&dend, 4.5).assignment, vec![0, 0, 1]);
        assert_eq!(cut(&dend, 4.6).assignment, vec![0, 0, 0]);
    }

    #[test]
    fn trivial_sizes() {
        let one = DistanceMatrix::new(1, vec![], DistanceKind::Cosine).unwrap();
        let dend = build_dendrogram(&one);
        assert!(dend.merges.is_empty());
        assert_eq!(cut(&dend, 1.0).assignment, vec![0]);

        let two = DistanceMatrix::new(2, vec![0.3], DistanceKind::Cosine).unwrap();
        let dend = build_dendrogram(&two);
        assert_eq!(
            dend.merges,
            vec![Merge {
                a: 0,
                b: 1,
                height: 0.3,
                size: 2
            }]
        );
    }

    #[test]
    fn ties_take_smallest_id_pair() {
        let d = matrix(4, |_, _| 1.0);
        let dend = build_dendrogram(&d);
        let pairs: Vec<_> = dend.merges.iter().map(|m| (m.a, m.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn csv_export() {
        let dend = build_dendrogram(&line(&[0.0, 1.0, 5.0]));
        assert_eq!(
            dend.to_csv(),
            "merge_index,cluster_a,cluster_b,height,new_size\n0,0,1,1,2\n1,2,3,4.5,3\n"
        );
    }

    #[test]
    fn clustering_helpers() {
        let c = Clustering::from_labels(&[7, 3, 7, 9]);
        assert_eq!(c.assignment, vec![0, 1, 0, 2]);
        assert_eq!(c.clusters(), vec![vec![0, 2], vec![1], vec![3]]);
        assert!(Clustering::singletons(4).refines(&c));
        assert!(!c.refines(&Clustering::singletons(4)));
    }

    proptest! {
        #[test]
        fn permutation_gives_same_partition(points in proptest::collection::vec(-10.0f64..10.0, 2..15), eta in 0.0f64..5.0) {
            let n = points.len();
            let perm: Vec<usize> = (0..n).rev().collect();
            let moved: Vec<f64> = perm.iter().map(|&i| points[i]).collect();
            let a = hierarchical(&line(&points), eta);
            let b = hierarchical(&line(&moved), eta);
            // b[k] describes original sample perm[k]
            let mut relabeled = vec![0; n];
            for (k, &i) in perm.iter().enumerate() {
                relabeled[i] = b.assignment[k];
            }
            let b = Clustering::from_labels(&relabeled);
            prop_assert!(a.refines(&b) && b.refines(&a));
        }
    }
}

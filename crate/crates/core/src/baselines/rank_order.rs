//! Approximate rank-order clustering.
//!
//! Normative definition used here. Each sample has a top-`k` neighbour list
//! `F_a` (self first, 1-based positions). For a scored pair, `O_a(b)` is the
//! position of `b` in `F_a`, or `k + 1` when absent, and
//!
//! ```text
//! d(a, b) = Σ_{i=1}^{min(O_a(b), k)} [F_a(i) ∉ F_b]
//! D(a, b) = (d(a, b) + d(b, a)) / min(O_a(b), O_b(a))
//! ```
//!
//! Only pairs where one sample appears in the other's list are scored. Pairs
//! with `D` below the threshold are linked, and clusters are the connected
//! components of the links, formed in one transitive pass. Pairs that are
//! never scored can never be linked, which caps the reachable recall.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::agglomerative::Clustering;
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::knn::{build_nn_lists, NeighborLists};
use crate::metrics::{PairTracker, PrPoint};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOrderConfig {
    pub k_list: usize,
    pub threshold: f64,
}

/// A scored pair, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

fn asymmetric(nn: &NeighborLists, members: &[HashSet<usize>], a: usize, b: usize, k: usize) -> (usize, usize) {
    let pos = nn.position(a, b).unwrap_or(k + 1);
    let missing = nn.list(a)[..pos.min(k)]
        .iter()
        .filter(|f| !members[b].contains(f))
        .count();
    (missing, pos)
}

/// Every scored pair with its rank-order distance, sorted by `(a, b)`.
pub fn rank_order_distances(set: &EmbeddingSet, k_list: usize) -> Result<Vec<ScoredPair>> {
    if k_list == 0 {
        return Err(Error::Config("rank-order list depth must be at least 1".into()));
    }
    let k = k_list.min(set.len());
    let nn = build_nn_lists(set, k)?;
    let members: Vec<HashSet<usize>> = (0..set.len()).map(|i| nn.list(i).iter().copied().collect()).collect();
    let mut pairs: Vec<ScoredPair> = (0..set.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let nn = &nn;
            let members = &members;
            nn.list(a)
                .iter()
                .copied()
                .filter(move |&b| b != a)
                // score each unordered pair once: from the smaller index, or from
                // the only side whose list holds the other
                .filter(move |&b| a < b || !members[b].contains(&a))
                .map(move |b| {
                    let (dab, oab) = asymmetric(nn, members, a, b, k);
                    let (dba, oba) = asymmetric(nn, members, b, a, k);
                    ScoredPair {
                        a: a.min(b),
                        b: a.max(b),
                        distance: (dab + dba) as f64 / oab.min(oba) as f64,
                    }
                })
        })
        .collect();
    pairs.sort_by_key(|p| (p.a, p.b));
    Ok(pairs)
}

pub fn rank_order_cluster(set: &EmbeddingSet, cfg: &RankOrderConfig) -> Result<Clustering> {
    let pairs = rank_order_distances(set, cfg.k_list)?;
    let mut uf = UnionFind::new(set.len());
    for p in pairs.iter().filter(|p| p.distance < cfg.threshold) {
        uf.union(p.a, p.b);
    }
    Ok(Clustering {
        assignment: uf.labels(),
    })
}

/// PR curve over every distinct pair distance. The first point has no links.
pub fn rank_order_sweep(set: &EmbeddingSet, k_list: usize, labels: &[i64]) -> Result<Vec<PrPoint>> {
    if labels.len() != set.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} samples",
            labels.len(),
            set.len()
        )));
    }
    let mut pairs = rank_order_distances(set, k_list)?;
    pairs.sort_by(|x, y| x.distance.total_cmp(&y.distance));
    let mut tracker = PairTracker::new(labels);
    let mut points = vec![tracker.point(pairs.first().map_or(0.0, |p| p.distance))];
    let mut k = 0;
    while k < pairs.len() {
        let d = pairs[k].distance;
        while k < pairs.len() && pairs[k].distance == d {
            tracker.join(pairs[k].a, pairs[k].b);
            k += 1;
        }
        points.push(tracker.point(d.next_up()));
    }
    Ok(points)
}

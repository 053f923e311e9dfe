//! Cleaning a noisily labeled corpus with per-batch PAHC.
//!
//! Identities are taken in order of first appearance and grouped into
//! consecutive batches. Each batch is clustered on its own (neighbour lists
//! and SVM negatives never cross batches). A cluster whose most common label
//! has fewer than `min_majority` members is dropped whole; the union of the
//! remaining clusters is the curated subset.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::agglomerative::{hierarchical, Clustering};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::similarity::{fit_pahc, PahcParams, Transform};

#[derive(Debug, Clone)]
pub struct CurationConfig {
    pub batch_size_identities: usize,
    pub eta: f64,
    pub min_majority: usize,
    pub pahc: PahcParams,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            batch_size_identities: 50,
            eta: 2.3,
            min_majority: 30,
            pahc: PahcParams {
                transform: Transform::Exp,
                ..PahcParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterReport {
    pub cluster_id: usize,
    pub batch: usize,
    pub size: usize,
    pub majority_label: i64,
    pub majority_count: usize,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationResult {
    /// Kept sample indices, ascending.
    pub kept: Vec<usize>,
    pub clusters: Vec<ClusterReport>,
    /// Global cluster id of every sample.
    pub sample_cluster: Vec<usize>,
}

/// Most frequent label; ties go to the smaller label.
pub fn majority(labels: impl IntoIterator<Item = i64>) -> Option<(i64, usize)> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
}

/// Identity batches as sample-index lists.
pub fn batches(labels: &[i64], batch_size: usize) -> Vec<Vec<usize>> {
    let mut order: HashMap<i64, usize> = HashMap::new();
    for &l in labels {
        let next = order.len();
        order.entry(l).or_insert(next);
    }
    let count = order.len().div_ceil(batch_size);
    let mut out = vec![Vec::new(); count];
    for (i, l) in labels.iter().enumerate() {
        out[order[l] / batch_size].push(i);
    }
    out
}

pub fn curate(set: &EmbeddingSet, cfg: &CurationConfig) -> Result<CurationResult> {
    let labels = set
        .labels()
        .ok_or_else(|| Error::InvalidInput("curation requires labels".into()))?;
    if cfg.batch_size_identities == 0 || cfg.min_majority == 0 {
        return Err(Error::Config(
            "batch size and minimum majority must be at least 1".into(),
        ));
    }
    let groups = batches(labels, cfg.batch_size_identities);
    let per_batch: Vec<Clustering> = groups
        .par_iter()
        .enumerate()
        .map(|(b, members)| {
            let sub = set.subset(members)?;
            let model = fit_pahc(&sub, &cfg.pahc).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("batch {b} ({} samples): {msg}", members.len())),
                other => other,
            })?;
            let d = model.distance_matrix(&sub, cfg.pahc.transform)?;
            Ok(hierarchical(&d, cfg.eta))
        })
        .collect::<Result<_>>()?;

    let mut clusters = Vec::new();
    let mut sample_cluster = vec![usize::MAX; set.len()];
    for (b, (members, clustering)) in groups.iter().zip(&per_batch).enumerate() {
        for local in clustering.clusters() {
            let id = clusters.len();
            let (majority_label, majority_count) =
                majority(local.iter().map(|&i| labels[members[i]])).expect("clusters are non-empty");
            for &i in &local {
                sample_cluster[members[i]] = id;
            }
            clusters.push(ClusterReport {
                cluster_id: id,
                batch: b,
                size: local.len(),
                majority_label,
                majority_count,
                kept: majority_count >= cfg.min_majority,
            });
        }
    }
    let kept = (0..set.len()).filter(|&i| clusters[sample_cluster[i]].kept).collect();
    Ok(CurationResult {
        kept,
        clusters,
        sample_cluster,
    })
}

impl CurationResult {
    /// Fraction of kept samples whose label equals their cluster's majority.
    pub fn kept_purity(&self, labels: &[i64]) -> f64 {
        if self.kept.is_empty() {
            return 1.0;
        }
        let pure = self
            .kept
            .iter()
            .filter(|&&i| labels[i] == self.clusters[self.sample_cluster[i]].majority_label)
            .count();
        pure as f64 / self.kept.len() as f64
    }

    /// `sample_id<TAB>cluster_id<TAB>majority_label<TAB>kept`, one row per sample.
    pub fn kept_tsv(&self, set: &EmbeddingSet) -> String {
        let mut out = String::new();
        for i in 0..set.len() {
            let c = &self.clusters[self.sample_cluster[i]];
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                set.sample_id(i),
                c.cluster_id,
                c.majority_label,
                u8::from(c.kept)
            );
        }
        out
    }

    /// One JSON object per cluster.
    pub fn report_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.clusters {
            out.push_str(&serde_json::to_string(c).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, set: &EmbeddingSet, kept_path: &Path, report_path: &Path) -> Result<()> {
        std::fs::write(kept_path, self.kept_tsv(set)).map_err(|e| Error::io(kept_path, e))?;
        std::fs::write(report_path, self.report_jsonl()).map_err(|e| Error::io(report_path, e))
    }
}

/// Fraction of samples whose label equals the majority label of their group
/// in `groups`.
pub fn purity(labels: &[i64], groups: &Clustering) -> f64 {
    let mut pure = 0;
    for members in groups.clusters() {
        let (m, _) = majority(members.iter().map(|&i| labels[i])).expect("non-empty");
        pure += members.iter().filter(|&&i| labels[i] == m).count();
    }
    pure as f64 / labels.len() as f64
}

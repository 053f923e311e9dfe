//! Lloyd's k-means with k-means++ seeding.
//!
//! Squared Euclidean distance on unit vectors is `2 − 2 cos`, so assignments
//! agree with cosine similarity. Ties go to the lowest centroid index. A
//! centroid left without members is moved onto the point farthest from its
//! current centroid.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agglomerative::Clustering;
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub clustering: Clustering,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(x, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(set: &EmbeddingSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = set.len();
    let mut centroids = vec![set.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = set.rows().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.random_range(0..n),
        };
        let c = set.row(next).to_vec();
        for (d, x) in d2.iter_mut().zip(set.rows()) {
            *d = d.min(sq_dist(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

pub fn kmeans(set: &EmbeddingSet, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = set.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} must be between 1 and {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(set, k, &mut rng);
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut wcss = Vec::new();
    let mut iterations = 0;
    loop {
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| nearest(set.row(i), &centroids))
            .collect();
        let changed = assigned.iter().zip(&assignment).any(|(a, &old)| a.0 != old);
        assignment = assigned.iter().map(|a| a.0).collect();
        wcss.push(assigned.iter().map(|a| a.1).sum());
        if !changed || iterations == max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; set.dim()]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(set.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .map(|i| (i, sq_dist(set.row(i), &centroids[assignment[i]])))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                )
                .0;
            centroids[c] = set.row(far).to_vec();
            assignment[far] = c;
        }
    }
    Ok(KMeansResult {
        clustering: Clustering::from_labels(&assignment),
        centroids,
        wcss,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pairwise_precision_recall;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn k_equals_n() {
        let s = generate(&SynthConfig::new(3, 4, 6, 2.0, 4)).unwrap();
        let r = kmeans(&s.set, 12, 1, 100).unwrap();
        assert_eq!(r.clustering.num_clusters(), 12);
        assert!(r.wcss.last().unwrap().abs() < 1e-20);
    }

    #[test]
    fn k_equals_one() {
        let s = generate(&SynthConfig::new(3, 4, 6, 2.0, 4)).unwrap();
        let r = kmeans(&s.set, 1, 1, 100).unwrap();
        assert_eq!(r.clustering.num_clusters(), 1);
        for d in 0..6 {
            let mean = s.set.rows().map(|x| x[d]).sum::<f64>() / 12.0;
            assert!((r.centroids[0][d] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn separated_pair_recovered() {
        let s = generate(&SynthConfig::new(2, 20, 16, 20.0, 8)).unwrap();
        let r = kmeans(&s.set, 2, 3, 100).unwrap();
        let (p, rec) = pairwise_precision_recall(&r.clustering, &s.true_labels).unwrap();
        assert_eq!((p, rec), (1.0, 1.0));
    }

    #[test]
    fn wcss_non_increasing_and_deterministic() {
        let s = generate(&SynthConfig::new(6, 15, 8, 1.5, 12)).unwrap();
        for seed in 0..10 {
            let r = kmeans(&s.set, 6, seed, 100).unwrap();
            assert!(r.wcss.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            let again = kmeans(&s.set, 6, seed, 100).unwrap();
            assert_eq!(r.clustering, again.clustering);
        }
        assert!(kmeans(&s.set, 0, 0, 10).is_err());
        assert!(kmeans(&s.set, 91, 0, 10).is_err());
    }

    #[test]
    fn duplicate_points_do_not_panic() {
        let set = EmbeddingSet::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let r = kmeans(&set, 3, 0, 10).unwrap();
        assert_eq!(r.clustering.len(), 3);
    }
}

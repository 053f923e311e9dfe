//! Cosine and proximity-aware pairwise similarities, and the condensed
//! distance matrices built from them.
//!
//! The proximity-aware similarity of samples `i` and `j` is
//!
//! ```text
//! s(i, j) = ½ (H_i(N_K(j)) + H_j(N_K(i)))
//! ```
//!
//! where `H_i(S)` is the mean score of hyperplane `i` over the set `S` and
//! `N_K(j)` is the first `K` entries of `j`'s neighbour list. Each sample's
//! hyperplane separates its own neighbourhood from a window of farther
//! neighbours. Scores are affine, so `H_i(N_K(j))` equals hyperplane `i`
//! scored at the centroid of `N_K(j)`; the matrix builder uses that form.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::embedding::{dot, EmbeddingSet};
use crate::error::{Error, Result};
use crate::knn::{build_nn_lists, NeighborLists, NeighborWindow};
use crate::svm::{Hyperplane, SolverOptions, WeightedPoints};

pub const MATRIX_MAGIC: &[u8; 4] = b"DST1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `1 − (2/π) arctan(s)`, in `(0, 2)`.
    Arctan,
    /// `exp(−s)`, in `(0, ∞)`.
    Exp,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arctan" => Ok(Transform::Arctan),
            "exp" => Ok(Transform::Exp),
            other => Err(Error::Config(format!("unknown transform {other:?}"))),
        }
    }
}

pub fn pa_distance(s: f64, transform: Transform) -> f64 {
    match transform {
        Transform::Arctan => 1.0 - std::f64::consts::FRAC_2_PI * s.atan(),
        Transform::Exp => (-s).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Cosine = 0,
    PaArctan = 1,
    PaExp = 2,
}

impl DistanceKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(DistanceKind::Cosine),
            1 => Some(DistanceKind::PaArctan),
            2 => Some(DistanceKind::PaExp),
            _ => None,
        }
    }
}

/// Symmetric distances stored as the condensed upper triangle, row-major:
/// `(0,1), (0,2), …, (0,n−1), (1,2), …`. The diagonal is implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    kind: DistanceKind,
}

#[inline]
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

impl DistanceMatrix {
    pub fn new(n: usize, values: Vec<f64>, kind: DistanceKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("distance matrix needs at least one sample".into()));
        }
        if values.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidInput(format!(
                "{} condensed values do not match n = {n}",
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite distance at condensed index {p}"
            )));
        }
        Ok(Self { n, values, kind })
    }

    /// Fills the matrix from `f(i, j)` for every `i < j`, rows in parallel.
    pub fn from_fn<F>(n: usize, kind: DistanceKind, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| f(i, j)).collect())
            .collect();
        Self::new(n, rows.concat(), kind)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.values[condensed_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.values[condensed_index(self.n, j, i)],
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 8 * self.values.len());
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.push(self.kind as u8);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |loc: usize, msg: String| Error::format("<matrix>", format!("byte {loc}"), msg);
        if bytes.len() < 9 || &bytes[..4] != MATRIX_MAGIC {
            return Err(bad(0, "missing DST1 header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let kind = DistanceKind::from_byte(bytes[8]).ok_or_else(|| bad(8, format!("unknown kind {}", bytes[8])))?;
        let count = n * n.saturating_sub(1) / 2;
        if bytes.len() != 9 + 8 * count {
            return Err(bad(9, format!("expected {count} values for n = {n}")));
        }
        let values = bytes[9..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(n, values, kind)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

pub fn cosine_similarity(set: &EmbeddingSet, i: usize, j: usize) -> f64 {
    dot(set.row(i), set.row(j))
}

/// Mean score of `h` over the samples `members`.
pub fn asymmetric_eval(h: &Hyperplane, members: &[usize], set: &EmbeddingSet) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidInput("asymmetric evaluation over an empty set".into()));
    }
    let total: f64 = members.iter().map(|&m| h.score(set.row(m))).sum();
    Ok(total / members.len() as f64)
}

/// Proximity-aware similarity evaluated literally from per-point scores.
pub fn pa_similarity(
    i: usize,
    j: usize,
    planes: &[Hyperplane],
    nn: &NeighborLists,
    window: &NeighborWindow,
    set: &EmbeddingSet,
) -> Result<f64> {
    let from_i = asymmetric_eval(&planes[i], window.positives(nn, j), set)?;
    let from_j = asymmetric_eval(&planes[j], window.positives(nn, i), set)?;
    Ok(0.5 * (from_i + from_j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cosine,
    Pahc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneMode {
    /// One squared-hinge SVM per sample.
    Svm,
    /// `w_i = x_i`, `b_i = 0`: reduces the similarity to cosine when `K = 1`.
    FixedThroughSample,
}

#[derive(Debug, Clone)]
pub struct PahcParams {
    pub window: NeighborWindow,
    pub c: f64,
    pub transform: Transform,
    pub planes: PlaneMode,
    pub solver: SolverOptions,
    /// When set, every SVM uses all of these vectors as negatives instead
    /// of the neighbour-list window.
    pub negative_pool: Option<EmbeddingSet>,
}

impl Default for PahcParams {
    fn default() -> Self {
        Self {
            window: NeighborWindow {
                k: 5,
                neg_start: 50,
                neg_end: 100,
            },
            c: 10.0,
            transform: Transform::Arctan,
            planes: PlaneMode::Svm,
            solver: SolverOptions::default(),
            negative_pool: None,
        }
    }
}

/// Neighbour lists and the per-sample hyperplanes trained from them.
#[derive(Debug, Clone)]
pub struct PahcModel {
    pub window: NeighborWindow,
    pub nn: NeighborLists,
    pub planes: Vec<Hyperplane>,
}

fn require_normalized(set: &EmbeddingSet) -> Result<()> {
    if !set.is_normalized(1e-6) {
        return Err(Error::InvalidInput("embeddings must be unit-normalized".into()));
    }
    Ok(())
}

pub fn fit_pahc(set: &EmbeddingSet, params: &PahcParams) -> Result<PahcModel> {
    require_normalized(set)?;
    let window = NeighborWindow::new(params.window.k, params.window.neg_start, params.window.neg_end)?;
    if !(params.c.is_finite() && params.c >= 0.0) {
        return Err(Error::Config(format!("svm C must be non-negative, got {}", params.c)));
    }
    let n = set.len();
    let pool = params.negative_pool.as_ref();
    if let Some(pool) = pool {
        if pool.dim() != set.dim() {
            return Err(Error::InvalidInput(format!(
                "negative pool has dimension {}, embeddings have {}",
                pool.dim(),
                set.dim()
            )));
        }
    }
    let depth = match (params.planes, pool) {
        (PlaneMode::Svm, None) => {
            window.check_fits(n)?;
            window.depth_for(n)
        }
        _ => window.k.min(n),
    };
    let nn = build_nn_lists(set, depth)?;

    let planes = match params.planes {
        PlaneMode::FixedThroughSample => set.rows().map(Hyperplane::through_origin).collect(),
        PlaneMode::Svm => (0..n)
            .into_par_iter()
            .map(|i| {
                let pos: Vec<&[f64]> = window.positives(&nn, i).iter().map(|&p| set.row(p)).collect();
                let neg: Vec<&[f64]> = match pool {
                    Some(pool) => pool.rows().collect(),
                    None => window.negatives(&nn, i).iter().map(|&q| set.row(q)).collect(),
                };
                WeightedPoints::new(pos, neg, params.c)
                    .solve(&params.solver)
                    .map(|s| s.hyperplane)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(PahcModel { window, nn, planes })
}

impl PahcModel {
    /// Centroid of each sample's `K`-neighbourhood.
    pub fn neighborhood_means(&self, set: &EmbeddingSet) -> Vec<Vec<f64>> {
        (0..set.len())
            .into_par_iter()
            .map(|i| {
                let members = self.window.positives(&self.nn, i);
                let mut mean = vec![0.0; set.dim()];
                for &m in members {
                    for (a, x) in mean.iter_mut().zip(set.row(m)) {
                        *a += x;
                    }
                }
                let k = members.len() as f64;
                mean.iter_mut().for_each(|a| *a /= k);
                mean
            })
            .collect()
    }

    pub fn similarity_fn<'a>(&'a self, means: &'a [Vec<f64>]) -> impl Fn(usize, usize) -> f64 + Sync + 'a {
        move |i, j| 0.5 * (self.planes[i].score(&means[j]) + self.planes[j].score(&means[i]))
    }

    pub fn distance_matrix(&self, set: &EmbeddingSet, transform: Transform) -> Result<DistanceMatrix> {
        let means = self.neighborhood_means(set);
        let sim = self.similarity_fn(&means);
        let kind = match transform {
            Transform::Arctan => DistanceKind::PaArctan,
            Transform::Exp => DistanceKind::PaExp,
        };
        DistanceMatrix::from_fn(set.len(), kind, |i, j| pa_distance(sim(i, j), transform))
    }
}

pub fn cosine_distance_matrix(set: &EmbeddingSet) -> Result<DistanceMatrix> {
    require_normalized(set)?;
    DistanceMatrix::from_fn(set.len(), DistanceKind::Cosine, |i, j| {
        (1.0 - cosine_similarity(set, i, j)).clamp(0.0, 2.0)
    })
}

pub fn build_distance_matrix(set: &EmbeddingSet, method: Method, params: &PahcParams) -> Result<DistanceMatrix> {
    match method {
        Method::Cosine => cosine_distance_matrix(set),
        Method::Pahc => fit_pahc(set, params)?.distance_matrix(set, params.transform),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use proptest::prelude::*;

    fn fixed(k: usize) -> PahcParams {
        PahcParams {
            window: NeighborWindow::new(k, k + 1, k + 1).unwrap(),
            planes: PlaneMode::FixedThroughSample,
            ..PahcParams::default()
        }
    }

    #[test]
    fn cosine_cases() {
        let set = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(cosine_similarity(&set, 0, 0), 1.0);
        assert_eq!(cosine_similarity(&set, 0, 1), 0.0);
        assert_eq!(cosine_similarity(&set, 0, 2), -1.0);
    }

    #[test]
    fn asymmetric_eval_cases() {
        let set = EmbeddingSet::from_rows(&[[0.6, 0.8], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]).unwrap();
        let h = Hyperplane::through_origin(&[1.0, 0.0]);
        assert_eq!(asymmetric_eval(&h, &[0], &set).unwrap(), 0.6);
        assert_eq!(asymmetric_eval(&h, &[1, 2, 3], &set).unwrap(), 2.0);
        let through = Hyperplane {
            w: vec![0.0, 1.0],
            b: -0.8,
        };
        assert!(asymmetric_eval(&through, &[0], &set).unwrap().abs() < 1e-15);
        assert!(asymmetric_eval(&h, &[], &set).is_err());
    }

    #[test]
    fn transform_values() {
        assert!((pa_distance(1.0, Transform::Arctan) - 0.5).abs() < 1e-15);
        assert_eq!(pa_distance(0.0, Transform::Arctan), 1.0);
        assert_eq!(pa_distance(0.0, Transform::Exp), 1.0);
        assert!(pa_distance(1e300, Transform::Arctan) < 1e-12);
        assert!(pa_distance(700.0, Transform::Exp) < 1e-300);
    }

    #[test]
    fn cosine_matrices() {
        let same = EmbeddingSet::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(cosine_distance_matrix(&same).unwrap().values(), &[0.0]);
        let ortho = EmbeddingSet::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(cosine_distance_matrix(&ortho).unwrap().values(), &[1.0, 1.0, 1.0]);
        let raw = EmbeddingSet::from_rows(&[[3.0, 4.0], [1.0, 0.0]]).unwrap();
        assert!(cosine_distance_matrix(&raw).is_err());
    }

    #[test]
    fn fixed_plane_k1_is_cosine() {
        let s = generate(&SynthConfig::new(4, 5, 6, 2.0, 3)).unwrap();
        let model = fit_pahc(&s.set, &fixed(1)).unwrap();
        for i in 0..s.set.len() {
            for j in 0..s.set.len() {
                let pa = pa_similarity(i, j, &model.planes, &model.nn, &model.window, &s.set).unwrap();
                assert!((pa - cosine_similarity(&s.set, i, j)).abs() <= 1e-12);
            }
        }
        let d = model.distance_matrix(&s.set, Transform::Arctan).unwrap();
        for i in 0..s.set.len() {
            for j in i + 1..s.set.len() {
                let want = pa_distance(cosine_similarity(&s.set, i, j), Transform::Arctan);
                assert!((d.get(i, j) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn within_cluster_beats_between() {
        let s = generate(&SynthConfig::new(2, 6, 8, 4.0, 17)).unwrap();
        let params = PahcParams {
            window: NeighborWindow::new(3, 7, 12).unwrap(),
            ..PahcParams::default()
        };
        let m = fit_pahc(&s.set, &params).unwrap();
        let sim = |i, j| pa_similarity(i, j, &m.planes, &m.nn, &m.window, &s.set).unwrap();
        assert!(sim(0, 1) > sim(0, 6));
        assert!(sim(7, 8) > sim(2, 9));
    }

    #[test]
    fn matrix_matches_literal_evaluation() {
        let s = generate(&SynthConfig::new(4, 10, 8, 3.0, 5)).unwrap();
        let params = PahcParams {
            window: NeighborWindow::new(3, 6, 20).unwrap(),
            ..PahcParams::default()
        };
        let m = fit_pahc(&s.set, &params).unwrap();
        let d = m.distance_matrix(&s.set, Transform::Arctan).unwrap();
        for i in 0..s.set.len() {
            for j in i + 1..s.set.len() {
                let sim = pa_similarity(i, j, &m.planes, &m.nn, &m.window, &s.set).unwrap();
                assert!((d.get(i, j) - pa_distance(sim, Transform::Arctan)).abs() <= 1e-10);
                assert!(d.get(i, j) > 0.0 && d.get(i, j) < 2.0);
            }
        }
    }

    #[test]
    fn window_must_fit() {
        let s = generate(&SynthConfig::new(2, 5, 4, 3.0, 5)).unwrap();
        let params = PahcParams::default();
        assert!(matches!(fit_pahc(&s.set, &params), Err(Error::Config(_))));
    }

    #[test]
    fn negative_pool_mode() {
        let s = generate(&SynthConfig::new(3, 6, 8, 4.0, 2)).unwrap();
        let pool = generate(&SynthConfig::new(4, 3, 8, 4.0, 77)).unwrap().set;
        let params = PahcParams {
            window: NeighborWindow::new(3, 50, 100).unwrap(),
            negative_pool: Some(pool),
            ..PahcParams::default()
        };
        let d = build_distance_matrix(&s.set, Method::Pahc, &params).unwrap();
        assert_eq!(d.values().len(), 18 * 17 / 2);
    }

    #[test]
    fn matrix_dump_roundtrip() {
        let s = generate(&SynthConfig::new(2, 4, 3, 3.0, 1)).unwrap();
        let d = cosine_distance_matrix(&s.set).unwrap();
        let bytes = d.to_bytes();
        assert_eq!(&bytes[..4], b"DST1");
        assert_eq!(bytes.len(), 9 + 8 * 28);
        assert_eq!(DistanceMatrix::from_bytes(&bytes).unwrap(), d);
        assert!(DistanceMatrix::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn identical_across_thread_counts() {
        let s = generate(&SynthConfig::new(5, 12, 16, 2.0, 31)).unwrap();
        let params = PahcParams {
            window: NeighborWindow::new(4, 10, 30).unwrap(),
            ..PahcParams::default()
        };
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| build_distance_matrix(&s.set, Method::Pahc, &params).unwrap())
        };
        let a = run(1);
        assert_eq!(a.to_bytes(), run(4).to_bytes());
        assert_eq!(a.to_bytes(), run(8).to_bytes());
    }

    proptest! {
        #[test]
        fn transforms_strictly_decrease(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assume!(a < b);
            prop_assert!(pa_distance(a, Transform::Arctan) > pa_distance(b, Transform::Arctan));
            prop_assert!(pa_distance(a, Transform::Exp) > pa_distance(b, Transform::Exp));
            let d = pa_distance(a, Transform::Arctan);
            prop_assert!(d > 0.0 && d < 2.0);
            prop_assert!(pa_distance(a, Transform::Exp) > 0.0);
        }

        #[test]
        fn pa_similarity_is_symmetric(seed in any::<u64>()) {
            let s = generate(&SynthConfig::new(3, 6, 5, 2.0, seed)).unwrap();
            let params = PahcParams {
                window: NeighborWindow::new(3, 5, 12).unwrap(),
                ..PahcParams::default()
            };
            let m = fit_pahc(&s.set, &params).unwrap();
            for i in 0..s.set.len() {
                for j in 0..s.set.len() {
                    let a = pa_similarity(i, j, &m.planes, &m.nn, &m.window, &s.set).unwrap();
                    let b = pa_similarity(j, i, &m.planes, &m.nn, &m.window, &s.set).unwrap();
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}

//! Proximity-aware hierarchical clustering (PAHC) of unit-norm embeddings.
//!
//! Each sample gets a linear SVM hyperplane separating its `K` nearest
//! neighbours from a window of farther neighbours. The similarity of two
//! samples averages each hyperplane's mean score over the other sample's
//! neighbourhood, and an average-linkage dendrogram over the transformed
//! distances is cut at a threshold.
//!
//! The pipeline, bottom-up:
//!
//! * [`embedding`] loads, validates, normalizes and pools vectors.
//! * [`synth`] generates labeled test data on the unit sphere.
//! * [`knn`] builds exact ordered neighbour lists.
//! * [`svm`] solves the class-weighted squared-hinge primal SVM.
//! * [`similarity`] assembles cosine and proximity-aware distance matrices.
//! * [`agglomerative`] builds average-linkage dendrograms and cuts them.
//! * [`baselines`] has k-means and approximate rank-order clustering.
//! * [`metrics`] computes pairwise precision/recall and PR sweeps.
//! * [`curation`] cleans a noisily labeled corpus batch by batch.
//! * [`cli`] is the `pahc` command-line front end.

pub mod agglomerative;
pub mod baselines;
pub mod cli;
pub mod curation;
pub mod embedding;
pub mod error;
pub mod knn;
pub mod metrics;
pub mod similarity;
pub mod svm;
pub mod synth;

mod unionfind;

pub use agglomerative::{build_dendrogram, cut, hierarchical, Clustering, Dendrogram, Merge};
pub use embedding::EmbeddingSet;
pub use error::{Error, Result};
pub use knn::{build_nn_lists, NeighborLists, NeighborWindow};
pub use similarity::{build_distance_matrix, DistanceKind, DistanceMatrix, Method, PahcParams, Transform};
pub use svm::{Hyperplane, SolverOptions, SvmProblem};

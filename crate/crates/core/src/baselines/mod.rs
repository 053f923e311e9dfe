//! Comparison methods: k-means with a known cluster count, and approximate
//! rank-order clustering.

pub mod kmeans;
pub mod rank_order;

pub use kmeans::{kmeans, KMeansResult};
pub use rank_order::{rank_order_cluster, rank_order_sweep, RankOrderConfig};

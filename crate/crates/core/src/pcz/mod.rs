//! Parking cluster zones.
//!
//! Lots are grouped by k-means on z-scored location and flow features.
//! Each group becomes a zone whose region is the union of closed Minkowski
//! balls around its member lots; trip endpoints inside a region are counted
//! as that zone's demand, one channel per travel mode.

mod frame;
mod fusion;
mod kmeans;
mod zone;

pub use frame::{assemble_frame, FeatureFrame};
pub use fusion::{fuse_demand, DemandSeries, FuseReport};
pub use kmeans::{kmeans, kmeans_plus_plus, kmeans_restarts, KMeansResult};
pub use zone::{
    build_pcz, cluster_lots, clustering_matrix, lot_feature_vector, minkowski_distance,
    ClusterOptions, LotFeature, ParkingClusterZone,
};

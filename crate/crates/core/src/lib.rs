//! Detection of collusive rating groups in online rating logs.
//!
//! Ratings are loaded into a bipartite reviewer/product graph ([`model`],
//! [`ingest`], [`snapshot`]), candidate groups are mined as maximal bicliques
//! ([`mining`]), scored with collusion and damage indicators ([`indicators`]),
//! filtered and expanded by the detection loop ([`detector`]) and queried
//! through the `getbicliques` language ([`query`]). [`synth`] produces labelled
//! synthetic logs and evaluation metrics.

pub mod detector;
pub mod indicators;
pub mod ingest;
pub mod mining;
pub mod model;
pub mod par;
pub mod query;
pub mod snapshot;
pub mod synth;

pub use detector::{detect, DetectionResult, Detector};
pub use model::{
    Biclique, BicliqueKey, DetectionConfig, GraphBuilder, IndicatorReport, ProductId, RatingEdge,
    RatingGraph, ReviewerId, Weights,
};

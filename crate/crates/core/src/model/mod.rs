//! Domain types shared across the crate: the reviewer/product rating graph,
//! its edges, bicliques carved out of it and the per-run configuration.

mod biclique;
mod config;
mod graph;

pub use biclique::{Biclique, BicliqueKey};
pub use config::{DetectionConfig, IndicatorReport, Weights};
pub use graph::{GraphBuilder, RatingEdge, RatingGraph};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Default upper bound of the rating scale.
pub const DEFAULT_MAX_VALUE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("identifier must not be empty")]
    EmptyId,
    #[error("rating value {value} outside [1, {max}]")]
    ValueOutOfRange { value: f64, max: f64 },
    #[error("spamicity {0} outside [0, 1]")]
    SpamicityOutOfRange(f64),
    #[error("maximum rating value must be at least 1, got {0}")]
    BadMaxValue(f64),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(ReviewerId, ProductId),
    #[error("unknown reviewer {0}")]
    UnknownReviewer(ReviewerId),
    #[error("unknown product {0}")]
    UnknownProduct(ProductId),
    #[error("biclique needs at least one reviewer and one product")]
    EmptyBiclique,
    #[error("missing edge ({0}, {1}): the groups do not form a biclique")]
    MissingEdge(ReviewerId, ProductId),
    #[error("biclique record has {found} edges, expected {expected}")]
    EdgeCount { expected: usize, found: usize },
    #[error(
        "biclique record edge {index} is ({found_r}, {found_p}), expected ({want_r}, {want_p})"
    )]
    EdgeOrder {
        index: usize,
        found_r: ReviewerId,
        found_p: ProductId,
        want_r: ReviewerId,
        want_p: ProductId,
    },
    #[error("weights must be non-negative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
                let id = id.into();
                if id.is_empty() {
                    return Err(ModelError::EmptyId);
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = ModelError;

            fn try_from(value: String) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = ModelError;

            fn try_from(value: &str) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Opaque reviewer token, unique per reviewer.
    ReviewerId
);
id_type!(
    /// Opaque product token (an ASIN or similar).
    ProductId
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_reject_empty() {
        assert_eq!(ReviewerId::new(""), Err(ModelError::EmptyId));
        assert!(ProductId::new("B000123").is_ok());
        let parsed: Result<ReviewerId, _> = serde_json::from_str("\"\"");
        assert!(parsed.is_err());
    }

    #[test]
    fn ids_serialize_as_plain_strings() {
        let id = ProductId::new("Book1").unwrap();
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"Book1\"");
    }
}

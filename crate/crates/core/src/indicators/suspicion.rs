//! Global reviewer-suspiciousness analysis behind GMS.
//!
//! Per product: the median vote, the RMS distance of all votes from it, and
//! a credible mean that ignores votes outside `median +/- distance`. Per
//! reviewer: the L2 and uniform norms of their deviations from the credible
//! means. Reviewers whose L2 or uniform error lies above the population median
//! plus its standard distance are suspicious.

use crate::model::{ProductId, RatingGraph, ReviewerId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductConsensus {
    pub median: f64,
    pub distance: f64,
    pub credible_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewerErrors {
    /// L2 norm of deviations from the credible means.
    pub lp: f64,
    /// Largest absolute deviation.
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuspiciousnessTable {
    products: Vec<ProductId>,
    consensus: Vec<ProductConsensus>,
    reviewers: Vec<ReviewerId>,
    errors: Vec<ReviewerErrors>,
    lp_median: f64,
    uniform_median: f64,
    lp_distance: f64,
    uniform_distance: f64,
    suspicious: BTreeSet<ReviewerId>,
}

/// Median; even-length input averages the two middle values. `None` when empty.
pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Root-mean-square distance from `center`, population denominator.
pub(crate) fn rms_about(values: &[f64], center: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - center).powi(2)).sum();
    (ss / values.len() as f64).sqrt()
}

pub(crate) fn consensus_of(values: &[f64]) -> ProductConsensus {
    let m = median(values).unwrap_or(0.0);
    let d = rms_about(values, m);
    let (sum, count) = values
        .iter()
        .filter(|&&v| m - d <= v && v <= m + d)
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    ProductConsensus {
        median: m,
        distance: d,
        credible_mean: if count == 0 { m } else { sum / count as f64 },
    }
}

impl SuspiciousnessTable {
    pub fn build(graph: &RatingGraph) -> Self {
        let consensus: Vec<ProductConsensus> = (0..graph.products().len())
            .map(|p| {
                let values: Vec<f64> = graph.product_edges(p).map(|e| e.value).collect();
                consensus_of(&values)
            })
            .collect();

        let errors: Vec<ReviewerErrors> = (0..graph.reviewers().len())
            .map(|r| {
                let (sq, max) = graph
                    .reviewer_edges(r)
                    .iter()
                    .zip(graph.reviewer_products(r))
                    .map(|(e, &p)| (e.value - consensus[p as usize].credible_mean).abs())
                    .fold((0.0, 0.0f64), |(sq, max), dev| {
                        (sq + dev * dev, max.max(dev))
                    });
                ReviewerErrors {
                    lp: sq.sqrt(),
                    uniform: max,
                }
            })
            .collect();

        let lp: Vec<f64> = errors.iter().map(|e| e.lp).collect();
        let un: Vec<f64> = errors.iter().map(|e| e.uniform).collect();
        let lp_median = median(&lp).unwrap_or(0.0);
        let uniform_median = median(&un).unwrap_or(0.0);
        let lp_distance = rms_about(&lp, lp_median);
        let uniform_distance = rms_about(&un, uniform_median);

        let suspicious = graph
            .reviewers()
            .iter()
            .zip(&errors)
            .filter(|(_, e)| {
                e.lp > lp_median + lp_distance || e.uniform > uniform_median + uniform_distance
            })
            .map(|(r, _)| r.clone())
            .collect();

        Self {
            products: graph.products().to_vec(),
            consensus,
            reviewers: graph.reviewers().to_vec(),
            errors,
            lp_median,
            uniform_median,
            lp_distance,
            uniform_distance,
            suspicious,
        }
    }

    /// A table holding only a precomputed suspicious set, e.g. one restored from
    /// a saved detection result.
    pub fn from_suspicious(suspicious: impl IntoIterator<Item = ReviewerId>) -> Self {
        Self {
            products: Vec::new(),
            consensus: Vec::new(),
            reviewers: Vec::new(),
            errors: Vec::new(),
            lp_median: 0.0,
            uniform_median: 0.0,
            lp_distance: 0.0,
            uniform_distance: 0.0,
            suspicious: suspicious.into_iter().collect(),
        }
    }

    pub fn is_suspicious(&self, reviewer: &ReviewerId) -> bool {
        self.suspicious.contains(reviewer)
    }

    pub fn suspicious(&self) -> &BTreeSet<ReviewerId> {
        &self.suspicious
    }

    pub fn product(&self, id: &str) -> Option<&ProductConsensus> {
        let i = self
            .products
            .binary_search_by(|p| p.as_str().cmp(id))
            .ok()?;
        Some(&self.consensus[i])
    }

    pub fn reviewer(&self, id: &str) -> Option<&ReviewerErrors> {
        let i = self
            .reviewers
            .binary_search_by(|r| r.as_str().cmp(id))
            .ok()?;
        Some(&self.errors[i])
    }

    /// (median, standard distance) of the L2 errors.
    pub fn lp_band(&self) -> (f64, f64) {
        (self.lp_median, self.lp_distance)
    }

    /// (median, standard distance) of the uniform errors.
    pub fn uniform_band(&self) -> (f64, f64) {
        (self.uniform_median, self.uniform_distance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GraphBuilder;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn unanimous_product() {
        let c = consensus_of(&[4.0, 4.0, 4.0]);
        assert_eq!((c.median, c.distance, c.credible_mean), (4.0, 0.0, 4.0));
    }

    #[test]
    fn one_dissenter_among_five() {
        let c = consensus_of(&[1.0, 5.0, 5.0, 5.0, 5.0]);
        assert_eq!(c.median, 5.0);
        // squared deviations: 16, 0, 0, 0, 0
        assert!((c.distance - (16.0f64 / 5.0).sqrt()).abs() < 1e-9);
        assert!((c.distance - 1.7889).abs() < 1e-4);
        assert!((c.credible_mean - 5.0).abs() < 1e-9);
    }

    #[test]
    fn even_count_band_keeps_middle_votes() {
        // the two middle votes are always within one distance of their mean
        let c = consensus_of(&[2.0, 3.0]);
        assert_eq!(c.median, 2.5);
        assert_eq!(c.distance, 0.5);
        assert_eq!(c.credible_mean, 2.5);
        let c = consensus_of(&[1.0, 1.0, 2.0, 5.0, 5.0, 5.0]);
        assert_eq!(c.median, 3.5);
        assert!(c.credible_mean > 1.0);
    }

    #[test]
    fn dissenter_accrues_error() {
        let mut b = GraphBuilder::default();
        for (i, v) in [1.0, 5.0, 5.0, 5.0, 5.0].iter().enumerate() {
            b.add(&format!("u{i}"), "p", *v, 0, 0.0).unwrap();
        }
        let g = b.build();
        let t = SuspiciousnessTable::build(&g);
        let e = t.reviewer("u0").unwrap();
        assert!((e.lp - 4.0).abs() < 1e-9);
        assert!((e.uniform - 4.0).abs() < 1e-9);
        assert_eq!(t.reviewer("u1").unwrap().lp, 0.0);
        assert!(t.is_suspicious(&ReviewerId::new("u0").unwrap()));
        assert_eq!(t.suspicious().len(), 1);
    }

    #[test]
    fn identical_raters_are_not_suspicious() {
        let mut b = GraphBuilder::default();
        for u in 0..4 {
            for p in 0..3 {
                b.add(&format!("u{u}"), &format!("p{p}"), 3.0, 0, 0.0)
                    .unwrap();
            }
        }
        let t = SuspiciousnessTable::build(&b.build());
        assert!(t.suspicious().is_empty());
        assert_eq!(t.lp_band(), (0.0, 0.0));
    }
}

//! Group indicators.
//!
//! Collusion indicators (all in `[0, 1]`, larger means more collusive):
//! value similarity (GVS), time similarity (GTS), rating spamicity (GRS) and
//! member suspiciousness (GMS). Defectiveness indicators: group size (GS) and
//! target size (GPS), both relative to the largest group of the cohort.

mod suspicion;

pub use suspicion::{ProductConsensus, ReviewerErrors, SuspiciousnessTable};

use crate::model::{Biclique, ProductId, ReviewerId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    #[error("value similarity needs at least two reviewers, group has {0}")]
    GroupTooSmall(usize),
    #[error("reviewer {0} is not a member of the group")]
    NotMemberReviewer(ReviewerId),
    #[error("product {0} is not a target of the group")]
    NotMemberProduct(ProductId),
    #[error("group of {reviewers} reviewers x {products} products exceeds the cohort maxima")]
    NotInCohort { reviewers: usize, products: usize },
}

/// The four weight-independent collusion indicators of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollusionScores {
    pub gvs: f64,
    pub gts: f64,
    pub grs: f64,
    pub gms: f64,
}

impl CollusionScores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.gvs, self.gts, self.grs, self.gms]
    }
}

/// Cosine similarity of two members' rating vectors over the group's products.
pub fn pairwise_value_similarity(
    a: &ReviewerId,
    b: &ReviewerId,
    group: &Biclique,
) -> Result<f64, IndicatorError> {
    let ia = group
        .reviewer_position(a.as_str())
        .ok_or_else(|| IndicatorError::NotMemberReviewer(a.clone()))?;
    let ib = group
        .reviewer_position(b.as_str())
        .ok_or_else(|| IndicatorError::NotMemberReviewer(b.clone()))?;
    Ok(cosine(group.row(ia), group.row(ib), None))
}

fn cosine(
    a: &[crate::model::RatingEdge],
    b: &[crate::model::RatingEdge],
    cols: Option<&[usize]>,
) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    let mut same = true;
    let mut add = |x: f64, y: f64| {
        same &= x == y;
        dot += x * y;
        na += x * x;
        nb += y * y;
    };
    match cols {
        Some(cols) => cols.iter().for_each(|&c| add(a[c].value, b[c].value)),
        None => a.iter().zip(b).for_each(|(x, y)| add(x.value, y.value)),
    }
    if same {
        return 1.0;
    }
    // values are >= 1 so neither norm vanishes
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

/// Minimum pairwise value similarity over all member pairs.
pub fn gvs(group: &Biclique) -> Result<f64, IndicatorError> {
    if group.reviewer_count() < 2 {
        return Err(IndicatorError::GroupTooSmall(group.reviewer_count()));
    }
    let rows: Vec<usize> = (0..group.reviewer_count()).collect();
    Ok(gvs_within(group, &rows, None))
}

/// GVS of the sub-block `rows` x `cols` (all products when `cols` is `None`).
/// A single row is vacuously self-similar and scores 1.
pub(crate) fn gvs_within(group: &Biclique, rows: &[usize], cols: Option<&[usize]>) -> f64 {
    let mut min = 1.0f64;
    for (i, &a) in rows.iter().enumerate() {
        for &b in &rows[i + 1..] {
            min = min.min(cosine(group.row(a), group.row(b), cols));
        }
    }
    min
}

fn window_score(span: u32, max_tw: u32) -> f64 {
    if span > max_tw {
        0.0
    } else {
        1.0 - span as f64 / max_tw as f64
    }
}

/// Tightness of the group's rating times on one target product.
pub fn time_window(
    group: &Biclique,
    product: &ProductId,
    max_tw: u32,
) -> Result<f64, IndicatorError> {
    let col = group
        .product_position(product.as_str())
        .ok_or_else(|| IndicatorError::NotMemberProduct(product.clone()))?;
    let rows: Vec<usize> = (0..group.reviewer_count()).collect();
    Ok(time_window_within(group, &rows, col, max_tw))
}

fn time_window_within(group: &Biclique, rows: &[usize], col: usize, max_tw: u32) -> f64 {
    let (min, max) = rows
        .iter()
        .map(|&r| group.edge_at(r, col).time)
        .fold((u32::MAX, 0), |(lo, hi), t| (lo.min(t), hi.max(t)));
    window_score(max.saturating_sub(min), max_tw)
}

/// Largest time-window score over the group's products.
pub fn gts(group: &Biclique, max_tw: u32) -> f64 {
    let rows: Vec<usize> = (0..group.reviewer_count()).collect();
    let cols: Vec<usize> = (0..group.product_count()).collect();
    gts_within(group, &rows, &cols, max_tw)
}

pub(crate) fn gts_within(group: &Biclique, rows: &[usize], cols: &[usize], max_tw: u32) -> f64 {
    cols.iter()
        .map(|&c| time_window_within(group, rows, c, max_tw))
        .fold(0.0, f64::max)
}

/// Value-weighted share of spamicity across the group's edges.
pub fn grs(group: &Biclique) -> f64 {
    let (spam, total) = group.edges().iter().fold((0.0, 0.0), |(s, t), e| {
        (s + e.value * e.spamicity, t + e.value)
    });
    (spam / total).clamp(0.0, 1.0)
}

/// Fraction of members found in the global suspicious set.
pub fn gms(group: &Biclique, table: &SuspiciousnessTable) -> f64 {
    let hits = group
        .reviewers()
        .iter()
        .filter(|r| table.is_suspicious(r))
        .count();
    hits as f64 / group.reviewer_count() as f64
}

/// All four collusion indicators. Single-reviewer groups get GVS = 1.
pub fn collusion_scores(
    group: &Biclique,
    table: &SuspiciousnessTable,
    max_tw: u32,
) -> CollusionScores {
    let rows: Vec<usize> = (0..group.reviewer_count()).collect();
    CollusionScores {
        gvs: gvs_within(group, &rows, None),
        gts: gts(group, max_tw),
        grs: grs(group),
        gms: gms(group, table),
    }
}

/// Largest reviewer and product counts among a set of groups; the denominators
/// of GS and GPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cohort {
    pub max_reviewers: usize,
    pub max_products: usize,
}

impl Cohort {
    pub fn from_groups<'a>(groups: impl IntoIterator<Item = &'a Biclique>) -> Self {
        let mut c = Cohort::default();
        for g in groups {
            c.include(g);
        }
        c
    }

    pub fn include(&mut self, group: &Biclique) {
        self.max_reviewers = self.max_reviewers.max(group.reviewer_count());
        self.max_products = self.max_products.max(group.product_count());
    }

    fn check(&self, group: &Biclique) -> Result<(), IndicatorError> {
        if group.reviewer_count() > self.max_reviewers || group.product_count() > self.max_products
        {
            return Err(IndicatorError::NotInCohort {
                reviewers: group.reviewer_count(),
                products: group.product_count(),
            });
        }
        Ok(())
    }
}

pub fn gs(group: &Biclique, cohort: &Cohort) -> Result<f64, IndicatorError> {
    cohort.check(group)?;
    Ok(group.reviewer_count() as f64 / cohort.max_reviewers as f64)
}

pub fn gps(group: &Biclique, cohort: &Cohort) -> Result<f64, IndicatorError> {
    cohort.check(group)?;
    Ok(group.product_count() as f64 / cohort.max_products as f64)
}

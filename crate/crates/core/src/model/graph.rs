use super::{ModelError, ProductId, ReviewerId, DEFAULT_MAX_VALUE};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// One reviewer -> product rating relation.
///
/// `time` is whole days since the graph epoch; `spamicity` records how much of
/// the product's rating volume this reviewer produced through repeated votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingEdge {
    #[serde(rename = "r")]
    pub reviewer: ReviewerId,
    #[serde(rename = "p")]
    pub product: ProductId,
    #[serde(rename = "v")]
    pub value: f64,
    #[serde(rename = "t")]
    pub time: u32,
    #[serde(rename = "s")]
    pub spamicity: f64,
}

impl RatingEdge {
    pub(crate) fn validate(&self, max_value: f64) -> Result<(), ModelError> {
        if !(self.value >= 1.0 && self.value <= max_value) {
            return Err(ModelError::ValueOutOfRange {
                value: self.value,
                max: max_value,
            });
        }
        if !(0.0..=1.0).contains(&self.spamicity) {
            return Err(ModelError::SpamicityOutOfRange(self.spamicity));
        }
        Ok(())
    }
}

/// Bipartite reviewer x product graph. Immutable once built.
///
/// Reviewers and products are kept in lexicographic id order and edges are
/// sorted by (reviewer, product), so every traversal is deterministic. Internally
/// ids are interned to dense indices; the indices follow the sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingGraph {
    max_value: f64,
    epoch: Option<NaiveDate>,
    reviewers: Vec<ReviewerId>,
    products: Vec<ProductId>,
    edges: Vec<RatingEdge>,
    // edges[reviewer_offsets[r]..reviewer_offsets[r + 1]] belong to reviewer r
    reviewer_offsets: Vec<usize>,
    edge_product: Vec<u32>,
    // edge indices per product, ordered by reviewer
    product_edges: Vec<Vec<usize>>,
    reviewer_lookup: HashMap<ReviewerId, usize>,
    product_lookup: HashMap<ProductId, usize>,
}

impl RatingGraph {
    pub fn empty(max_value: f64) -> Self {
        GraphBuilder::new(max_value)
            .expect("valid max value")
            .build()
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn epoch(&self) -> Option<NaiveDate> {
        self.epoch
    }

    pub fn reviewers(&self) -> &[ReviewerId] {
        &self.reviewers
    }

    pub fn products(&self) -> &[ProductId] {
        &self.products
    }

    pub fn edges(&self) -> &[RatingEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn reviewer_index(&self, id: &str) -> Option<usize> {
        self.reviewer_lookup.get(id).copied()
    }

    pub fn product_index(&self, id: &str) -> Option<usize> {
        self.product_lookup.get(id).copied()
    }

    pub fn contains_reviewer(&self, id: &str) -> bool {
        self.reviewer_lookup.contains_key(id)
    }

    pub fn contains_product(&self, id: &str) -> bool {
        self.product_lookup.contains_key(id)
    }

    /// Edges of the reviewer at `index`, in product order.
    pub fn reviewer_edges(&self, index: usize) -> &[RatingEdge] {
        &self.edges[self.reviewer_offsets[index]..self.reviewer_offsets[index + 1]]
    }

    /// Product indices rated by the reviewer at `index`, ascending.
    pub fn reviewer_products(&self, index: usize) -> &[u32] {
        &self.edge_product[self.reviewer_offsets[index]..self.reviewer_offsets[index + 1]]
    }

    /// Edges on the product at `index`, in reviewer order.
    pub fn product_edges(&self, index: usize) -> impl ExactSizeIterator<Item = &RatingEdge> + '_ {
        self.product_edges[index].iter().map(|&e| &self.edges[e])
    }

    pub(crate) fn edge_by_index(&self, reviewer: usize, product: usize) -> Option<&RatingEdge> {
        let range = self.reviewer_offsets[reviewer]..self.reviewer_offsets[reviewer + 1];
        let local = self.edge_product[range.clone()]
            .binary_search(&(product as u32))
            .ok()?;
        Some(&self.edges[range.start + local])
    }

    pub fn edge(&self, reviewer: &str, product: &str) -> Option<&RatingEdge> {
        let r = self.reviewer_index(reviewer)?;
        let p = self.product_index(product)?;
        self.edge_by_index(r, p)
    }
}

/// Single-writer builder for [`RatingGraph`]. Rejects a second edge for an
/// existing (reviewer, product) pair; duplicates are resolved during ingest.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    max_value: f64,
    epoch: Option<NaiveDate>,
    edges: Vec<RatingEdge>,
    pairs: HashSet<(ReviewerId, ProductId)>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_VALUE).expect("default max value is valid")
    }
}

impl GraphBuilder {
    pub fn new(max_value: f64) -> Result<Self, ModelError> {
        if !(max_value >= 1.0 && max_value.is_finite()) {
            return Err(ModelError::BadMaxValue(max_value));
        }
        Ok(Self {
            max_value,
            epoch: None,
            edges: Vec::new(),
            pairs: HashSet::new(),
        })
    }

    pub fn epoch(mut self, epoch: Option<NaiveDate>) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn set_epoch(&mut self, epoch: Option<NaiveDate>) {
        self.epoch = epoch;
    }

    pub fn add_edge(&mut self, edge: RatingEdge) -> Result<(), ModelError> {
        edge.validate(self.max_value)?;
        if !self
            .pairs
            .insert((edge.reviewer.clone(), edge.product.clone()))
        {
            return Err(ModelError::DuplicateEdge(edge.reviewer, edge.product));
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn add(
        &mut self,
        reviewer: &str,
        product: &str,
        value: f64,
        time: u32,
        spamicity: f64,
    ) -> Result<(), ModelError> {
        self.add_edge(RatingEdge {
            reviewer: ReviewerId::new(reviewer)?,
            product: ProductId::new(product)?,
            value,
            time,
            spamicity,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn build(self) -> RatingGraph {
        let mut edges = self.edges;
        edges.sort_by(|a, b| {
            a.reviewer
                .cmp(&b.reviewer)
                .then_with(|| a.product.cmp(&b.product))
        });

        let mut reviewers: Vec<ReviewerId> = edges.iter().map(|e| e.reviewer.clone()).collect();
        reviewers.dedup();
        let mut products: Vec<ProductId> = edges.iter().map(|e| e.product.clone()).collect();
        products.sort();
        products.dedup();

        let reviewer_lookup: HashMap<ReviewerId, usize> = reviewers
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect();
        let product_lookup: HashMap<ProductId, usize> = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();

        let mut reviewer_offsets = Vec::with_capacity(reviewers.len() + 1);
        let mut edge_product = Vec::with_capacity(edges.len());
        let mut product_edges = vec![Vec::new(); products.len()];
        let mut current = None;
        for (i, edge) in edges.iter().enumerate() {
            let r = reviewer_lookup[&edge.reviewer];
            if current != Some(r) {
                reviewer_offsets.push(i);
                current = Some(r);
            }
            let p = product_lookup[&edge.product];
            edge_product.push(p as u32);
            product_edges[p].push(i);
        }
        reviewer_offsets.push(edges.len());

        RatingGraph {
            max_value: self.max_value,
            epoch: self.epoch,
            reviewers,
            products,
            edges,
            reviewer_offsets,
            edge_product,
            product_edges,
            reviewer_lookup,
            product_lookup,
        }
    }
}

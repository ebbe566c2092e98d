use super::{ModelError, ProductId, RatingEdge, RatingGraph, ReviewerId};
use serde::{Deserialize, Serialize};

/// Canonical identity of a biclique: sorted reviewer ids, then sorted product ids.
/// The derived ordering is the canonical output order everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BicliqueKey {
    pub reviewers: Vec<ReviewerId>,
    pub products: Vec<ProductId>,
}

impl BicliqueKey {
    pub fn is_sub_of(&self, other: &BicliqueKey) -> bool {
        is_sorted_subset(&self.reviewers, &other.reviewers)
            && is_sorted_subset(&self.products, &other.products)
    }
}

pub(crate) fn is_sorted_subset<T: Ord>(small: &[T], large: &[T]) -> bool {
    let mut it = large.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// A group of reviewers and products where every reviewer rated every product,
/// together with the induced edges.
///
/// Edges are stored row-major: the edge for reviewer `i` and product `j` is at
/// `i * products.len() + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BicliqueRecord", into = "BicliqueRecord")]
pub struct Biclique {
    reviewers: Vec<ReviewerId>,
    products: Vec<ProductId>,
    edges: Vec<RatingEdge>,
}

impl Biclique {
    /// Builds the biclique induced by the two id sets, checking completeness.
    pub fn new<R, P>(reviewers: R, products: P, graph: &RatingGraph) -> Result<Self, ModelError>
    where
        R: IntoIterator<Item = ReviewerId>,
        P: IntoIterator<Item = ProductId>,
    {
        let mut reviewers: Vec<ReviewerId> = reviewers.into_iter().collect();
        let mut products: Vec<ProductId> = products.into_iter().collect();
        reviewers.sort();
        reviewers.dedup();
        products.sort();
        products.dedup();
        if reviewers.is_empty() || products.is_empty() {
            return Err(ModelError::EmptyBiclique);
        }

        let mut ri = Vec::with_capacity(reviewers.len());
        for r in &reviewers {
            ri.push(
                graph
                    .reviewer_index(r.as_str())
                    .ok_or_else(|| ModelError::UnknownReviewer(r.clone()))?,
            );
        }
        let mut pi = Vec::with_capacity(products.len());
        for p in &products {
            pi.push(
                graph
                    .product_index(p.as_str())
                    .ok_or_else(|| ModelError::UnknownProduct(p.clone()))?,
            );
        }
        Self::from_indices(graph, &ri, &pi)
    }

    /// Same as [`Biclique::new`] but from graph indices. Index slices must be
    /// ascending, which keeps the id vectors sorted.
    pub(crate) fn from_indices(
        graph: &RatingGraph,
        reviewers: &[usize],
        products: &[usize],
    ) -> Result<Self, ModelError> {
        if reviewers.is_empty() || products.is_empty() {
            return Err(ModelError::EmptyBiclique);
        }
        debug_assert!(reviewers.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(products.windows(2).all(|w| w[0] < w[1]));
        let mut edges = Vec::with_capacity(reviewers.len() * products.len());
        for &r in reviewers {
            for &p in products {
                match graph.edge_by_index(r, p) {
                    Some(e) => edges.push(e.clone()),
                    None => {
                        return Err(ModelError::MissingEdge(
                            graph.reviewers()[r].clone(),
                            graph.products()[p].clone(),
                        ))
                    }
                }
            }
        }
        Ok(Self {
            reviewers: reviewers
                .iter()
                .map(|&r| graph.reviewers()[r].clone())
                .collect(),
            products: products
                .iter()
                .map(|&p| graph.products()[p].clone())
                .collect(),
            edges,
        })
    }

    /// Restriction to a subset of local reviewer/product positions (ascending).
    pub(crate) fn restrict(&self, reviewers: &[usize], products: &[usize]) -> Self {
        let width = self.products.len();
        let mut edges = Vec::with_capacity(reviewers.len() * products.len());
        for &r in reviewers {
            for &p in products {
                edges.push(self.edges[r * width + p].clone());
            }
        }
        Self {
            reviewers: reviewers
                .iter()
                .map(|&r| self.reviewers[r].clone())
                .collect(),
            products: products.iter().map(|&p| self.products[p].clone()).collect(),
            edges,
        }
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

    pub fn reviewer_count(&self) -> usize {
        self.reviewers.len()
    }

    pub fn product_count(&self) -> usize {
        self.products.len()
    }

    /// Edge of the `reviewer`-th member on the `product`-th target.
    pub fn edge_at(&self, reviewer: usize, product: usize) -> &RatingEdge {
        &self.edges[reviewer * self.products.len() + product]
    }

    /// Rating row of the `reviewer`-th member, in product order.
    pub fn row(&self, reviewer: usize) -> &[RatingEdge] {
        let w = self.products.len();
        &self.edges[reviewer * w..(reviewer + 1) * w]
    }

    pub fn reviewer_position(&self, id: &str) -> Option<usize> {
        self.reviewers.binary_search_by(|r| r.as_str().cmp(id)).ok()
    }

    pub fn product_position(&self, id: &str) -> Option<usize> {
        self.products.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    pub fn key(&self) -> BicliqueKey {
        BicliqueKey {
            reviewers: self.reviewers.clone(),
            products: self.products.clone(),
        }
    }

    pub fn is_sub_of(&self, other: &Biclique) -> bool {
        is_sorted_subset(&self.reviewers, &other.reviewers)
            && is_sorted_subset(&self.products, &other.products)
    }
}

#[derive(Serialize, Deserialize)]
struct BicliqueRecord {
    reviewers: Vec<ReviewerId>,
    products: Vec<ProductId>,
    edges: Vec<RatingEdge>,
}

impl From<Biclique> for BicliqueRecord {
    fn from(b: Biclique) -> Self {
        Self {
            reviewers: b.reviewers,
            products: b.products,
            edges: b.edges,
        }
    }
}

impl TryFrom<BicliqueRecord> for Biclique {
    type Error = ModelError;

    fn try_from(rec: BicliqueRecord) -> Result<Self, Self::Error> {
        let BicliqueRecord {
            mut reviewers,
            mut products,
            edges,
        } = rec;
        reviewers.sort();
        reviewers.dedup();
        products.sort();
        products.dedup();
        if reviewers.is_empty() || products.is_empty() {
            return Err(ModelError::EmptyBiclique);
        }
        let expected = reviewers.len() * products.len();
        if edges.len() != expected {
            return Err(ModelError::EdgeCount {
                expected,
                found: edges.len(),
            });
        }
        for (i, e) in edges.iter().enumerate() {
            let want_r = &reviewers[i / products.len()];
            let want_p = &products[i % products.len()];
            if &e.reviewer != want_r || &e.product != want_p {
                return Err(ModelError::EdgeOrder {
                    index: i,
                    found_r: e.reviewer.clone(),
                    found_p: e.product.clone(),
                    want_r: want_r.clone(),
                    want_p: want_p.clone(),
                });
            }
            if !(e.value >= 1.0) {
                return Err(ModelError::ValueOutOfRange {
                    value: e.value,
                    max: f64::INFINITY,
                });
            }
            if !(0.0..=1.0).contains(&e.spamicity) {
                return Err(ModelError::SpamicityOutOfRange(e.spamicity));
            }
        }
        Ok(Self {
            reviewers,
            products,
            edges,
        })
    }
}

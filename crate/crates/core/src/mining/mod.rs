//! Candidate group mining.
//!
//! [`enumerate_candidates`] lists every maximal biclique of the rating graph
//! above the size bounds, using closed frequent-itemset mining (reviewers are
//! transactions, products are items). [`find_sub_bicliques`] searches inside a
//! rejected group for tighter sub-groups by merging single-rating fragments
//! bottom-up, keeping only merges whose value and time similarity clear the
//! collusion threshold.

mod closed;
mod sub;

pub use closed::enumerate_candidates;
pub use sub::find_sub_bicliques;

use crate::model::{Biclique, ModelError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MiningError {
    #[error(
        "enumeration exceeded the cap of {cap} groups; the graph is too dense for these bounds"
    )]
    BudgetExceeded { cap: usize },
    #[error("size bounds must be at least 2 (min_r = {min_r}, min_p = {min_p})")]
    BadBounds { min_r: usize, min_p: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Deduplicated, canonically sorted candidate groups.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateSet {
    bicliques: Vec<Biclique>,
}

impl CandidateSet {
    /// Sorts canonically and drops repeated identities.
    pub fn new(mut bicliques: Vec<Biclique>) -> Self {
        bicliques.sort_by(|a, b| {
            a.reviewers()
                .cmp(b.reviewers())
                .then_with(|| a.products().cmp(b.products()))
        });
        bicliques.dedup_by(|a, b| a.reviewers() == b.reviewers() && a.products() == b.products());
        Self { bicliques }
    }

    pub fn bicliques(&self) -> &[Biclique] {
        &self.bicliques
    }

    pub fn into_vec(self) -> Vec<Biclique> {
        self.bicliques
    }

    pub fn len(&self) -> usize {
        self.bicliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bicliques.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Biclique> {
        self.bicliques.iter()
    }
}

impl<'a> IntoIterator for &'a CandidateSet {
    type Item = &'a Biclique;
    type IntoIter = std::slice::Iter<'a, Biclique>;

    fn into_iter(self) -> Self::IntoIter {
        self.bicliques.iter()
    }
}

impl From<&CandidateSet> for crate::indicators::Cohort {
    fn from(set: &CandidateSet) -> Self {
        crate::indicators::Cohort::from_groups(set.iter())
    }
}

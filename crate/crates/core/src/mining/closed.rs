use super::{CandidateSet, MiningError};
use crate::model::{Biclique, RatingGraph};
use crate::par;
use fixedbitset::FixedBitSet;
use std::sync::atomic::{AtomicUsize, Ordering};

struct Miner<'g> {
    graph: &'g RatingGraph,
    // reviewers who rated each product
    tids: Vec<FixedBitSet>,
    // products rated by each reviewer
    items: Vec<FixedBitSet>,
    min_r: usize,
    min_p: usize,
    cap: usize,
    produced: AtomicUsize,
}

type Closed = (Vec<usize>, Vec<usize>);

/// Every maximal biclique `(R, P)` with `|R| >= min_r` and `|P| >= min_p`:
/// `P` is exactly the set of products all of `R` rated and `R` is exactly the
/// set of reviewers who rated all of `P`. Output is canonically sorted.
///
/// The search is prefix-preserving closure extension over product sets, so
/// each closed set is visited once; top-level branches run in parallel.
pub fn enumerate_candidates(
    graph: &RatingGraph,
    min_r: usize,
    min_p: usize,
    cap: usize,
) -> Result<CandidateSet, MiningError> {
    if min_r < 2 || min_p < 2 {
        return Err(MiningError::BadBounds { min_r, min_p });
    }
    let n_r = graph.reviewers().len();
    let n_p = graph.products().len();
    if n_r < min_r || n_p < min_p {
        return Ok(CandidateSet::default());
    }

    let mut tids = vec![FixedBitSet::with_capacity(n_r); n_p];
    let mut items = vec![FixedBitSet::with_capacity(n_p); n_r];
    for (r, row) in items.iter_mut().enumerate() {
        for &p in graph.reviewer_products(r) {
            row.insert(p as usize);
            tids[p as usize].insert(r);
        }
    }
    let miner = Miner {
        graph,
        tids,
        items,
        min_r,
        min_p,
        cap,
        produced: AtomicUsize::new(0),
    };

    let mut all_reviewers = FixedBitSet::with_capacity(n_r);
    all_reviewers.insert_range(..);
    let root = miner.closure(&all_reviewers);

    let mut found: Vec<Closed> = Vec::new();
    miner.emit(&root, &all_reviewers, &mut found)?;

    let branches = par::try_map(&(0..n_p).collect::<Vec<_>>(), |&e| {
        let mut out = Vec::new();
        miner.extend(&root, &all_reviewers, e, &mut out)?;
        Ok::<_, MiningError>(out)
    })?;
    found.extend(branches.into_iter().flatten());
    found.sort_unstable();

    let bicliques = par::try_map(&found, |(r, p)| Biclique::from_indices(graph, r, p))?;
    Ok(CandidateSet::new(bicliques))
}

impl Miner<'_> {
    fn closure(&self, reviewers: &FixedBitSet) -> FixedBitSet {
        let mut it = reviewers.ones();
        let mut acc = match it.next() {
            Some(r) => self.items[r].clone(),
            None => {
                let mut all = FixedBitSet::with_capacity(self.graph.products().len());
                all.insert_range(..);
                return all;
            }
        };
        for r in it {
            acc.intersect_with(&self.items[r]);
        }
        acc
    }

    fn emit(
        &self,
        products: &FixedBitSet,
        reviewers: &FixedBitSet,
        out: &mut Vec<Closed>,
    ) -> Result<(), MiningError> {
        if products.count_ones(..) < self.min_p || reviewers.count_ones(..) < self.min_r {
            return Ok(());
        }
        if self.produced.fetch_add(1, Ordering::Relaxed) >= self.cap {
            return Err(MiningError::BudgetExceeded { cap: self.cap });
        }
        out.push((reviewers.ones().collect(), products.ones().collect()));
        Ok(())
    }

    /// Try adding item `e` to the closed set `products` (supported by
    /// `reviewers`); on success recurse into items after `e`.
    fn extend(
        &self,
        products: &FixedBitSet,
        reviewers: &FixedBitSet,
        e: usize,
        out: &mut Vec<Closed>,
    ) -> Result<(), MiningError> {
        if products.contains(e) {
            return Ok(());
        }
        let mut support = reviewers.clone();
        support.intersect_with(&self.tids[e]);
        if support.count_ones(..) < self.min_r {
            return Ok(());
        }
        let closed = self.closure(&support);
        // prefix-preserving: nothing below e may enter the closure
        if closed.count_ones(..e) != products.count_ones(..e) {
            return Ok(());
        }
        self.emit(&closed, &support, out)?;
        for next in e + 1..self.graph.products().len() {
            self.extend(&closed, &support, next, out)?;
        }
        Ok(())
    }
}

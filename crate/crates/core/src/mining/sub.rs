use super::MiningError;
use crate::indicators::{gts_within, gvs_within};
use crate::model::{Biclique, DetectionConfig};
use crate::par;
use fixedbitset::FixedBitSet;
use std::collections::{HashMap, HashSet};

/// A sub-block of the parent: local reviewer rows x local product columns.
/// Any such block of a biclique is itself complete.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Fragment {
    rows: FixedBitSet,
    cols: FixedBitSet,
}

impl Fragment {
    fn seed(n_rows: usize, n_cols: usize, row: usize, col: usize) -> Self {
        let mut rows = FixedBitSet::with_capacity(n_rows);
        let mut cols = FixedBitSet::with_capacity(n_cols);
        rows.insert(row);
        cols.insert(col);
        Self { rows, cols }
    }

    fn merge(&self, other: &Fragment) -> Fragment {
        let mut m = self.clone();
        m.rows.union_with(&other.rows);
        m.cols.union_with(&other.cols);
        m
    }

    fn sort_key(&self) -> (Vec<usize>, Vec<usize>) {
        (self.rows.ones().collect(), self.cols.ones().collect())
    }
}

/// Collusive sub-groups hidden inside `parent`.
///
/// Starts from one fragment per rating and repeatedly merges every pair of
/// surviving fragments. A merge survives when both its value similarity and
/// its time similarity reach `config.delta`. A fragment that took part in no
/// surviving merge is final; finals meeting the size bounds are returned,
/// excluding the parent itself. Fragments already seen are never revisited, so
/// the loop terminates. `config.candidate_cap` bounds the number of distinct
/// fragments screened.
pub fn find_sub_bicliques(
    parent: &Biclique,
    config: &DetectionConfig,
) -> Result<Vec<Biclique>, MiningError> {
    let n_rows = parent.reviewer_count();
    let n_cols = parent.product_count();
    if n_rows < config.min_r || n_cols < config.min_p {
        return Ok(Vec::new());
    }
    let screen = |f: &Fragment| {
        let rows: Vec<usize> = f.rows.ones().collect();
        let cols: Vec<usize> = f.cols.ones().collect();
        gvs_within(parent, &rows, Some(&cols)) >= config.delta
            && gts_within(parent, &rows, &cols, config.max_tw) >= config.delta
    };

    let mut current: Vec<Fragment> = (0..n_rows)
        .flat_map(|r| (0..n_cols).map(move |c| Fragment::seed(n_rows, n_cols, r, c)))
        .collect();
    let mut seen: HashSet<Fragment> = current.iter().cloned().collect();
    let mut verdicts: HashMap<Fragment, bool> = HashMap::new();
    let mut finals: Vec<Fragment> = Vec::new();

    while !current.is_empty() {
        // screen every distinct merge of this round once
        let fresh: Vec<HashSet<Fragment>> = par::map_range(current.len(), |i| {
            current[i + 1..]
                .iter()
                .map(|other| current[i].merge(other))
                .filter(|m| !verdicts.contains_key(m))
                .collect()
        });
        let mut fresh: Vec<Fragment> = fresh
            .into_iter()
            .flatten()
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        if verdicts.len() + fresh.len() > config.candidate_cap {
            return Err(MiningError::BudgetExceeded {
                cap: config.candidate_cap,
            });
        }
        fresh.sort_unstable();
        let passed = par::map(&fresh, |f| screen(f));
        verdicts.extend(fresh.into_iter().zip(passed));

        let outcomes: Vec<(Vec<usize>, Vec<Fragment>)> = par::map_range(current.len(), |i| {
            let mut absorbed = Vec::new();
            let mut grown = Vec::new();
            for (off, other) in current[i + 1..].iter().enumerate() {
                let m = current[i].merge(other);
                if !verdicts[&m] {
                    continue;
                }
                absorbed.push(i + 1 + off);
                grown.push(m);
            }
            (absorbed, grown)
        });

        let mut processed = vec![false; current.len()];
        let mut next: Vec<Fragment> = Vec::new();
        for (i, (partners, grown)) in outcomes.into_iter().enumerate() {
            for (j, m) in partners.into_iter().zip(grown) {
                // a fragment is only absorbed by a strictly larger merge
                if m != current[i] {
                    processed[i] = true;
                }
                if m != current[j] {
                    processed[j] = true;
                }
                if seen.insert(m.clone()) {
                    next.push(m);
                }
            }
        }
        for (f, done) in current.into_iter().zip(processed) {
            if !done {
                finals.push(f);
            }
        }
        next.sort_by_cached_key(Fragment::sort_key);
        current = next;
    }

    let mut out: Vec<(Vec<usize>, Vec<usize>)> = finals
        .iter()
        .filter(|f| f.rows.count_ones(..) >= config.min_r && f.cols.count_ones(..) >= config.min_p)
        .filter(|f| f.rows.count_ones(..) < n_rows || f.cols.count_ones(..) < n_cols)
        .map(Fragment::sort_key)
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out.iter().map(|(r, c)| parent.restrict(r, c)).collect())
}

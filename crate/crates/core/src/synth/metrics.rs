use super::{LabeledDataset, SynthError, TruthGroup};
use crate::detector::{Detector, ScoredGroup};
use crate::ingest::{build_graph, IngestOptions};
use crate::model::{Biclique, DetectionConfig};
use crate::par;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Minimum reviewer-set Jaccard overlap for a retrieved group to count as a
/// truth group.
pub const DEFAULT_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    /// Set when the denominator was empty and `value` is the conventional 1.
    pub vacuous: bool,
}

impl Metric {
    fn ratio(hits: usize, total: usize) -> Self {
        if total == 0 {
            Metric {
                value: 1.0,
                vacuous: true,
            }
        } else {
            Metric {
                value: hits as f64 / total as f64,
                vacuous: false,
            }
        }
    }
}

/// Retrieved group vs truth group: identical groups always match; otherwise
/// the reviewer sets need Jaccard overlap of at least `jaccard` and the
/// product sets must share a product.
pub fn group_matches(b: &Biclique, t: &TruthGroup, jaccard: f64) -> bool {
    let r: BTreeSet<&str> = b.reviewers().iter().map(|x| x.as_str()).collect();
    let p: BTreeSet<&str> = b.products().iter().map(|x| x.as_str()).collect();
    let tr: BTreeSet<&str> = t.reviewers.iter().map(|x| x.as_str()).collect();
    let tp: BTreeSet<&str> = t.products.iter().map(|x| x.as_str()).collect();
    if r == tr && p == tp {
        return true;
    }
    let inter = r.intersection(&tr).count();
    let union = r.union(&tr).count();
    union > 0 && inter as f64 / union as f64 >= jaccard && !p.is_disjoint(&tp)
}

pub fn precision_with(retrieved: &[Biclique], truth: &[TruthGroup], jaccard: f64) -> Metric {
    let hits = retrieved
        .iter()
        .filter(|b| truth.iter().any(|t| group_matches(b, t, jaccard)))
        .count();
    Metric::ratio(hits, retrieved.len())
}

pub fn recall_with(retrieved: &[Biclique], truth: &[TruthGroup], jaccard: f64) -> Metric {
    let hits = truth
        .iter()
        .filter(|t| retrieved.iter().any(|b| group_matches(b, t, jaccard)))
        .count();
    Metric::ratio(hits, truth.len())
}

pub fn precision(retrieved: &[Biclique], truth: &[TruthGroup]) -> Metric {
    precision_with(retrieved, truth, DEFAULT_JACCARD)
}

pub fn recall(retrieved: &[Biclique], truth: &[TruthGroup]) -> Metric {
    recall_with(retrieved, truth, DEFAULT_JACCARD)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub retrieved: usize,
    pub precision: Metric,
    pub recall: Metric,
}

/// Detection at each threshold over one mined graph. Ingest pruning and the
/// rest of the run parameters come from `config`.
pub fn threshold_sweep(
    dataset: &LabeledDataset,
    config: &DetectionConfig,
    deltas: &[f64],
) -> Result<Vec<SweepPoint>, SynthError> {
    if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) || deltas.windows(2).any(|w| w[0] > w[1]) {
        return Err(SynthError::BadDeltas);
    }
    let graph = build_graph(
        &dataset.raw,
        &IngestOptions {
            reviewer_min: config.prune_reviewer_min,
            product_min: config.prune_product_min,
            max_value: config.max_value,
        },
    )?;
    let detector = Detector::new(&graph, config)?;
    let points = par::try_map(deltas, |&delta| {
        let result = detector.clone().run(delta, config.weights)?;
        let retrieved: Vec<Biclique> = result.collusive.into_iter().map(|g| g.biclique).collect();
        Ok::<_, SynthError>(SweepPoint {
            delta,
            retrieved: retrieved.len(),
            precision: precision(&retrieved, &dataset.truth),
            recall: recall(&retrieved, &dataset.truth),
        })
    })?;
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupClass {
    Injected,
    Honest,
    All,
}

impl GroupClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupClass::Injected => "injected",
            GroupClass::Honest => "honest",
            GroupClass::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub indicator: String,
    pub class: GroupClass,
    pub percent: f64,
    pub value: f64,
}

/// `(value, percent of values <= value)` at every sample, ascending.
pub fn cumulative_distribution(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| (x, 100.0 * (i + 1) as f64 / n))
        .collect()
}

/// Cumulative distribution of GVS, GTS, GRS and GMS over scored groups, split
/// into injected and honest groups when `truth` is given.
pub fn cumulative_rows(groups: &[ScoredGroup], truth: Option<&[TruthGroup]>) -> Vec<CumulativeRow> {
    let class_of = |g: &ScoredGroup| match truth {
        None => GroupClass::All,
        Some(t)
            if t.iter()
                .any(|t| group_matches(&g.biclique, t, DEFAULT_JACCARD)) =>
        {
            GroupClass::Injected
        }
        Some(_) => GroupClass::Honest,
    };
    let classes: Vec<GroupClass> = groups.iter().map(class_of).collect();
    let wanted: &[GroupClass] = if truth.is_some() {
        &[GroupClass::Injected, GroupClass::Honest]
    } else {
        &[GroupClass::All]
    };
    let mut rows = Vec::new();
    for (name, pick) in [
        (
            "GVS",
            (|g: &ScoredGroup| g.report.gvs) as fn(&ScoredGroup) -> f64,
        ),
        ("GTS", |g| g.report.gts),
        ("GRS", |g| g.report.grs),
        ("GMS", |g| g.report.gms),
    ] {
        for &class in wanted {
            let values: Vec<f64> = groups
                .iter()
                .zip(&classes)
                .filter(|(_, c)| **c == class)
                .map(|(g, _)| pick(g))
                .collect();
            rows.extend(
                cumulative_distribution(&values)
                    .into_iter()
                    .map(|(value, percent)| CumulativeRow {
                        indicator: name.to_string(),
                        class,
                        percent,
                        value,
                    }),
            );
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphBuilder, ProductId, RatingGraph, ReviewerId};

    fn truth(r: &[&str], p: &[&str]) -> TruthGroup {
        TruthGroup {
            reviewers: r.iter().map(|x| ReviewerId::new(*x).unwrap()).collect(),
            products: p.iter().map(|x| ProductId::new(*x).unwrap()).collect(),
        }
    }

    fn full_graph() -> RatingGraph {
        let mut b = GraphBuilder::default();
        for r in ["a", "b", "c", "d", "e", "f"] {
            for p in ["p", "q", "s"] {
                b.add(r, p, 5.0, 0, 0.0).unwrap();
            }
        }
        b.build()
    }

    fn group(g: &RatingGraph, r: &[&str], p: &[&str]) -> Biclique {
        Biclique::new(
            r.iter().map(|x| ReviewerId::new(*x).unwrap()),
            p.iter().map(|x| ProductId::new(*x).unwrap()),
            g,
        )
        .unwrap()
    }

    #[test]
    fn precision_four_of_five() {
        let g = full_graph();
        let t = [
            truth(&["a", "b"], &["p", "q"]),
            truth(&["c", "d"], &["p", "q"]),
        ];
        let retrieved = vec![
            group(&g, &["a", "b"], &["p", "q"]),
            group(&g, &["a", "b", "e"], &["q"]),
            group(&g, &["c", "d"], &["s", "q"]),
            group(&g, &["c", "d", "f"], &["p"]),
            group(&g, &["e", "f"], &["p", "q"]),
        ];
        assert!((precision(&retrieved, &t).value - 0.8).abs() < 1e-12);
        assert_eq!(recall(&retrieved, &t).value, 1.0);
    }

    #[test]
    fn vacuous_conventions() {
        let g = full_graph();
        let p = precision(&[], &[truth(&["a"], &["p"])]);
        assert_eq!((p.value, p.vacuous), (1.0, true));
        let r = recall(&[group(&g, &["a", "b"], &["p"])], &[]);
        assert_eq!((r.value, r.vacuous), (1.0, true));
    }

    #[test]
    fn recall_five_of_seven() {
        let g = full_graph();
        let names = ["a", "b", "c", "d", "e", "f", "x"];
        let t: Vec<TruthGroup> = names.iter().map(|n| truth(&[n], &["p"])).collect();
        let retrieved: Vec<Biclique> = names[..5].iter().map(|n| group(&g, &[n], &["p"])).collect();
        assert!((recall(&retrieved, &t).value - 0.7143).abs() < 1e-4);
    }

    #[test]
    fn exact_group_matches_at_any_jaccard() {
        let g = full_graph();
        let b = group(&g, &["a", "b"], &["p"]);
        assert!(group_matches(&b, &truth(&["a", "b"], &["p"]), 1.5));
        // half overlap but no shared product
        assert!(!group_matches(&b, &truth(&["a", "c"], &["q"]), 0.1));
        assert!(group_matches(
            &group(&g, &["a", "b", "c"], &["p"]),
            &truth(&["a", "b"], &["p", "s"]),
            0.5
        ));
    }

    #[test]
    fn cumulative_points() {
        let pts = cumulative_distribution(&[0.5, 0.1, 0.3, 0.9]);
        assert_eq!(
            pts,
            vec![(0.1, 25.0), (0.3, 50.0), (0.5, 75.0), (0.9, 100.0)]
        );
        assert!(cumulative_distribution(&[]).is_empty());
    }
}

//! The detection loop.
//!
//! Candidates are mined once and scored with the weight-independent collusion
//! indicators. Each run then walks a work queue: a group whose DOC exceeds the
//! threshold is collusive; a group below it whose damaging impact is also
//! below it is dropped; anything else is searched for collusive sub-groups,
//! which join the queue. Canonical identities are never enqueued twice.
//!
//! A [`DetectionResult`] keeps every group the run examined together with the
//! sub-groups found at its threshold, so it can be replayed under other weights
//! or thresholds without re-mining (see [`Detector::from_result`]).

use crate::indicators::{collusion_scores, gps, gs, Cohort, CollusionScores, SuspiciousnessTable};
use crate::mining::{enumerate_candidates, find_sub_bicliques, MiningError};
use crate::model::{
    Biclique, BicliqueKey, DetectionConfig, IndicatorReport, ModelError, RatingGraph, ReviewerId,
    Weights,
};
use crate::par;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Config(#[from] ModelError),
    #[error("cached result is inconsistent: {0}")]
    BadCache(String),
}

/// Weighted sum of the four collusion indicators. Weights are value, time,
/// spamicity, members; they must be non-negative and sum to 1.
pub fn doc(scores: [f64; 4], weights: [f64; 4]) -> Result<f64, ModelError> {
    let w = Weights::try_from(weights)?;
    Ok(doc_with(
        &CollusionScores {
            gvs: scores[0],
            gts: scores[1],
            grs: scores[2],
            gms: scores[3],
        },
        &w,
    ))
}

pub(crate) fn doc_with(scores: &CollusionScores, weights: &Weights) -> f64 {
    let s = scores.as_array();
    let w = weights.as_array();
    s.iter()
        .zip(w)
        .map(|(s, w)| s * w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Damaging impact: mean of target size and group size.
pub fn di(gps: f64, gs: f64) -> f64 {
    (gps + gs) / 2.0
}

pub fn report_for(
    group: &Biclique,
    scores: &CollusionScores,
    cohort: &Cohort,
    weights: &Weights,
) -> IndicatorReport {
    // members of the run always fit the cohort they were added to
    let gs = gs(group, cohort).unwrap_or(1.0);
    let gps = gps(group, cohort).unwrap_or(1.0);
    IndicatorReport {
        gvs: scores.gvs,
        gts: scores.gts,
        grs: scores.grs,
        gms: scores.gms,
        gs,
        gps,
        doc: doc_with(scores, weights),
        di: di(gps, gs),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub biclique: Biclique,
    pub report: IndicatorReport,
}

/// Sub-groups found inside a group at a given threshold; indices point into
/// [`DetectionResult::groups`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub delta: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExaminedGroup {
    pub biclique: Biclique,
    pub scores: CollusionScores,
    /// `None` for mined candidates.
    pub parent: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expansions: Vec<Expansion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub config: DetectionConfig,
    /// Sorted by descending DOC, then canonical identity.
    pub collusive: Vec<ScoredGroup>,
    pub examined_count: usize,
    pub expanded_count: usize,
    pub cohort: Cohort,
    pub suspicious: Vec<ReviewerId>,
    /// Every group examined by the run, candidates first.
    pub groups: Vec<ExaminedGroup>,
}

impl DetectionResult {
    /// Full report for the examined group at `index` under this run's weights.
    pub fn report(&self, index: usize) -> IndicatorReport {
        let g = &self.groups[index];
        report_for(&g.biclique, &g.scores, &self.cohort, &self.config.weights)
    }

    pub fn collusive_keys(&self) -> Vec<BicliqueKey> {
        self.collusive.iter().map(|g| g.biclique.key()).collect()
    }
}

/// Mined, scored candidates plus every sub-group discovered so far.
#[derive(Clone)]
pub struct Detector<'g> {
    graph: &'g RatingGraph,
    config: DetectionConfig,
    table: SuspiciousnessTable,
    groups: Vec<ExaminedGroup>,
    index: HashMap<BicliqueKey, usize>,
    roots: Vec<usize>,
}

impl<'g> Detector<'g> {
    /// Mines and scores the candidates of `graph`.
    pub fn new(graph: &'g RatingGraph, config: &DetectionConfig) -> Result<Self, DetectError> {
        config.validate()?;
        let table = SuspiciousnessTable::build(graph);
        let candidates =
            enumerate_candidates(graph, config.min_r, config.min_p, config.candidate_cap)?;
        let bicliques = candidates.into_vec();
        let scores = par::map(&bicliques, |b| collusion_scores(b, &table, config.max_tw));
        let mut det = Self {
            graph,
            config: config.clone(),
            table,
            groups: Vec::with_capacity(bicliques.len()),
            index: HashMap::with_capacity(bicliques.len()),
            roots: Vec::new(),
        };
        for (b, s) in bicliques.into_iter().zip(scores) {
            let i = det.insert(b, s, None);
            det.roots.push(i);
        }
        Ok(det)
    }

    /// Restores a detector from a saved result. Mining bounds, time window and
    /// scale of `config` must match the ones the result was produced with.
    pub fn from_result(
        graph: &'g RatingGraph,
        config: &DetectionConfig,
        result: &DetectionResult,
    ) -> Result<Self, DetectError> {
        config.validate()?;
        if !Self::compatible(config, &result.config) {
            return Err(DetectError::BadCache(
                "mining bounds, time window or rating scale differ from the cached run".into(),
            ));
        }
        let table = SuspiciousnessTable::build(graph);
        let mut det = Self {
            graph,
            config: config.clone(),
            table,
            groups: Vec::with_capacity(result.groups.len()),
            index: HashMap::with_capacity(result.groups.len()),
            roots: Vec::new(),
        };
        for (i, g) in result.groups.iter().enumerate() {
            let key = g.biclique.key();
            if det.index.insert(key, i).is_some() {
                return Err(DetectError::BadCache(format!("group {i} appears twice")));
            }
            for r in g.biclique.reviewers() {
                if !graph.contains_reviewer(r.as_str()) {
                    return Err(DetectError::BadCache(format!("unknown reviewer {r}")));
                }
            }
            if let Some(p) = g.parent {
                if p >= result.groups.len() {
                    return Err(DetectError::BadCache(format!(
                        "group {i} has bad parent {p}"
                    )));
                }
            } else {
                det.roots.push(i);
            }
            for e in &g.expansions {
                if e.children.iter().any(|&c| c >= result.groups.len()) {
                    return Err(DetectError::BadCache(format!(
                        "group {i} has a bad child index"
                    )));
                }
            }
            det.groups.push(g.clone());
        }
        Ok(det)
    }

    /// Whether a result computed under `cached` can serve a run under `wanted`.
    pub fn compatible(wanted: &DetectionConfig, cached: &DetectionConfig) -> bool {
        wanted.min_r == cached.min_r
            && wanted.min_p == cached.min_p
            && wanted.max_tw == cached.max_tw
            && wanted.max_value == cached.max_value
    }

    pub fn graph(&self) -> &RatingGraph {
        self.graph
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.config
    }

    pub fn suspiciousness(&self) -> &SuspiciousnessTable {
        &self.table
    }

    pub fn candidate_count(&self) -> usize {
        self.roots.len()
    }

    fn insert(
        &mut self,
        biclique: Biclique,
        scores: CollusionScores,
        parent: Option<usize>,
    ) -> usize {
        let i = self.groups.len();
        self.index.insert(biclique.key(), i);
        self.groups.push(ExaminedGroup {
            biclique,
            scores,
            parent,
            expansions: Vec::new(),
        });
        i
    }

    fn cached_children(&self, group: usize, delta: f64) -> Option<&[usize]> {
        self.groups[group]
            .expansions
            .iter()
            .find(|e| e.delta == delta)
            .map(|e| e.children.as_slice())
    }

    /// Sub-groups of each parent at `delta`, mining only the uncached ones.
    fn expand(&mut self, parents: &[usize], delta: f64) -> Result<Vec<Vec<usize>>, DetectError> {
        let missing: Vec<usize> = parents
            .iter()
            .copied()
            .filter(|&p| self.cached_children(p, delta).is_none())
            .collect();
        let screen = DetectionConfig {
            delta,
            ..self.config.clone()
        };
        let found = {
            let groups = &self.groups;
            par::try_map(&missing, |&p| {
                find_sub_bicliques(&groups[p].biclique, &screen)
            })?
        };
        for (&parent, subs) in missing.iter().zip(found) {
            let fresh: Vec<&Biclique> = subs
                .iter()
                .filter(|b| !self.index.contains_key(&b.key()))
                .collect();
            let scores = {
                let (table, max_tw) = (&self.table, self.config.max_tw);
                par::map(&fresh, |b| collusion_scores(b, table, max_tw))
            };
            let mut scores = scores.into_iter();
            let mut children = Vec::with_capacity(subs.len());
            for b in subs {
                let idx = match self.index.get(&b.key()) {
                    Some(&i) => i,
                    None => {
                        let s = scores.next().expect("one score per fresh group");
                        self.insert(b, s, Some(parent))
                    }
                };
                children.push(idx);
            }
            self.groups[parent]
                .expansions
                .push(Expansion { delta, children });
        }
        Ok(parents
            .iter()
            .map(|&p| self.cached_children(p, delta).unwrap_or_default().to_vec())
            .collect())
    }

    /// One pass of the detection loop at threshold `delta` with DOC `weights`.
    pub fn run(&mut self, delta: f64, weights: Weights) -> Result<DetectionResult, DetectError> {
        let config = DetectionConfig {
            delta,
            weights,
            ..self.config.clone()
        };
        config.validate()?;

        let mut cohort = Cohort::default();
        let mut seen: HashSet<usize> = HashSet::new();
        let mut order: Vec<usize> = Vec::new();
        let mut collusive: Vec<usize> = Vec::new();
        let mut expanded_count = 0;
        let mut queue: Vec<usize> = self.roots.clone();
        for &q in &queue {
            seen.insert(q);
        }

        while !queue.is_empty() {
            for &q in &queue {
                cohort.include(&self.groups[q].biclique);
            }
            let mut to_expand = Vec::new();
            for &q in &queue {
                order.push(q);
                let g = &self.groups[q];
                let report = report_for(&g.biclique, &g.scores, &cohort, &weights);
                if report.doc > delta {
                    collusive.push(q);
                } else if report.di >= delta {
                    to_expand.push(q);
                }
            }
            expanded_count += to_expand.len();
            let children = self.expand(&to_expand, delta)?;
            queue = children
                .into_iter()
                .flatten()
                .filter(|c| seen.insert(*c))
                .collect();
        }

        // renumber the examined groups densely, keeping examination order
        let remap: HashMap<usize, usize> = order
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let groups: Vec<ExaminedGroup> = order
            .iter()
            .map(|&old| {
                let g = &self.groups[old];
                ExaminedGroup {
                    biclique: g.biclique.clone(),
                    scores: g.scores,
                    parent: g.parent.and_then(|p| remap.get(&p).copied()),
                    expansions: g
                        .expansions
                        .iter()
                        .filter(|e| e.delta == delta)
                        .map(|e| Expansion {
                            delta,
                            children: e
                                .children
                                .iter()
                                .filter_map(|c| remap.get(c).copied())
                                .collect(),
                        })
                        .collect(),
                }
            })
            .collect();

        let mut collusive: Vec<ScoredGroup> = collusive
            .into_iter()
            .map(|i| {
                let g = &self.groups[i];
                ScoredGroup {
                    biclique: g.biclique.clone(),
                    report: report_for(&g.biclique, &g.scores, &cohort, &weights),
                }
            })
            .collect();
        collusive.sort_by(|a, b| {
            b.report
                .doc
                .total_cmp(&a.report.doc)
                .then_with(|| a.biclique.reviewers().cmp(b.biclique.reviewers()))
                .then_with(|| a.biclique.products().cmp(b.biclique.products()))
        });

        Ok(DetectionResult {
            config,
            collusive,
            examined_count: groups.len(),
            expanded_count,
            cohort,
            suspicious: self.table.suspicious().iter().cloned().collect(),
            groups,
        })
    }
}

/// Mines, scores and filters `graph` under `config`.
pub fn detect(
    graph: &RatingGraph,
    config: &DetectionConfig,
) -> Result<DetectionResult, DetectError> {
    Detector::new(graph, config)?.run(config.delta, config.weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Danger {
    /// DOC and DI both above the threshold.
    Dangerous,
    /// Collusive-looking but small.
    Collusive,
    /// Not collusive-looking, but large enough to do damage.
    DamagingImpact,
    NotDangerous,
}

impl Danger {
    pub fn classify(doc: f64, di: f64, delta: f64) -> Self {
        match (doc > delta, di > delta) {
            (true, true) => Danger::Dangerous,
            (true, false) => Danger::Collusive,
            (false, true) => Danger::DamagingImpact,
            (false, false) => Danger::NotDangerous,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Danger::Dangerous => "dangerous",
            Danger::Collusive => "collusive",
            Danger::DamagingImpact => "dangerous-by-DI",
            Danger::NotDangerous => "not dangerous",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    /// 1-based position in [`DetectionResult::groups`].
    pub group: usize,
    pub reviewers: usize,
    pub products: usize,
    pub doc: f64,
    pub di: f64,
    pub danger: Danger,
}

/// One row per examined group, by descending DOC then group id.
pub fn rank_report(result: &DetectionResult) -> Vec<RankRow> {
    let mut rows: Vec<RankRow> = (0..result.groups.len())
        .map(|i| {
            let r = result.report(i);
            let b = &result.groups[i].biclique;
            RankRow {
                group: i + 1,
                reviewers: b.reviewer_count(),
                products: b.product_count(),
                doc: r.doc,
                di: r.di,
                danger: Danger::classify(r.doc, r.di, result.config.delta),
            }
        })
        .collect();
    rows.sort_by(|a, b| match b.doc.total_cmp(&a.doc) {
        Ordering::Equal => a.group.cmp(&b.group),
        o => o,
    });
    rows
}

#![allow(dead_code)]

use bcs_core::detector::{DetectionResult, ExaminedGroup};
use bcs_core::indicators::{Cohort, CollusionScores};
use bcs_core::{
    Biclique, BicliqueKey, DetectionConfig, GraphBuilder, ProductId, RatingGraph, ReviewerId,
};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeSet;

pub fn rid(s: &str) -> ReviewerId {
    ReviewerId::new(s).unwrap()
}

pub fn pid(s: &str) -> ProductId {
    ProductId::new(s).unwrap()
}

/// Graph from a reviewer x product presence matrix; every rating is identical.
pub fn matrix_graph(rows: &[Vec<bool>]) -> RatingGraph {
    let mut b = GraphBuilder::default();
    for (r, row) in rows.iter().enumerate() {
        for (p, &on) in row.iter().enumerate() {
            if on {
                b.add(&format!("r{r:02}"), &format!("p{p:02}"), 3.0, 0, 0.0)
                    .unwrap();
            }
        }
    }
    b.build()
}

pub fn random_matrix(rng: &mut impl Rng, n_r: usize, n_p: usize, density: f64) -> Vec<Vec<bool>> {
    (0..n_r)
        .map(|_| (0..n_p).map(|_| rng.gen_bool(density)).collect())
        .collect()
}

/// Exhaustive maximal-biclique enumeration over every reviewer subset.
pub fn oracle(graph: &RatingGraph, min_r: usize, min_p: usize) -> BTreeSet<BicliqueKey> {
    let n = graph.reviewers().len();
    assert!(
        n <= 16 && graph.products().len() <= 32,
        "oracle is exponential"
    );
    let rated: Vec<u32> = (0..n)
        .map(|r| {
            graph
                .reviewer_products(r)
                .iter()
                .fold(0, |m, &p| m | 1 << p)
        })
        .collect();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        if (mask.count_ones() as usize) < min_r {
            continue;
        }
        let common = (0..n)
            .filter(|r| mask >> r & 1 == 1)
            .fold(u32::MAX, |c, r| c & rated[r]);
        if (common.count_ones() as usize) < min_p {
            continue;
        }
        let closure = (0..n)
            .filter(|&r| rated[r] & common == common)
            .fold(0u32, |m, r| m | 1 << r);
        if closure == mask {
            out.insert(BicliqueKey {
                reviewers: (0..n)
                    .filter(|r| mask >> r & 1 == 1)
                    .map(|r| graph.reviewers()[r].clone())
                    .collect(),
                products: (0..32)
                    .filter(|p| common >> p & 1 == 1)
                    .map(|p| graph.products()[p].clone())
                    .collect(),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub reviewer: usize,
    pub product: usize,
    pub value: f64,
    pub time: u32,
    pub spam: f64,
}

pub fn cells_graph(cells: &[Cell]) -> RatingGraph {
    let mut b = GraphBuilder::default();
    let mut seen = BTreeSet::new();
    for c in cells {
        if seen.insert((c.reviewer, c.product)) {
            b.add(
                &format!("r{}", c.reviewer),
                &format!("p{}", c.product),
                c.value,
                c.time,
                c.spam,
            )
            .unwrap();
        }
    }
    b.build()
}

/// Small dense-ish graphs with integer votes, times within two months and
/// occasional spamicity.
pub fn arb_graph() -> impl Strategy<Value = RatingGraph> {
    (
        2usize..=7,
        3usize..=6,
        prop_oneof![Just(0.5), Just(0.7), Just(0.9)],
    )
        .prop_flat_map(|(n_r, n_p, density)| {
            let cell = (
                proptest::bool::weighted(density),
                1u8..=5,
                0u32..60,
                prop_oneof![4 => Just(0.0), 1 => 0.0f64..=1.0],
            );
            proptest::collection::vec(cell, n_r * n_p).prop_map(move |cells| {
                let cells: Vec<Cell> = cells
                    .into_iter()
                    .enumerate()
                    .filter(|(_, (on, ..))| *on)
                    .map(|(i, (_, v, t, s))| Cell {
                        reviewer: i / n_p,
                        product: i % n_p,
                        value: v as f64,
                        time: t,
                        spam: s,
                    })
                    .collect();
                cells_graph(&cells)
            })
        })
}

/// Six reviewers over three products: r1..r3 give 5 on day 10, the others
/// scatter values over 200 days.
pub fn planted_trio() -> RatingGraph {
    let mut b = GraphBuilder::default();
    for r in ["r1", "r2", "r3"] {
        for p in ["p1", "p2", "p3"] {
            b.add(r, p, 5.0, 10, 0.0).unwrap();
        }
    }
    let noise = [
        ("r4", [(1.0, 60), (4.0, 70), (2.0, 80)]),
        ("r5", [(3.0, 110), (5.0, 120), (1.0, 130)]),
        ("r6", [(2.0, 170), (1.0, 185), (4.0, 200)]),
    ];
    for (r, cells) in noise {
        for (p, (v, t)) in ["p1", "p2", "p3"].iter().zip(cells) {
            b.add(r, p, v, t, 0.0).unwrap();
        }
    }
    b.build()
}

/// A saved result holding the given groups with preset indicator values;
/// every group is a block rated months apart so no sub-group passes the
/// screen.
pub fn cached_result(groups: &[(&[&str], &[&str], [f64; 4])]) -> (RatingGraph, DetectionResult) {
    let mut b = GraphBuilder::default();
    for (reviewers, products, _) in groups {
        for (i, r) in reviewers.iter().enumerate() {
            for p in products.iter() {
                b.add(r, p, 4.0, i as u32 * 100, 0.0).unwrap();
            }
        }
    }
    let graph = b.build();
    let examined: Vec<ExaminedGroup> = groups
        .iter()
        .map(|(r, p, s)| ExaminedGroup {
            biclique: Biclique::new(r.iter().map(|x| rid(x)), p.iter().map(|x| pid(x)), &graph)
                .unwrap(),
            scores: CollusionScores {
                gvs: s[0],
                gts: s[1],
                grs: s[2],
                gms: s[3],
            },
            parent: None,
            expansions: Vec::new(),
        })
        .collect();
    let cohort = Cohort::from_groups(examined.iter().map(|g| &g.biclique));
    let result = DetectionResult {
        config: DetectionConfig::default(),
        collusive: Vec::new(),
        examined_count: examined.len(),
        expanded_count: 0,
        cohort,
        suspicious: Vec::new(),
        groups: examined,
    };
    (graph, result)
}

pub fn names<T: AsRef<str>>(ids: &[T]) -> Vec<String> {
    ids.iter().map(|i| i.as_ref().to_string()).collect()
}

//! Synthetic labelled rating logs and evaluation metrics.
//!
//! Honest reviewers rate each product independently with probability
//! `density`. Every product has a latent quality drawn uniformly from
//! `[1, M]`; an honest vote is that quality plus Gaussian noise (sigma 0.7),
//! rounded and clamped to the scale, on a day drawn uniformly from one year.
//! Each attack adds a fresh group of reviewers who all rate the same targets
//! with the extreme value inside a short window, optionally repeating votes
//! and sprinkling honest-looking ratings on other products.

mod metrics;

pub use metrics::{
    cumulative_distribution, cumulative_rows, group_matches, precision, precision_with, recall,
    recall_with, threshold_sweep, CumulativeRow, GroupClass, Metric, SweepPoint, DEFAULT_JACCARD,
};

use crate::ingest::RawRating;
use crate::model::{ProductId, ReviewerId, DEFAULT_MAX_VALUE};
use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;
use thiserror::Error;

pub const HONEST_NOISE_SIGMA: f64 = 0.7;
pub const YEAR_DAYS: u32 = 365;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("attack wants {targets} targets but only {products} products exist")]
    InfeasibleScript { targets: usize, products: usize },
    #[error("invalid attack script: {0}")]
    BadScript(String),
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
    #[error("deltas must be sorted ascending and lie in [0, 1]")]
    BadDeltas,
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Detect(#[from] crate::detector::DetectError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed dataset: {0}")]
    Format(String),
}

pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2004, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMode {
    /// Top of the scale.
    Promote,
    /// Bottom of the scale.
    Demote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScript {
    pub group_size: usize,
    pub target_count: usize,
    pub value_mode: ValueMode,
    pub time_span_days: u32,
    /// Probability that a colluder repeats a target vote (two extra copies).
    pub duplicate_rate: f64,
    /// Honest-looking ratings per colluder, as a fraction of the target count.
    pub camouflage_rate: f64,
}

impl Default for AttackScript {
    fn default() -> Self {
        Self {
            group_size: 5,
            target_count: 4,
            value_mode: ValueMode::Promote,
            time_span_days: 2,
            duplicate_rate: 0.2,
            camouflage_rate: 0.0,
        }
    }
}

impl AttackScript {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::BadScript(m.into()));
        if self.group_size < 2 {
            return bad("size must be at least 2");
        }
        if self.target_count < 3 {
            return bad("targets must be at least 3");
        }
        if !(0.0..=1.0).contains(&self.duplicate_rate) {
            return bad("dup must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.camouflage_rate) {
            return bad("camo must lie in [0, 1]");
        }
        if self.time_span_days >= YEAR_DAYS {
            return bad("span must be shorter than a year");
        }
        Ok(())
    }

    fn camouflage_count(&self) -> usize {
        (self.camouflage_rate * self.target_count as f64).ceil() as usize
    }
}

/// `size=5,targets=4,mode=promote,span=2,dup=0.2,camo=0.3`; omitted keys
/// take their defaults.
impl FromStr for AttackScript {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut a = AttackScript::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| SynthError::BadScript(format!("{part:?} is not key=value")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| SynthError::BadScript(format!("{k}: {v:?} is not a number")))
            };
            let int = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| SynthError::BadScript(format!("{k}: {v:?} is not a count")))
            };
            match k.trim() {
                "size" => a.group_size = int(v)?,
                "targets" => a.target_count = int(v)?,
                "span" => a.time_span_days = int(v)? as u32,
                "dup" => a.duplicate_rate = num(v)?,
                "camo" => a.camouflage_rate = num(v)?,
                "mode" => {
                    a.value_mode = match v.trim() {
                        "promote" => ValueMode::Promote,
                        "demote" => ValueMode::Demote,
                        other => {
                            return Err(SynthError::BadScript(format!("unknown mode {other:?}")))
                        }
                    }
                }
                other => return Err(SynthError::BadScript(format!("unknown key {other:?}"))),
            }
        }
        a.validate()?;
        Ok(a)
    }
}

impl fmt::Display for AttackScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.value_mode {
            ValueMode::Promote => "promote",
            ValueMode::Demote => "demote",
        };
        write!(
            f,
            "size={},targets={},mode={},span={},dup={},camo={}",
            self.group_size,
            self.target_count,
            mode,
            self.time_span_days,
            self.duplicate_rate,
            self.camouflage_rate
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthGroup {
    pub reviewers: Vec<ReviewerId>,
    pub products: Vec<ProductId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub raw: Vec<RawRating>,
    pub truth: Vec<TruthGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub honest_reviewers: usize,
    pub products: usize,
    pub density: f64,
    pub max_value: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(honest_reviewers: usize, products: usize, density: f64, seed: u64) -> Self {
        Self {
            honest_reviewers,
            products,
            density,
            max_value: DEFAULT_MAX_VALUE,
            seed,
        }
    }
}

fn product_id(j: usize) -> ProductId {
    ProductId::new(format!("p{j:04}")).expect("non-empty")
}

fn honest_id(i: usize) -> ReviewerId {
    ReviewerId::new(format!("h{i:04}")).expect("non-empty")
}

fn colluder_id(attack: usize, k: usize) -> ReviewerId {
    ReviewerId::new(format!("c{attack}_{k}")).expect("non-empty")
}

fn honest_vote(rng: &mut ChaCha8Rng, noise: &Normal<f64>, quality: f64, max: f64) -> f64 {
    (quality + noise.sample(rng)).round().clamp(1.0, max)
}

fn rating(reviewer: &ReviewerId, product: &ProductId, value: f64, day: u32) -> RawRating {
    RawRating {
        reviewer: reviewer.clone(),
        product: product.clone(),
        value,
        date: epoch() + chrono::Duration::days(day as i64),
    }
}

/// Seeded labelled dataset; identical parameters give identical output.
pub fn generate(
    params: &GeneratorParams,
    attacks: &[AttackScript],
) -> Result<LabeledDataset, SynthError> {
    let GeneratorParams {
        honest_reviewers,
        products,
        density,
        max_value,
        seed,
    } = *params;
    if !(density > 0.0 && density <= 1.0) {
        return Err(SynthError::BadParameter(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    if !(max_value >= 1.0 && max_value.is_finite()) {
        return Err(SynthError::BadParameter(format!(
            "bad max value {max_value}"
        )));
    }
    for a in attacks {
        a.validate()?;
        if a.target_count > products {
            return Err(SynthError::InfeasibleScript {
                targets: a.target_count,
                products,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, HONEST_NOISE_SIGMA).expect("valid sigma");
    let quality: Vec<f64> = (0..products)
        .map(|_| rng.gen_range(1.0..=max_value))
        .collect();
    let pids: Vec<ProductId> = (0..products).map(product_id).collect();

    let mut raw = Vec::new();
    for i in 0..honest_reviewers {
        let id = honest_id(i);
        for (j, p) in pids.iter().enumerate() {
            if rng.gen_bool(density) {
                let v = honest_vote(&mut rng, &noise, quality[j], max_value);
                let day = rng.gen_range(0..YEAR_DAYS);
                raw.push(rating(&id, p, v, day));
            }
        }
    }

    let mut truth = Vec::with_capacity(attacks.len());
    for (a, script) in attacks.iter().enumerate() {
        let mut targets = sample(&mut rng, products, script.target_count).into_vec();
        targets.sort_unstable();
        let value = match script.value_mode {
            ValueMode::Promote => max_value,
            ValueMode::Demote => 1.0,
        };
        let start = rng.gen_range(0..YEAR_DAYS - script.time_span_days);
        let members: Vec<ReviewerId> = (0..script.group_size).map(|k| colluder_id(a, k)).collect();
        let others: Vec<usize> = (0..products).filter(|j| !targets.contains(j)).collect();
        let camo = script.camouflage_count().min(others.len());
        for id in &members {
            for &t in &targets {
                let copies = if rng.gen_bool(script.duplicate_rate) {
                    3
                } else {
                    1
                };
                for _ in 0..copies {
                    let day = start + rng.gen_range(0..=script.time_span_days);
                    raw.push(rating(id, &pids[t], value, day));
                }
            }
            for k in sample(&mut rng, others.len(), camo) {
                let j = others[k];
                let v = honest_vote(&mut rng, &noise, quality[j], max_value);
                let day = rng.gen_range(0..YEAR_DAYS);
                raw.push(rating(id, &pids[j], v, day));
            }
        }
        truth.push(TruthGroup {
            reviewers: members,
            products: targets.iter().map(|&t| pids[t].clone()).collect(),
        });
    }
    Ok(LabeledDataset { raw, truth })
}

impl LabeledDataset {
    /// `reviewer,product,value,date` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["reviewer", "product", "value", "date"])
            .map_err(|e| SynthError::Format(e.to_string()))?;
        for r in &self.raw {
            w.write_record([
                r.reviewer.as_str(),
                r.product.as_str(),
                &r.value.to_string(),
                &r.date.to_string(),
            ])
            .map_err(|e| SynthError::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_truth<W: Write>(&self, mut out: W) -> Result<(), SynthError> {
        serde_json::to_writer_pretty(&mut out, &self.truth)
            .map_err(|e| SynthError::Format(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_truth<R: Read>(input: R) -> Result<Vec<TruthGroup>, SynthError> {
        serde_json::from_reader(input).map_err(|e| SynthError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn parses_attack_scripts() {
        let a: AttackScript = "size=5,targets=4,mode=promote,span=2,dup=0.2,camo=0.3"
            .parse()
            .unwrap();
        assert_eq!(a.group_size, 5);
        assert_eq!(a.value_mode, ValueMode::Promote);
        assert_eq!(a.camouflage_count(), 2);
        assert_eq!(a.to_string().parse::<AttackScript>().unwrap(), a);
        assert!("size=1".parse::<AttackScript>().is_err());
        assert!("targets=2".parse::<AttackScript>().is_err());
        assert!("mode=sideways".parse::<AttackScript>().is_err());
        assert!("colour=red".parse::<AttackScript>().is_err());
    }

    #[test]
    fn no_attacks_no_truth() {
        let d = generate(&GeneratorParams::new(20, 10, 0.2, 1), &[]).unwrap();
        assert!(d.truth.is_empty());
        assert!(!d.raw.is_empty());
        assert!(d
            .raw
            .iter()
            .all(|r| (1.0..=5.0).contains(&r.value) && r.value.fract() == 0.0));
    }

    #[test]
    fn attack_is_a_complete_biclique() {
        let d = generate(
            &GeneratorParams::new(50, 20, 0.05, 3),
            &[AttackScript::default()],
        )
        .unwrap();
        assert_eq!(d.truth.len(), 1);
        let t = &d.truth[0];
        assert_eq!((t.reviewers.len(), t.products.len()), (5, 4));
        let pairs: BTreeSet<(&str, &str)> = d
            .raw
            .iter()
            .map(|r| (r.reviewer.as_str(), r.product.as_str()))
            .collect();
        for r in &t.reviewers {
            for p in &t.products {
                assert!(pairs.contains(&(r.as_str(), p.as_str())));
            }
        }
        let votes: Vec<&RawRating> = d
            .raw
            .iter()
            .filter(|r| r.reviewer.as_str().starts_with('c'))
            .collect();
        assert!(votes.iter().all(|r| r.value == 5.0));
        let days: Vec<i64> = votes
            .iter()
            .map(|r| (r.date - epoch()).num_days())
            .collect();
        assert!(days.iter().max().unwrap() - days.iter().min().unwrap() <= 2);
    }

    #[test]
    fn same_seed_same_data() {
        let p = GeneratorParams::new(30, 15, 0.1, 9);
        let attacks: Vec<AttackScript> = vec!["camo=0.5,mode=demote".parse().unwrap()];
        assert_eq!(
            generate(&p, &attacks).unwrap(),
            generate(&p, &attacks).unwrap()
        );
        let other = GeneratorParams { seed: 10, ..p };
        assert_ne!(
            generate(&other, &attacks).unwrap(),
            generate(&GeneratorParams::new(30, 15, 0.1, 9), &attacks).unwrap()
        );
    }

    #[test]
    fn too_many_targets_is_infeasible() {
        let a = AttackScript {
            target_count: 6,
            ..Default::default()
        };
        assert!(matches!(
            generate(&GeneratorParams::new(5, 5, 0.5, 0), &[a]),
            Err(SynthError::InfeasibleScript {
                targets: 6,
                products: 5
            })
        ));
    }

    #[test]
    fn csv_feeds_the_parser() {
        let d = generate(
            &GeneratorParams::new(10, 8, 0.3, 4),
            &[AttackScript::default()],
        )
        .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let log =
            crate::ingest::parse_log(&buf[..], crate::ingest::LogFormat::Csv, 5.0, true).unwrap();
        assert_eq!(log.ratings, d.raw);
        let mut t = Vec::new();
        d.write_truth(&mut t).unwrap();
        assert_eq!(LabeledDataset::read_truth(&t[..]).unwrap(), d.truth);
    }
}

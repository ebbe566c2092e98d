//! Raw rating logs to [`RatingGraph`].
//!
//! The pipeline is: parse, prune inactive reviewers and unpopular products to
//! a joint fixed point, count duplicate votes, collapse each (reviewer, product)
//! pair to its chronologically last vote, and express dates as days since the
//! earliest rating in the log.

use crate::model::{GraphBuilder, ModelError, ProductId, RatingEdge, RatingGraph, ReviewerId};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{}", format_parse_errors(.0))]
    Strict(Vec<ParseError>),
    #[error("rating log is empty")]
    EmptyLog,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn format_parse_errors(errors: &[ParseError]) -> String {
    let mut msg = format!("{} malformed line(s)", errors.len());
    if let Some(first) = errors.first() {
        msg.push_str(&format!("; first: {first}"));
    }
    msg
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    /// `reviewer,product,value,yyyy-mm-dd`, optional header row.
    Csv,
    /// One `{"reviewer":..,"product":..,"value":..,"date":"yyyy-mm-dd"}` per line.
    JsonLines,
}

impl std::str::FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" => Ok(Self::JsonLines),
            other => Err(format!(
                "unknown log format {other:?} (expected csv or jsonl)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRating {
    pub reviewer: ReviewerId,
    pub product: ProductId,
    pub value: f64,
    pub date: NaiveDate,
}

/// Records in file order plus every line that failed to parse.
#[derive(Debug, Default)]
pub struct ParsedLog {
    pub ratings: Vec<RawRating>,
    pub errors: Vec<ParseError>,
}

#[derive(Deserialize)]
struct JsonRecord {
    reviewer: String,
    product: String,
    value: f64,
    date: String,
}

pub fn parse_log<R: BufRead>(
    input: R,
    format: LogFormat,
    max_value: f64,
    strict: bool,
) -> Result<ParsedLog, IngestError> {
    let mut log = ParsedLog::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = match format {
            LogFormat::Csv => {
                if line_no == 1 && is_csv_header(trimmed) {
                    continue;
                }
                parse_csv_line(trimmed)
            }
            LogFormat::JsonLines => serde_json::from_str::<JsonRecord>(trimmed)
                .map_err(|e| e.to_string())
                .and_then(|r| build_rating(&r.reviewer, &r.product, r.value, &r.date)),
        }
        .and_then(|r| check_value(r, max_value));
        match parsed {
            Ok(r) => log.ratings.push(r),
            Err(reason) => log.errors.push(ParseError {
                line: line_no,
                reason,
            }),
        }
    }
    if strict && !log.errors.is_empty() {
        return Err(IngestError::Strict(log.errors));
    }
    Ok(log)
}

fn is_csv_header(line: &str) -> bool {
    line.to_ascii_lowercase().starts_with("reviewer")
}

fn parse_csv_line(line: &str) -> Result<RawRating, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    let record = reader
        .records()
        .next()
        .ok_or_else(|| "empty record".to_string())?
        .map_err(|e| e.to_string())?;
    if record.len() != 4 {
        return Err(format!("expected 4 fields, found {}", record.len()));
    }
    let value: f64 = record[2]
        .parse()
        .map_err(|_| format!("value {:?} is not a number", &record[2]))?;
    build_rating(&record[0], &record[1], value, &record[3])
}

fn build_rating(
    reviewer: &str,
    product: &str,
    value: f64,
    date: &str,
) -> Result<RawRating, String> {
    let reviewer = ReviewerId::new(reviewer).map_err(|_| "empty reviewer id".to_string())?;
    let product = ProductId::new(product).map_err(|_| "empty product id".to_string())?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|_| format!("date {date:?} is not yyyy-mm-dd"))?;
    Ok(RawRating {
        reviewer,
        product,
        value,
        date,
    })
}

fn check_value(r: RawRating, max_value: f64) -> Result<RawRating, String> {
    if r.value >= 1.0 && r.value <= max_value {
        Ok(r)
    } else {
        Err(format!("value {} out of range [1, {}]", r.value, max_value))
    }
}

/// Drops reviewers with fewer than `reviewer_min` distinct rated products and
/// products with fewer than `product_min` raw ratings, repeating until neither
/// rule removes anything. Order of the surviving ratings is preserved.
pub fn prune(raw: &[RawRating], reviewer_min: usize, product_min: usize) -> Vec<RawRating> {
    let mut alive = vec![true; raw.len()];
    loop {
        let mut reviewer_products: HashMap<&ReviewerId, HashSet<&ProductId>> = HashMap::new();
        let mut product_counts: HashMap<&ProductId, usize> = HashMap::new();
        for (r, _) in raw.iter().zip(&alive).filter(|(_, a)| **a) {
            reviewer_products
                .entry(&r.reviewer)
                .or_default()
                .insert(&r.product);
            *product_counts.entry(&r.product).or_default() += 1;
        }
        let mut changed = false;
        for (r, a) in raw.iter().zip(alive.iter_mut()) {
            if *a
                && (reviewer_products[&r.reviewer].len() < reviewer_min
                    || product_counts[&r.product] < product_min)
            {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    raw.iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(r, _)| r.clone())
        .collect()
}

/// Vote counts per (reviewer, product) pair and per product.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DuplicateStats {
    pair_counts: HashMap<(ReviewerId, ProductId), usize>,
    product_counts: HashMap<ProductId, usize>,
}

impl DuplicateStats {
    pub fn from_ratings(raw: &[RawRating]) -> Self {
        let mut stats = Self::default();
        for r in raw {
            *stats
                .pair_counts
                .entry((r.reviewer.clone(), r.product.clone()))
                .or_default() += 1;
            *stats.product_counts.entry(r.product.clone()).or_default() += 1;
        }
        stats
    }

    /// Builds stats from explicit counts; used to evaluate the spamicity rule
    /// on hand-made numbers.
    pub fn from_counts(pairs: impl IntoIterator<Item = ((ReviewerId, ProductId), usize)>) -> Self {
        let mut stats = Self::default();
        for ((r, p), n) in pairs {
            *stats.product_counts.entry(p.clone()).or_default() += n;
            stats.pair_counts.insert((r, p), n);
        }
        stats
    }

    /// Adds ratings by reviewers not listed individually, so a product total can
    /// exceed the sum of the tracked pairs.
    pub fn with_extra_product_volume(mut self, product: ProductId, extra: usize) -> Self {
        *self.product_counts.entry(product).or_default() += extra;
        self
    }

    pub fn pair_count(&self, reviewer: &ReviewerId, product: &ProductId) -> usize {
        self.pair_counts
            .get(&(reviewer.clone(), product.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn product_count(&self, product: &ProductId) -> usize {
        self.product_counts.get(product).copied().unwrap_or(0)
    }
}

/// Zero for up to two votes on the same product (a change of mind), otherwise
/// the pair's share of all votes the product received.
pub fn compute_spamicity(
    stats: &DuplicateStats,
    reviewer: &ReviewerId,
    product: &ProductId,
) -> f64 {
    let pair = stats.pair_count(reviewer, product);
    if pair <= 2 {
        return 0.0;
    }
    pair as f64 / stats.product_count(product) as f64
}

/// Maps calendar dates to whole days since the earliest date of a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeAxis {
    epoch: NaiveDate,
}

impl TimeAxis {
    pub fn new(epoch: NaiveDate) -> Self {
        Self { epoch }
    }

    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    /// Days since the epoch; dates before the epoch clamp to 0.
    pub fn days(&self, date: NaiveDate) -> u32 {
        (date - self.epoch).num_days().max(0) as u32
    }
}

pub fn normalize_time(raw: &[RawRating]) -> Result<TimeAxis, IngestError> {
    raw.iter()
        .map(|r| r.date)
        .min()
        .map(TimeAxis::new)
        .ok_or(IngestError::EmptyLog)
}

/// Keeps one edge per (reviewer, product): the chronologically last vote, ties
/// on the same day going to the later input line.
pub fn collapse_duplicates(
    raw: &[RawRating],
    stats: &DuplicateStats,
    axis: &TimeAxis,
) -> Vec<RatingEdge> {
    let mut last: BTreeMap<(&ReviewerId, &ProductId), &RawRating> = BTreeMap::new();
    for r in raw {
        last.entry((&r.reviewer, &r.product))
            .and_modify(|kept| {
                if r.date >= kept.date {
                    *kept = r;
                }
            })
            .or_insert(r);
    }
    last.into_iter()
        .map(|((reviewer, product), r)| RatingEdge {
            reviewer: reviewer.clone(),
            product: product.clone(),
            value: r.value,
            time: axis.days(r.date),
            spamicity: compute_spamicity(stats, reviewer, product),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub reviewer_min: usize,
    pub product_min: usize,
    pub max_value: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            reviewer_min: 10,
            product_min: 10,
            max_value: crate::model::DEFAULT_MAX_VALUE,
        }
    }
}

/// Runs prune, duplicate counting, time normalization and collapse.
///
/// The epoch is the earliest date of the whole log, before pruning. Spamicity
/// volumes are counted on the pruned, uncollapsed ratings. An empty log gives
/// an empty graph with no epoch.
pub fn build_graph(raw: &[RawRating], opts: &IngestOptions) -> Result<RatingGraph, IngestError> {
    let mut builder = GraphBuilder::new(opts.max_value)?;
    let axis = match normalize_time(raw) {
        Ok(axis) => axis,
        Err(IngestError::EmptyLog) => return Ok(builder.build()),
        Err(e) => return Err(e),
    };
    builder.set_epoch(Some(axis.epoch()));
    let pruned = prune(raw, opts.reviewer_min, opts.product_min);
    let stats = DuplicateStats::from_ratings(&pruned);
    for edge in collapse_duplicates(&pruned, &stats, &axis) {
        builder.add_edge(edge)?;
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rr(r: &str, p: &str, v: f64, date: &str) -> RawRating {
        build_rating(r, p, v, date).unwrap()
    }

    fn day(n: i64) -> String {
        (NaiveDate::from_ymd_opt(2004, 1, 1).unwrap() + chrono::Duration::days(n)).to_string()
    }

    #[test]
    fn parses_csv_line() {
        let log = parse_log(
            "u1,p1,5,2004-03-01\n".as_bytes(),
            LogFormat::Csv,
            5.0,
            false,
        )
        .unwrap();
        assert_eq!(log.ratings, vec![rr("u1", "p1", 5.0, "2004-03-01")]);
        assert!(log.errors.is_empty());
    }

    #[test]
    fn csv_header_and_quoted_ids() {
        let text = "reviewer,product,value,date\n\"Jane Doe\",\"Book, 2nd ed\",4.5,2004-03-01\n";
        let log = parse_log(text.as_bytes(), LogFormat::Csv, 5.0, false).unwrap();
        assert_eq!(log.ratings.len(), 1);
        assert_eq!(log.ratings[0].product.as_str(), "Book, 2nd ed");
        assert_eq!(log.ratings[0].value, 4.5);
    }

    #[test]
    fn out_of_range_value_is_reported_with_line() {
        let text = "u1,p1,5,2004-03-01\nu1,p1,9,2004-03-01\nu2,p1,x,2004-03-01\n";
        let log = parse_log(text.as_bytes(), LogFormat::Csv, 5.0, false).unwrap();
        assert_eq!(log.ratings.len(), 1);
        assert_eq!(log.errors.len(), 2);
        assert_eq!(log.errors[0].line, 2);
        assert!(log.errors[0].reason.contains("out of range"));
        assert_eq!(log.errors[1].line, 3);

        let strict = parse_log(text.as_bytes(), LogFormat::Csv, 5.0, true);
        assert!(matches!(strict, Err(IngestError::Strict(e)) if e.len() == 2));
    }

    #[test]
    fn empty_input() {
        let log = parse_log("".as_bytes(), LogFormat::Csv, 5.0, true).unwrap();
        assert!(log.ratings.is_empty());
        let log = parse_log("\n\n".as_bytes(), LogFormat::JsonLines, 5.0, true).unwrap();
        assert!(log.ratings.is_empty());
    }

    #[test]
    fn parses_json_lines() {
        let text = r#"{"reviewer":"u1","product":"p1","value":3,"date":"2004-01-02"}
{"reviewer":"u1","product":"p1","value":3,"date":"2004-13-02"}
"#;
        let log = parse_log(text.as_bytes(), LogFormat::JsonLines, 5.0, false).unwrap();
        assert_eq!(log.ratings, vec![rr("u1", "p1", 3.0, "2004-01-02")]);
        assert_eq!(log.errors[0].line, 2);
    }

    #[test]
    fn prune_drops_reviewer_below_threshold() {
        let mut raw = Vec::new();
        // u_small rated 9 distinct products; u_big rated 10
        for p in 0..9 {
            raw.push(rr("u_small", &format!("p{p}"), 3.0, "2004-01-01"));
        }
        for p in 0..10 {
            raw.push(rr("u_big", &format!("p{p}"), 3.0, "2004-01-01"));
        }
        let kept = prune(&raw, 10, 0);
        assert!(kept.iter().all(|r| r.reviewer.as_str() == "u_big"));
        assert_eq!(kept.len(), 10);
    }

    #[test]
    fn prune_drops_product_below_threshold() {
        let mut raw = Vec::new();
        for u in 0..9 {
            raw.push(rr(&format!("u{u}"), "thin", 3.0, "2004-01-01"));
        }
        for u in 0..10 {
            raw.push(rr(&format!("u{u}"), "popular", 3.0, "2004-01-01"));
        }
        let kept = prune(&raw, 0, 10);
        assert!(kept.iter().all(|r| r.product.as_str() == "popular"));
    }

    #[test]
    fn prune_reaches_joint_fixed_point() {
        // u3 only survives while p3 survives; p3 only has u3 and u1.
        let raw = vec![
            rr("u1", "p1", 3.0, "2004-01-01"),
            rr("u1", "p2", 3.0, "2004-01-01"),
            rr("u2", "p1", 3.0, "2004-01-01"),
            rr("u2", "p2", 3.0, "2004-01-01"),
            rr("u3", "p3", 3.0, "2004-01-01"),
            rr("u3", "p1", 3.0, "2004-01-01"),
            rr("u4", "p3", 3.0, "2004-01-01"),
        ];
        let kept = prune(&raw, 2, 2);
        // u4 goes (1 product) -> p3 has 1 rating -> goes -> u3 has 1 product -> goes
        assert_eq!(kept.len(), 4);
        assert_eq!(prune(&kept, 2, 2), kept);
    }

    #[test]
    fn zero_thresholds_are_noop() {
        let raw = vec![
            rr("u1", "p1", 3.0, "2004-01-01"),
            rr("u2", "p2", 1.0, "2004-01-09"),
        ];
        assert_eq!(prune(&raw, 0, 0), raw);
    }

    fn ids(r: &str, p: &str) -> (ReviewerId, ProductId) {
        (ReviewerId::new(r).unwrap(), ProductId::new(p).unwrap())
    }

    #[test]
    fn spamicity_rule() {
        let (u, p) = ids("u", "p");
        let two = DuplicateStats::from_counts([((u.clone(), p.clone()), 2)])
            .with_extra_product_volume(p.clone(), 50);
        assert_eq!(compute_spamicity(&two, &u, &p), 0.0);
        let one = DuplicateStats::from_counts([((u.clone(), p.clone()), 1)]);
        assert_eq!(compute_spamicity(&one, &u, &p), 0.0);
        let five = DuplicateStats::from_counts([((u.clone(), p.clone()), 5)])
            .with_extra_product_volume(p.clone(), 15);
        assert_eq!(five.product_count(&p), 20);
        assert_eq!(compute_spamicity(&five, &u, &p), 0.25);
    }

    #[test]
    fn collapse_keeps_last_vote() {
        let raw = vec![
            rr("u", "p", 1.0, &day(8)),
            rr("u", "p", 5.0, &day(8)),
            rr("u", "p", 2.0, &day(3)),
        ];
        let stats = DuplicateStats::from_ratings(&raw[..1]);
        let axis = normalize_time(&raw).unwrap();
        // same-day tie: later line wins
        let edges = collapse_duplicates(&raw[..2], &stats, &axis);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].value, 5.0);

        let changed = vec![rr("u", "p", 1.0, &day(3)), rr("u", "p", 5.0, &day(8))];
        let stats = DuplicateStats::from_ratings(&changed);
        let axis = normalize_time(&changed).unwrap();
        let edges = collapse_duplicates(&changed, &stats, &axis);
        assert_eq!(edges[0].value, 5.0);
        assert_eq!(edges[0].time, 5);
        assert_eq!(edges[0].spamicity, 0.0);
    }

    #[test]
    fn collapse_four_votes_among_ten() {
        let mut raw = Vec::new();
        for d in 0..4 {
            raw.push(rr("spammer", "p", 5.0, &day(d)));
        }
        for u in 0..6 {
            raw.push(rr(&format!("h{u}"), "p", 3.0, &day(10)));
        }
        let stats = DuplicateStats::from_ratings(&raw);
        let axis = normalize_time(&raw).unwrap();
        let edges = collapse_duplicates(&raw, &stats, &axis);
        let spam = edges
            .iter()
            .find(|e| e.reviewer.as_str() == "spammer")
            .unwrap();
        assert!((spam.spamicity - 0.4).abs() < 1e-12);
        assert_eq!(edges.len(), 7);
    }

    #[test]
    fn no_duplicates_means_zero_spamicity() {
        let raw = vec![rr("a", "p", 2.0, &day(0)), rr("b", "p", 4.0, &day(1))];
        let stats = DuplicateStats::from_ratings(&raw);
        let edges = collapse_duplicates(&raw, &stats, &normalize_time(&raw).unwrap());
        assert_eq!(edges.len(), 2);
        assert!(edges.iter().all(|e| e.spamicity == 0.0));
    }

    #[test]
    fn time_normalization() {
        let raw = vec![
            rr("a", "p", 2.0, "2004-01-31"),
            rr("b", "p", 2.0, "2004-01-01"),
        ];
        let axis = normalize_time(&raw).unwrap();
        assert_eq!(axis.epoch(), NaiveDate::from_ymd_opt(2004, 1, 1).unwrap());
        assert_eq!(axis.days(raw[0].date), 30);
        assert_eq!(axis.days(raw[1].date), 0);

        let single = vec![rr("a", "p", 2.0, "2010-06-15")];
        let axis = normalize_time(&single).unwrap();
        assert_eq!(axis.epoch(), single[0].date);
        assert_eq!(axis.days(single[0].date), 0);

        assert!(matches!(normalize_time(&[]), Err(IngestError::EmptyLog)));
    }

    #[test]
    fn pipeline_builds_graph() {
        let raw = vec![
            rr("a", "p", 2.0, &day(2)),
            rr("a", "p", 3.0, &day(4)),
            rr("b", "p", 4.0, &day(0)),
        ];
        let g = build_graph(
            &raw,
            &IngestOptions {
                reviewer_min: 1,
                product_min: 1,
                max_value: 5.0,
            },
        )
        .unwrap();
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edge("a", "p").unwrap().time, 4);
        assert_eq!(g.epoch(), NaiveDate::from_ymd_opt(2004, 1, 1));

        let empty = build_graph(&[], &IngestOptions::default()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.epoch(), None);
    }
}

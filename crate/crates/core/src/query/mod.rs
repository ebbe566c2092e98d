//! The `getbicliques` query language.
//!
//! ```text
//! getbicliques[.products|.reviewers]([v,t,r,m]) [filter{ on(...); contains(...); DOC > x; }];
//! ```
//!
//! Keywords are case-insensitive and the singular spellings `product`,
//! `reviewer` and `contain` are accepted. Identifiers may be bare or quoted
//! with `'`, `"` or a backtick closed by `'`. A `;` may also sit between the
//! closing parenthesis and `filter`.
//!
//! Evaluation replays detection at the session threshold with the query's
//! weights, then keeps examined groups whose DOC exceeds the query floor
//! (`DOC > x`, or the session threshold when absent), whose products include
//! every `on` id and whose reviewers include every `contains` id.

mod lexer;

use crate::detector::{DetectError, DetectionResult, Detector, ScoredGroup};
use crate::model::{DetectionConfig, ProductId, RatingGraph, ReviewerId, Weights};
use lexer::{tokenize, Tok, Token};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("invalid query at position {position}: {message}")]
    Semantic { position: usize, message: String },
    #[error("unknown {kind} '{id}'")]
    UnknownId { kind: &'static str, id: String },
    #[error(transparent)]
    Detect(#[from] DetectError),
}

impl QueryError {
    pub fn is_syntax(&self) -> bool {
        matches!(self, QueryError::Syntax { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Bicliques,
    Products,
    Reviewers,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filters {
    /// Products every kept group must target.
    pub on: Option<Vec<String>>,
    /// Reviewers every kept group must contain.
    pub contains: Option<Vec<String>>,
    pub doc_min: Option<f64>,
}

impl Filters {
    pub fn is_empty(&self) -> bool {
        self.on.is_none() && self.contains.is_none() && self.doc_min.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub projection: Projection,
    pub weights: Option<Weights>,
    pub filters: Filters,
}

fn quote(id: &str) -> String {
    if id.contains('\'') {
        format!("\"{id}\"")
    } else {
        format!("'{id}'")
    }
}

fn id_list(ids: &[String]) -> String {
    ids.iter().map(|i| quote(i)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("getbicliques")?;
        match self.projection {
            Projection::Bicliques => {}
            Projection::Products => f.write_str(".products")?,
            Projection::Reviewers => f.write_str(".reviewers")?,
        }
        f.write_str("(")?;
        if let Some(w) = &self.weights {
            let [a, b, c, d] = w.as_array();
            write!(f, "{a},{b},{c},{d}")?;
        }
        f.write_str(")")?;
        if !self.filters.is_empty() {
            f.write_str(" filter{")?;
            if let Some(on) = &self.filters.on {
                write!(f, " on({});", id_list(on))?;
            }
            if let Some(c) = &self.filters.contains {
                write!(f, " contains({});", id_list(c))?;
            }
            if let Some(x) = self.filters.doc_min {
                write!(f, " DOC > {x};")?;
            }
            f.write_str(" }")?;
        }
        f.write_str(";")
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, QueryError> {
        let t = self.peek();
        Err(QueryError::Syntax {
            position: t.pos,
            expected: expected.into(),
            found: t.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token, QueryError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            self.error(expected)
        }
    }

    fn keyword(&self) -> Option<String> {
        match &self.peek().tok {
            Tok::Word(w) => Some(w.to_ascii_lowercase()),
            _ => None,
        }
    }

    fn number(&mut self) -> Result<(f64, usize), QueryError> {
        match &self.peek().tok {
            Tok::Number(n) => {
                let v = n.parse().expect("lexer checked");
                let pos = self.next().pos;
                Ok((v, pos))
            }
            _ => self.error("number"),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        if self.keyword().as_deref() != Some("getbicliques") {
            return self.error("'getbicliques'");
        }
        self.next();
        let mut projection = Projection::Bicliques;
        if self.peek().tok == Tok::Dot {
            self.next();
            projection = match self.keyword().as_deref() {
                Some("products" | "product") => Projection::Products,
                Some("reviewers" | "reviewer") => Projection::Reviewers,
                _ => return self.error("'products' or 'reviewers'"),
            };
            self.next();
        }
        self.expect(Tok::LParen, "'('")?;
        let mut weights = None;
        if self.peek().tok != Tok::RParen {
            let (first, pos) = self.number()?;
            let mut w = vec![first];
            for _ in 0..3 {
                self.expect(Tok::Comma, "','")?;
                w.push(self.number()?.0);
            }
            weights =
                Some(
                    Weights::new(w[0], w[1], w[2], w[3]).map_err(|_| QueryError::Semantic {
                        position: pos,
                        message: format!(
                            "weights must be non-negative and sum to 1 (sum is {})",
                            w.iter().sum::<f64>()
                        ),
                    })?,
                );
        }
        self.expect(Tok::RParen, "')' or four weights")?;

        let mut filters = Filters::default();
        let semi_before_filter = self.peek().tok == Tok::Semi;
        if semi_before_filter {
            self.next();
        }
        if self.keyword().as_deref() == Some("filter") {
            self.next();
            filters = self.filter_block()?;
            self.expect(Tok::Semi, "';'")?;
        } else if !semi_before_filter {
            return self.error("';' or 'filter'");
        }
        self.expect(Tok::Eof, "end of query")?;
        Ok(QueryAst {
            projection,
            weights,
            filters,
        })
    }

    fn filter_block(&mut self) -> Result<Filters, QueryError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut f = Filters::default();
        loop {
            let pos = self.peek().pos;
            let dup = |name: &str| QueryError::Semantic {
                position: pos,
                message: format!("duplicate {name} clause"),
            };
            match self.keyword().as_deref() {
                Some("on") => {
                    self.next();
                    let ids = self.id_list()?;
                    if f.on.replace(ids).is_some() {
                        return Err(dup("on"));
                    }
                }
                Some("contains" | "contain") => {
                    self.next();
                    let ids = self.id_list()?;
                    if f.contains.replace(ids).is_some() {
                        return Err(dup("contains"));
                    }
                }
                Some("doc") => {
                    self.next();
                    self.expect(Tok::Gt, "'>'")?;
                    let (x, xpos) = self.number()?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(QueryError::Semantic {
                            position: xpos,
                            message: format!("DOC threshold must lie in [0, 1], got {x}"),
                        });
                    }
                    if f.doc_min.replace(x).is_some() {
                        return Err(dup("DOC"));
                    }
                }
                _ if f.is_empty() => return self.error("'on', 'contains' or 'DOC'"),
                _ => {
                    self.expect(Tok::RBrace, "'on', 'contains', 'DOC' or '}'")?;
                    return Ok(f);
                }
            }
            self.expect(Tok::Semi, "';'")?;
        }
    }

    fn id_list(&mut self) -> Result<Vec<String>, QueryError> {
        self.expect(Tok::LParen, "'('")?;
        let mut ids = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Word(s) | Tok::Quoted(s) | Tok::Number(s) => {
                    ids.push(s.trim().to_string());
                    self.next();
                }
                _ => return self.error("identifier"),
            }
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        Ok(ids)
    }
}

pub fn parse(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = tokenize(text)?;
    Parser { tokens, at: 0 }.query()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "items")]
pub enum QueryOutput {
    /// Kept groups by descending DOC.
    Bicliques(Vec<ScoredGroup>),
    Products(Vec<ProductId>),
    Reviewers(Vec<ReviewerId>),
}

impl QueryOutput {
    pub fn len(&self) -> usize {
        match self {
            QueryOutput::Bicliques(v) => v.len(),
            QueryOutput::Products(v) => v.len(),
            QueryOutput::Reviewers(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryAnswer {
    pub weights: Weights,
    pub threshold: f64,
    pub output: QueryOutput,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A graph plus mined groups, answering any number of queries. Queries that
/// only change weights or threshold reuse the cached groups.
pub struct QuerySession<'g> {
    detector: Detector<'g>,
    strict: bool,
}

impl<'g> QuerySession<'g> {
    /// Mines `graph` afresh.
    pub fn fresh(
        graph: &'g RatingGraph,
        config: &DetectionConfig,
        strict: bool,
    ) -> Result<Self, QueryError> {
        Ok(Self {
            detector: Detector::new(graph, config)?,
            strict,
        })
    }

    /// Reuses a saved detection result.
    pub fn cached(
        graph: &'g RatingGraph,
        config: &DetectionConfig,
        cache: &DetectionResult,
        strict: bool,
    ) -> Result<Self, QueryError> {
        Ok(Self {
            detector: Detector::from_result(graph, config, cache)?,
            strict,
        })
    }

    pub fn config(&self) -> &DetectionConfig {
        self.detector.config()
    }

    pub fn evaluate(&mut self, ast: &QueryAst) -> Result<QueryAnswer, QueryError> {
        let unknown = unknown_ids(self.detector.graph(), ast);
        if self.strict {
            if let Some(e) = unknown.first() {
                return Err(e.clone());
            }
        }
        let warnings = unknown.iter().map(|e| e.to_string()).collect();
        let weights = ast.weights.unwrap_or(self.detector.config().weights);
        let threshold = ast.filters.doc_min.unwrap_or(self.detector.config().delta);
        let result = self.detector.run(self.detector.config().delta, weights)?;
        let mut kept: Vec<ScoredGroup> = (0..result.groups.len())
            .map(|i| ScoredGroup {
                biclique: result.groups[i].biclique.clone(),
                report: result.report(i),
            })
            .filter(|g| g.report.doc > threshold && keeps(&ast.filters, g))
            .collect();
        kept.sort_by(|a, b| {
            b.report
                .doc
                .total_cmp(&a.report.doc)
                .then_with(|| a.biclique.reviewers().cmp(b.biclique.reviewers()))
                .then_with(|| a.biclique.products().cmp(b.biclique.products()))
        });
        let output = match ast.projection {
            Projection::Bicliques => QueryOutput::Bicliques(kept),
            Projection::Products => QueryOutput::Products(
                kept.iter()
                    .flat_map(|g| g.biclique.products().iter().cloned())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            ),
            Projection::Reviewers => QueryOutput::Reviewers(
                kept.iter()
                    .flat_map(|g| g.biclique.reviewers().iter().cloned())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            ),
        };
        Ok(QueryAnswer {
            weights,
            threshold,
            output,
            warnings,
        })
    }
}

fn unknown_ids(graph: &RatingGraph, ast: &QueryAst) -> Vec<QueryError> {
    let products = ast
        .filters
        .on
        .iter()
        .flatten()
        .filter(|id| !graph.contains_product(id))
        .map(|id| QueryError::UnknownId {
            kind: "product",
            id: id.clone(),
        });
    let reviewers = ast
        .filters
        .contains
        .iter()
        .flatten()
        .filter(|id| !graph.contains_reviewer(id))
        .map(|id| QueryError::UnknownId {
            kind: "reviewer",
            id: id.clone(),
        });
    products.chain(reviewers).collect()
}

fn keeps(filters: &Filters, g: &ScoredGroup) -> bool {
    let has_products = filters.on.as_ref().is_none_or(|ids| {
        ids.iter()
            .all(|id| g.biclique.product_position(id).is_some())
    });
    let has_reviewers = filters.contains.as_ref().is_none_or(|ids| {
        ids.iter()
            .all(|id| g.biclique.reviewer_position(id).is_some())
    });
    has_products && has_reviewers
}

/// One-shot evaluation, over `cache` when given and compatible with `config`.
pub fn evaluate(
    ast: &QueryAst,
    graph: &RatingGraph,
    config: &DetectionConfig,
    cache: Option<&DetectionResult>,
    strict: bool,
) -> Result<QueryAnswer, QueryError> {
    let mut session = match cache {
        Some(c) if Detector::compatible(config, &c.config) => {
            QuerySession::cached(graph, config, c, strict)?
        }
        _ => QuerySession::fresh(graph, config, strict)?,
    };
    session.evaluate(ast)
}

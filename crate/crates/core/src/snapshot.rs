//! Line-oriented JSON snapshot of a [`RatingGraph`].
//!
//! The first line is a header carrying the rating scale and epoch; each
//! following line is one edge, `{"r":..,"p":..,"v":..,"t":..,"s":..}`, in
//! canonical (reviewer, product) order. Writing a loaded snapshot reproduces
//! the input bytes exactly.

use crate::model::{GraphBuilder, ModelError, RatingEdge, RatingGraph};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

const FORMAT: &str = "bcs-snapshot";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot is empty (missing header line)")]
    MissingHeader,
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported snapshot format {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    max_value: f64,
    epoch: Option<NaiveDate>,
}

pub fn write_snapshot<W: Write>(graph: &RatingGraph, mut out: W) -> Result<(), SnapshotError> {
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
        max_value: graph.max_value(),
        epoch: graph.epoch(),
    };
    serde_json::to_writer(&mut out, &header).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    for edge in graph.edges() {
        serde_json::to_writer(&mut out, edge).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_snapshot_bytes(graph: &RatingGraph) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(graph, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<RatingGraph, SnapshotError> {
    let mut lines = input.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(SnapshotError::MissingHeader),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|source| SnapshotError::Json {
                    line: i + 1,
                    source,
                })?;
            }
        }
    };
    if header.format != FORMAT || header.version != VERSION {
        return Err(SnapshotError::Unsupported {
            format: header.format,
            version: header.version,
        });
    }
    let mut builder = GraphBuilder::new(header.max_value)
        .map_err(|source| SnapshotError::Model { line: 1, source })?
        .epoch(header.epoch);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let edge: RatingEdge =
            serde_json::from_str(&line).map_err(|source| SnapshotError::Json {
                line: i + 1,
                source,
            })?;
        builder
            .add_edge(edge)
            .map_err(|source| SnapshotError::Model {
                line: i + 1,
                source,
            })?;
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> RatingGraph {
        let mut b = GraphBuilder::new(5.0)
            .unwrap()
            .epoch(NaiveDate::from_ymd_opt(2004, 1, 1));
        b.add("u2", "p1", 4.5, 30, 0.0).unwrap();
        b.add("u1", "p1", 1.0, 0, 0.1).unwrap();
        b.add("u1", "B0000", 3.0, 12, 0.3333333333333333).unwrap();
        b.build()
    }

    #[test]
    fn layout() {
        let text = String::from_utf8(to_snapshot_bytes(&sample())).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"format":"bcs-snapshot","version":1,"max_value":5.0,"epoch":"2004-01-01"}"#
        );
        assert_eq!(
            lines[1],
            r#"{"r":"u1","p":"B0000","v":3.0,"t":12,"s":0.3333333333333333}"#
        );
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn rejects_duplicate_edges_and_bad_header() {
        let text = "{\"format\":\"bcs-snapshot\",\"version\":1,\"max_value\":5.0,\"epoch\":null}\n\
                    {\"r\":\"a\",\"p\":\"x\",\"v\":3.0,\"t\":0,\"s\":0.0}\n\
                    {\"r\":\"a\",\"p\":\"x\",\"v\":2.0,\"t\":0,\"s\":0.0}\n";
        let err = read_snapshot(text.as_bytes()).unwrap_err();
        assert!(matches!(err, SnapshotError::Model { line: 3, .. }));
        assert!(matches!(
            read_snapshot("".as_bytes()),
            Err(SnapshotError::MissingHeader)
        ));
        let other = "{\"format\":\"other\",\"version\":1,\"max_value\":5.0,\"epoch\":null}\n";
        assert!(matches!(
            read_snapshot(other.as_bytes()),
            Err(SnapshotError::Unsupported { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_byte_identical(
            edges in proptest::collection::btree_map(
                (0u8..6, 0u8..6),
                (1.0f64..=5.0, 0u32..5000, 0.0f64..=1.0),
                0..30,
            ),
            epoch_days in proptest::option::of(0i64..20000),
        ) {
            let epoch = epoch_days.map(|d| NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Duration::days(d));
            let mut b = GraphBuilder::new(5.0).unwrap().epoch(epoch);
            for ((r, p), (v, t, s)) in &edges {
                b.add(&format!("r{r}"), &format!("p{p}"), *v, *t, *s).unwrap();
            }
            let first = to_snapshot_bytes(&b.build());
            let loaded = read_snapshot(first.as_slice()).unwrap();
            prop_assert_eq!(to_snapshot_bytes(&loaded), first);
        }
    }
}

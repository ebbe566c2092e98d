use bcs_core::detector::{RankRow, ScoredGroup};
use bcs_core::query::QueryOutput;
use std::fmt::Write;

/// Left-aligned text table with a header rule.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
    };
    line(header.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn rank_table(rows: &[RankRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.group.to_string(),
                r.reviewers.to_string(),
                r.products.to_string(),
                format!("{:.3}", r.doc),
                format!("{:.3}", r.di),
                r.danger.label().to_string(),
            ]
        })
        .collect();
    table(&["group", "|R|", "|P|", "DOC", "DI", "verdict"], &body)
}

pub fn rank_csv(rows: &[RankRow]) -> String {
    let mut out = String::from("group,reviewers,products,doc,di,verdict\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.group,
            r.reviewers,
            r.products,
            r.doc,
            r.di,
            r.danger.label()
        )
        .unwrap();
    }
    out
}

fn join_ids<T: AsRef<str>>(ids: &[T]) -> String {
    ids.iter().map(|i| i.as_ref()).collect::<Vec<_>>().join(",")
}

pub fn groups_table(groups: &[ScoredGroup]) -> String {
    let body: Vec<Vec<String>> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            vec![
                (i + 1).to_string(),
                format!("{:.3}", g.report.doc),
                format!("{:.3}", g.report.di),
                join_ids(g.biclique.reviewers()),
                join_ids(g.biclique.products()),
            ]
        })
        .collect();
    table(&["#", "DOC", "DI", "reviewers", "products"], &body)
}

pub fn query_output(output: &QueryOutput) -> String {
    match output {
        QueryOutput::Bicliques(g) => groups_table(g),
        QueryOutput::Products(ids) => ids.iter().map(|i| format!("{i}\n")).collect(),
        QueryOutput::Reviewers(ids) => ids.iter().map(|i| format!("{i}\n")).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = table(&["a", "bbb"], &[vec!["long".into(), "x".into()]]);
        assert_eq!(t, "a     bbb\n----  ---\nlong  x\n");
    }
}

//! Text formats: alist, Graphviz DOT and JSON.

use std::fmt::Write as _;

use super::matrix::BinaryMatrix;
use super::Btu;
use crate::error::{Error, Result};

fn join(xs: impl IntoIterator<Item = usize>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes `h` in alist form:
///
/// ```text
/// N M                 (columns, rows)
/// max_col_weight max_row_weight
/// column weights
/// row weights
/// N lines of 1-based row indices, one per column
/// M lines of 1-based column indices, one per row
/// ```
pub fn to_alist(h: &BinaryMatrix) -> String {
    let cw = h.col_weights();
    let rw = h.row_weights();
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", h.cols(), h.rows());
    let _ = writeln!(
        out,
        "{} {}",
        cw.iter().max().copied().unwrap_or(0),
        rw.iter().max().copied().unwrap_or(0)
    );
    let _ = writeln!(out, "{}", join(cw.iter().copied()));
    let _ = writeln!(out, "{}", join(rw.iter().copied()));
    for c in 0..h.cols() {
        let _ = writeln!(out, "{}", join(h.col_support(c).into_iter().map(|r| r + 1)));
    }
    for r in 0..h.rows() {
        let _ = writeln!(out, "{}", join(h.row_support(r).into_iter().map(|c| c + 1)));
    }
    out
}

/// Parses the alist layout written by [`to_alist`]. Zero entries in the index
/// lists are treated as padding and skipped. The column and row sections
/// must describe the same matrix.
pub fn parse_alist(text: &str) -> Result<BinaryMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut numbers = |what: &str| -> Result<Vec<usize>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("alist: missing {what}")))?;
        line.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("alist: bad number {t:?} in {what}")))
            })
            .collect()
    };
    let dims = numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(Error::Parse("alist: dimension line needs two numbers".into()));
    };
    let _max = numbers("max weights")?;
    let cw = numbers("column weights")?;
    let rw = numbers("row weights")?;
    if cw.len() != n || rw.len() != m {
        return Err(Error::Parse("alist: weight line lengths disagree with dimensions".into()));
    }
    let mut by_cols = BinaryMatrix::zeros(m, n);
    for (c, &want) in cw.iter().enumerate() {
        let idx: Vec<usize> = numbers("column list")?.into_iter().filter(|&x| x != 0).collect();
        if idx.len() != want {
            return Err(Error::Parse(format!("alist: column {} lists {} rows, weight says {want}", c + 1, idx.len())));
        }
        for r in idx {
            if r > m {
                return Err(Error::Parse(format!("alist: row index {r} out of range")));
            }
            by_cols.set(r - 1, c, true);
        }
    }
    let mut by_rows = BinaryMatrix::zeros(m, n);
    for (r, &want) in rw.iter().enumerate() {
        let idx: Vec<usize> = numbers("row list")?.into_iter().filter(|&x| x != 0).collect();
        if idx.len() != want {
            return Err(Error::Parse(format!("alist: row {} lists {} columns, weight says {want}", r + 1, idx.len())));
        }
        for c in idx {
            if c > n {
                return Err(Error::Parse(format!("alist: column index {c} out of range")));
            }
            by_rows.set(r, c - 1, true);
        }
    }
    if by_cols != by_rows {
        return Err(Error::Parse("alist: row and column sections disagree".into()));
    }
    Ok(by_cols)
}

/// Undirected bipartite graph with depth vertices `d0..d{m-1}` and label
/// vertices `x1..xm`.
pub fn to_dot(b: &Btu) -> String {
    let m = b.m();
    let mut out = String::from("graph btu {\n");
    for d in 0..m {
        let _ = writeln!(out, "  d{d} [shape=box];");
    }
    for x in 1..=m {
        let _ = writeln!(out, "  x{x} [shape=circle];");
    }
    for d in 0..m {
        for p in b.perms().perms() {
            let _ = writeln!(out, "  d{d} -- x{};", p.label_at(d));
        }
    }
    out.push_str("}\n");
    out
}

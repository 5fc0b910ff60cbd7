use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0/1 matrix. Rows are check nodes, columns are variable nodes of the
/// associated Tanner graph.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::SizeMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => out.set(i, j, true),
                    _ => return Err(Error::Domain(format!("entry ({i},{j}) is {v}, not 0/1"))),
                }
            }
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| (0..self.cols).filter(|&c| self.get(r, c)).count())
            .collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|c| (0..self.rows).filter(|&r| self.get(r, c)).count())
            .collect()
    }

    /// Column indices of the ones in row `r`.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(r, c)).collect()
    }

    /// Row indices of the ones in column `c`.
    pub fn col_support(&self, c: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, c)).collect()
    }

    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        if row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(Error::Domain(format!(
                "block {rows}x{cols} at ({row0},{col0}) exceeds {}x{}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out.set(r, c, self.get(row0 + r, col0 + c));
            }
        }
        Ok(out)
    }

    /// Row-major bit string, used as a cheap identity for duplicate detection.
    pub fn fingerprint(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.data.len().div_ceil(64)];
        for (i, &b) in self.data.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }

    /// Tanner graph adjacency: vertices `0..rows` are rows, `rows..rows+cols`
    /// are columns.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    adj[r].push(self.rows + c);
                    adj[self.rows + c].push(r);
                }
            }
        }
        adj
    }

    /// Length of the shortest cycle in the Tanner graph, or `None` for a forest.
    pub fn girth(&self) -> Option<u32> {
        girth_of(&self.adjacency(), None)
    }

    /// Like [`girth`](Self::girth), but only looks for cycles of length at
    /// most `cap`.
    pub fn girth_bounded(&self, cap: u32) -> Option<u32> {
        girth_of(&self.adjacency(), Some(cap))
    }
}

/// Minimum over all start vertices of the shortest cycle seen by a BFS
/// rooted there. Each BFS stops once its frontier cannot beat the best
/// value found so far.
pub(crate) fn girth_of(adj: &[Vec<usize>], cap: Option<u32>) -> Option<u32> {
    let n = adj.len();
    let mut best = cap.map_or(u32::MAX, |c| c + 1);
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut touched = Vec::new();
    for s in 0..n {
        for &v in &touched {
            dist[v] = u32::MAX;
            parent[v] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        dist[s] = 0;
        touched.push(s);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if 2 * dist[u] + 1 >= best {
                break;
            }
            for &w in &adj[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    touched.push(w);
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
    }
    match cap {
        Some(c) if best > c => None,
        _ if best == u32::MAX => None,
        _ => Some(best),
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

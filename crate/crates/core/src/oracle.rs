//! Brute-force reference implementations.
//!
//! Nothing here calls into the graph, partition or enumeration code it is
//! meant to check: cycles are found by plain walk enumeration on a private
//! adjacency list, cycle types by direct iteration of the permutation, and
//! permutation spaces by full lexicographic scans of `S_m`.

use serde::{Deserialize, Serialize};

use crate::btu::Btu;
use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::permutations::{CompatibleSet, Permutation};

pub const GIRTH_MAX_M: usize = 12;
pub const COUNT_MAX_M: usize = 9;
pub const BEST_GIRTH_MAX_M: usize = 6;
pub const BEST_GIRTH_MAX_R: usize = 3;
pub const CANONICAL_MAX_M: usize = 5;

fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        return Err(Error::Guard { what, value, limit });
    }
    Ok(())
}

/// Rows of permutation labels, 0-based.
fn rows_of(b: &Btu) -> Vec<Vec<usize>> {
    b.perms()
        .perms()
        .iter()
        .map(|p| p.labels().iter().map(|&x| x as usize - 1).collect())
        .collect()
}

/// Shortest cycle found by enumerating simple closed walks of length
/// `4, 6, …, 2m` that start at their smallest vertex. `None` when `r < 2`.
pub fn brute_force_girth(b: &Btu) -> Result<Option<u32>> {
    let m = b.m();
    guard("brute_force_girth m", m, GIRTH_MAX_M)?;
    if b.r() < 2 {
        return Ok(None);
    }
    // vertex d < m is depth d; vertex m + x is label x + 1
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); 2 * m];
    for row in rows_of(b) {
        for (d, &x) in row.iter().enumerate() {
            nbrs[d].push(m + x);
            nbrs[m + x].push(d);
        }
    }
    for len in (4..=2 * m).step_by(2) {
        for s in 0..2 * m {
            let mut path = vec![s];
            if closes(&nbrs, &mut path, len) {
                return Ok(Some(len as u32));
            }
        }
    }
    Ok(None)
}

fn closes(nbrs: &[Vec<usize>], path: &mut Vec<usize>, len: usize) -> bool {
    let s = path[0];
    let at = *path.last().expect("non-empty path");
    for &w in &nbrs[at] {
        if path.len() == len {
            if w == s {
                return true;
            }
            continue;
        }
        if w > s && !path.contains(&w) {
            path.push(w);
            if closes(nbrs, path, len) {
                return true;
            }
            path.pop();
        }
    }
    false
}

/// Next permutation in lexicographic order, in place. False after the last.
fn next_lex(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Cycle lengths of the map `x ↦ q[x]`, sorted descending; a fixed point
/// shows up as a 1.
fn cycle_type(q: &[usize]) -> Vec<u32> {
    let mut seen = vec![false; q.len()];
    let mut out = Vec::new();
    for s in 0..q.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = q[x];
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Number of `q ∈ S_m` compatible with `I_m` whose partition relative to
/// `I_m` is `beta`, by scanning all of `S_m`.
pub fn brute_force_count_permutations(beta: &Partition) -> Result<u64> {
    let m = beta.m() as usize;
    guard("brute_force_count_permutations m", m, COUNT_MAX_M)?;
    let want: Vec<u32> = beta.parts().to_vec();
    let mut q: Vec<usize> = (0..m).collect();
    let mut count = 0;
    loop {
        // relative to the identity the successor map is q itself
        if cycle_type(&q) == want {
            count += 1;
        }
        if !next_lex(&mut q) {
            return Ok(count);
        }
    }
}

/// Every permutation of `0..m` in lexicographic order.
fn all_perms(m: usize) -> Vec<Vec<usize>> {
    let mut q: Vec<usize> = (0..m).collect();
    let mut out = vec![q.clone()];
    while next_lex(&mut q) {
        out.push(q.clone());
    }
    out
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x != y)
}

/// Exact best girth over all tree-ordered compatible tuples with
/// `p₁ = I_m`, scanned lexicographically. The witness is the first tuple
/// attaining the optimum.
pub fn brute_force_best_girth(m: usize, r: usize) -> Result<(u32, Btu)> {
    guard("brute_force_best_girth m", m, BEST_GIRTH_MAX_M)?;
    guard("brute_force_best_girth r", r, BEST_GIRTH_MAX_R)?;
    if r < 2 || m < r {
        return Err(Error::Domain(format!("no tree-ordered ({m},{r}) tuples to scan")));
    }
    let id: Vec<usize> = (0..m).collect();
    let perms = all_perms(m);
    let mut best: Option<(u32, Vec<Vec<usize>>)> = None;
    let mut consider = |rows: Vec<Vec<usize>>| -> Result<()> {
        let btu = to_btu(&rows)?;
        let g = brute_force_girth(&btu)?.unwrap_or(0);
        if best.as_ref().is_none_or(|(bg, _)| g > *bg) {
            best = Some((g, rows));
        }
        Ok(())
    };
    for p2 in &perms {
        if !disjoint(&id, p2) || p2[0] <= id[0] {
            continue;
        }
        if r == 2 {
            consider(vec![id.clone(), p2.clone()])?;
            continue;
        }
        for p3 in &perms {
            if disjoint(&id, p3) && disjoint(p2, p3) && p3[0] > p2[0] {
                consider(vec![id.clone(), p2.clone(), p3.clone()])?;
            }
        }
    }
    let (g, rows) = best.ok_or_else(|| Error::Domain(format!("no ({m},{r}) BTU exists")))?;
    Ok((g, to_btu(&rows)?))
}

fn to_btu(rows: &[Vec<usize>]) -> Result<Btu> {
    let perms = rows
        .iter()
        .map(|row| Permutation::new(row.iter().map(|&x| x as u32 + 1).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Btu::new(CompatibleSet::new(perms)?))
}

/// Row-major matrix bytes minimised over every row and column permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub bytes: Vec<u8>,
}

pub fn canonical_form(b: &Btu) -> Result<CanonicalForm> {
    let m = b.m();
    guard("canonical_form m", m, CANONICAL_MAX_M)?;
    let mut cell = vec![vec![0u8; m]; m];
    for row in rows_of(b) {
        for (d, &x) in row.iter().enumerate() {
            cell[d][x] = 1;
        }
    }
    let perms = all_perms(m);
    let mut best: Option<Vec<u8>> = None;
    let mut buf = vec![0u8; m * m];
    for rp in &perms {
        for cp in &perms {
            for i in 0..m {
                for j in 0..m {
                    buf[i * m + j] = cell[rp[i]][cp[j]];
                }
            }
            if best.as_ref().is_none_or(|b| buf < *b) {
                best = Some(buf.clone());
            }
        }
    }
    Ok(CanonicalForm {
        bytes: best.unwrap_or_default(),
    })
}

//! Micro-partitions, label mappings, cycle orders and permutation assembly.
//!
//! These are the stages that turn a pair of consecutive partitions into
//! concrete permutations:
//!
//! ```text
//! micro-partition → unordered labeled partition → ordered labeled partition → permutation
//! ```

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::permutations::{psi_blocks, successor_cycles, CompatibleSet, Permutation};

/// A non-negative integer matrix with prescribed row and column margins.
///
/// Row `j` corresponds to part `j` of the earlier partition, column `z` to
/// part `z` of the later one; `cells[j][z]` counts the labels of component
/// `j` that feed component `z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroPartition {
    row_margins: Vec<u32>,
    col_margins: Vec<u32>,
    cells: Vec<Vec<u32>>,
}

impl MicroPartition {
    pub fn new(row_margins: Vec<u32>, col_margins: Vec<u32>, cells: Vec<Vec<u32>>) -> Result<Self> {
        if cells.len() != row_margins.len() {
            return Err(Error::SizeMismatch {
                expected: row_margins.len(),
                found: cells.len(),
            });
        }
        for (j, row) in cells.iter().enumerate() {
            if row.len() != col_margins.len() {
                return Err(Error::SizeMismatch {
                    expected: col_margins.len(),
                    found: row.len(),
                });
            }
            if row.iter().sum::<u32>() != row_margins[j] {
                return Err(Error::Domain(format!("row {j} of {cells:?} misses its margin")));
            }
        }
        for (z, &c) in col_margins.iter().enumerate() {
            if cells.iter().map(|row| row[z]).sum::<u32>() != c {
                return Err(Error::Domain(format!("column {z} of {cells:?} misses its margin")));
            }
        }
        Ok(Self {
            row_margins,
            col_margins,
            cells,
        })
    }

    /// The micro-partition induced by two labeled partitions of the same label
    /// set: `cells[j][z] = |B_j ∩ B'_z|`.
    pub fn between(
        source: &UnorderedLabeledPartition,
        target: &UnorderedLabeledPartition,
    ) -> Result<Self> {
        if source.m() != target.m() {
            return Err(Error::SizeMismatch {
                expected: source.m() as usize,
                found: target.m() as usize,
            });
        }
        let mut owner = vec![0usize; source.m() as usize + 1];
        for (z, b) in target.subsets.iter().enumerate() {
            for &x in b {
                owner[x as usize] = z;
            }
        }
        let mut cells = vec![vec![0u32; target.subsets.len()]; source.subsets.len()];
        for (j, b) in source.subsets.iter().enumerate() {
            for &x in b {
                cells[j][owner[x as usize]] += 1;
            }
        }
        Ok(Self {
            row_margins: source.sizes(),
            col_margins: target.sizes(),
            cells,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_margins.len()
    }

    pub fn cols(&self) -> usize {
        self.col_margins.len()
    }

    pub fn cells(&self) -> &[Vec<u32>] {
        &self.cells
    }

    pub fn cell(&self, j: usize, z: usize) -> u32 {
        self.cells[j][z]
    }

    pub fn row_margins(&self) -> &[u32] {
        &self.row_margins
    }

    pub fn col_margins(&self) -> &[u32] {
        &self.col_margins
    }
}

/// Every micro-partition of `beta_v` with respect to `beta_u`, in row-major
/// lexicographic order with larger cell values first.
pub fn enumerate_micropartitions(
    beta_u: &Partition,
    beta_v: &Partition,
) -> Result<Vec<MicroPartition>> {
    if beta_u.m() != beta_v.m() {
        return Err(Error::SizeMismatch {
            expected: beta_u.m() as usize,
            found: beta_v.m() as usize,
        });
    }
    let rows = beta_u.parts().to_vec();
    let cols = beta_v.parts().to_vec();
    let mut cells = vec![vec![0u32; cols.len()]; rows.len()];
    let mut row_rem = rows.clone();
    let mut col_rem = cols.clone();
    let mut out = Vec::new();
    fill_cells(0, 0, &mut cells, &mut row_rem, &mut col_rem, &mut |cells| {
        out.push(MicroPartition {
            row_margins: rows.clone(),
            col_margins: cols.clone(),
            cells: cells.to_vec(),
        })
    });
    Ok(out)
}

fn fill_cells(
    j: usize,
    z: usize,
    cells: &mut Vec<Vec<u32>>,
    row_rem: &mut [u32],
    col_rem: &mut [u32],
    emit: &mut dyn FnMut(&[Vec<u32>]),
) {
    let (rows, cols) = (row_rem.len(), col_rem.len());
    if j == rows {
        if col_rem.iter().all(|&c| c == 0) {
            emit(cells);
        }
        return;
    }
    if z == cols {
        if row_rem[j] == 0 {
            fill_cells(j + 1, 0, cells, row_rem, col_rem, emit);
        }
        return;
    }
    // whatever this cell leaves must fit in the rest of the row
    let later: u32 = col_rem[z + 1..].iter().sum();
    let hi = row_rem[j].min(col_rem[z]);
    let lo = row_rem[j].saturating_sub(later);
    for v in (lo..=hi).rev() {
        cells[j][z] = v;
        row_rem[j] -= v;
        col_rem[z] -= v;
        fill_cells(j, z + 1, cells, row_rem, col_rem, emit);
        row_rem[j] += v;
        col_rem[z] += v;
    }
    cells[j][z] = 0;
}

fn binomial(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `Π_j Π_z C(p_j − Σ_{k<z} x_{j,k}, x_{j,z})`: the number of ways to realise
/// a micro-partition as label sets.
pub fn count_label_mappings(micro: &MicroPartition) -> Result<u128> {
    let mut total: u128 = 1;
    for (j, row) in micro.cells.iter().enumerate() {
        let mut left = micro.row_margins[j];
        for &x in row {
            let c = binomial(left, x).ok_or(Error::Overflow("count_label_mappings"))?;
            total = total
                .checked_mul(c)
                .ok_or(Error::Overflow("count_label_mappings"))?;
            left -= x;
        }
    }
    Ok(total)
}

/// Disjoint label subsets `B_1 … B_y` covering `1..=m`, each stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnorderedLabeledPartition {
    subsets: Vec<Vec<u32>>,
}

impl UnorderedLabeledPartition {
    pub fn new(mut subsets: Vec<Vec<u32>>) -> Result<Self> {
        let m: usize = subsets.iter().map(Vec::len).sum();
        let mut seen = vec![false; m + 1];
        for b in &mut subsets {
            if b.len() < 2 {
                return Err(Error::Domain(format!("labeled subset {b:?} has fewer than 2 labels")));
            }
            b.sort_unstable();
            for &x in b.iter() {
                if x == 0 || x as usize > m || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(Error::Domain(format!(
                        "label {x} is repeated or outside 1..={m}"
                    )));
                }
            }
        }
        Ok(Self { subsets })
    }

    /// The single subset `{1, …, m}`.
    pub fn whole(m: u32) -> Result<Self> {
        Self::new(vec![(1..=m).collect()])
    }

    /// The consecutive label blocks fixed by `Ψ(β)`.
    pub fn psi_blocks(beta: &Partition) -> Self {
        Self {
            subsets: psi_blocks(beta),
        }
    }

    pub fn subsets(&self) -> &[Vec<u32>] {
        &self.subsets
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.subsets.iter().map(|b| b.len() as u32).collect()
    }

    pub fn m(&self) -> u32 {
        self.subsets.iter().map(|b| b.len() as u32).sum()
    }

    /// True when subsets of equal size appear in increasing order of their
    /// minimum label. Exactly one ordering of each unordered collection has
    /// this property.
    pub fn is_canonically_ordered(&self) -> bool {
        self.subsets
            .windows(2)
            .all(|w| w[0].len() != w[1].len() || w[0][0] < w[1][0])
    }
}

/// Per-cell label lists realising a micro-partition: `cells[j][z]` holds
/// `x_{j,z}` distinct labels drawn from source subset `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    cells: Vec<Vec<Vec<u32>>>,
}

impl LabelMapping {
    pub fn cells(&self) -> &[Vec<Vec<u32>>] {
        &self.cells
    }

    /// Column-wise unions: target subset `z` collects cell `(j, z)` for all `j`.
    pub fn target(&self) -> UnorderedLabeledPartition {
        let cols = self.cells.first().map_or(0, Vec::len);
        let subsets = (0..cols)
            .map(|z| {
                let mut b: Vec<u32> = self.cells.iter().flat_map(|row| row[z].iter().copied()).collect();
                b.sort_unstable();
                b
            })
            .collect();
        UnorderedLabeledPartition { subsets }
    }
}

/// Odometer over the per-row splits of a source labeled partition.
#[derive(Debug, Clone)]
pub struct LabelMappings {
    splits: Vec<Vec<Vec<Vec<u32>>>>,
    index: Vec<usize>,
    done: bool,
}

impl Iterator for LabelMappings {
    type Item = LabelMapping;

    fn next(&mut self) -> Option<LabelMapping> {
        if self.done {
            return None;
        }
        let cells = self
            .splits
            .iter()
            .zip(&self.index)
            .map(|(row, &i)| row[i].clone())
            .collect();
        // advance, last row fastest
        self.done = true;
        for r in (0..self.index.len()).rev() {
            self.index[r] += 1;
            if self.index[r] < self.splits[r].len() {
                self.done = false;
                break;
            }
            self.index[r] = 0;
        }
        Some(LabelMapping { cells })
    }
}

/// All label mappings of `micro` drawing row `j` from `source.subsets()[j]`.
pub fn label_mappings(
    micro: &MicroPartition,
    source: &UnorderedLabeledPartition,
) -> Result<LabelMappings> {
    if source.sizes() != micro.row_margins {
        return Err(Error::Domain(format!(
            "source subset sizes {:?} do not match micro-partition rows {:?}",
            source.sizes(),
            micro.row_margins
        )));
    }
    let splits: Vec<_> = source
        .subsets
        .iter()
        .zip(&micro.cells)
        .map(|(b, row)| {
            let mut out = Vec::new();
            split_rec(b, row, &mut Vec::new(), &mut out);
            out
        })
        .collect();
    let done = splits.iter().any(Vec::is_empty);
    Ok(LabelMappings {
        index: vec![0; splits.len()],
        splits,
        done,
    })
}

/// Stream of target labeled partitions; one per label mapping, duplicates
/// included.
pub fn enumerate_label_mappings(
    micro: &MicroPartition,
    source: &UnorderedLabeledPartition,
) -> Result<impl Iterator<Item = UnorderedLabeledPartition>> {
    Ok(label_mappings(micro, source)?.map(|lm| lm.target()))
}

fn split_rec(rest: &[u32], sizes: &[u32], acc: &mut Vec<Vec<u32>>, out: &mut Vec<Vec<Vec<u32>>>) {
    let Some((&k, tail)) = sizes.split_first() else {
        debug_assert!(rest.is_empty());
        out.push(acc.clone());
        return;
    };
    let n = rest.len();
    let k = k as usize;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<u32> = idx.iter().map(|&i| rest[i]).collect();
        let left: Vec<u32> = rest
            .iter()
            .enumerate()
            .filter(|(i, _)| idx.binary_search(i).is_err())
            .map(|(_, &x)| x)
            .collect();
        acc.push(chosen);
        split_rec(&left, tail, acc, out);
        acc.pop();
        // next k-combination of 0..n in lexicographic order
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// One cycle order per labeled subset; each cycle starts at its minimum label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderedLabeledPartition {
    cycles: Vec<Vec<u32>>,
}

impl OrderedLabeledPartition {
    /// Rotates every cycle so that it begins with its minimum label.
    pub fn new(mut cycles: Vec<Vec<u32>>) -> Result<Self> {
        UnorderedLabeledPartition::new(cycles.clone())?;
        for c in &mut cycles {
            let at = c
                .iter()
                .enumerate()
                .min_by_key(|&(_, &x)| x)
                .map(|(i, _)| i)
                .unwrap_or(0);
            c.rotate_left(at);
        }
        Ok(Self { cycles })
    }

    pub fn cycles(&self) -> &[Vec<u32>] {
        &self.cycles
    }

    pub fn underlying(&self) -> UnorderedLabeledPartition {
        UnorderedLabeledPartition::new(self.cycles.clone()).expect("validated at construction")
    }

    /// Cycle lengths as a partition.
    pub fn size_profile(&self) -> Partition {
        Partition::new(self.cycles.iter().map(|c| c.len() as u32).collect())
            .expect("cycles have at least two labels")
    }
}

/// Visits every cycle order of `target` whose assembled successor of
/// `context.last()` is compatible with the whole context, together with the
/// assembled permutation.
///
/// Each cycle is enumerated starting from its minimum label, so every order
/// is visited once up to rotation. With `restricted` set and a context of one
/// permutation (the first stage), each subset gets only its ascending order,
/// which reproduces `Ψ` on the `Ψ` label blocks.
pub fn for_each_cycle_order<F>(
    target: &UnorderedLabeledPartition,
    context: &CompatibleSet,
    restricted: bool,
    mut visit: F,
) -> Result<ControlFlow<()>>
where
    F: FnMut(&OrderedLabeledPartition, &Permutation) -> ControlFlow<()>,
{
    let m = context.m();
    if target.m() as usize != m {
        return Err(Error::SizeMismatch {
            expected: m,
            found: target.m() as usize,
        });
    }
    let mut walk = CycleWalk {
        forbidden: context.perms().iter().map(|p| p.labels()).collect(),
        prev_depth: context.last().depths(),
        subsets: target.subsets(),
        ascending_only: restricted && context.r() == 1,
        next: vec![0; m],
        cycles: target.subsets().iter().map(|b| Vec::with_capacity(b.len())).collect(),
        used: vec![false; m + 1],
    };
    Ok(walk.subset(0, &mut visit))
}

/// Collects [`for_each_cycle_order`].
pub fn enumerate_cycle_orders(
    target: &UnorderedLabeledPartition,
    context: &CompatibleSet,
    restricted: bool,
) -> Result<Vec<OrderedLabeledPartition>> {
    let mut out = Vec::new();
    let _ = for_each_cycle_order(target, context, restricted, |o, _| {
        out.push(o.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

struct CycleWalk<'a> {
    forbidden: Vec<&'a [u32]>,
    prev_depth: Vec<usize>,
    subsets: &'a [Vec<u32>],
    ascending_only: bool,
    next: Vec<u32>,
    cycles: Vec<Vec<u32>>,
    used: Vec<bool>,
}

impl CycleWalk<'_> {
    /// Sets the successor of `from` to `to`, if no context permutation
    /// already holds `to` at that depth.
    fn link(&mut self, from: u32, to: u32) -> bool {
        let d = self.prev_depth[from as usize];
        if self.forbidden.iter().any(|p| p[d] == to) {
            return false;
        }
        self.next[d] = to;
        true
    }

    fn subset<F>(&mut self, s: usize, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&OrderedLabeledPartition, &Permutation) -> ControlFlow<()>,
    {
        if s == self.subsets.len() {
            let order = OrderedLabeledPartition {
                cycles: self.cycles.clone(),
            };
            let perm = Permutation::from_labels_unchecked(self.next.clone());
            return visit(&order, &perm);
        }
        let first = self.subsets[s][0];
        self.cycles[s].push(first);
        self.used[first as usize] = true;
        let flow = self.extend(s, first, visit);
        self.used[first as usize] = false;
        self.cycles[s].pop();
        flow
    }

    fn extend<F>(&mut self, s: usize, last: u32, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&OrderedLabeledPartition, &Permutation) -> ControlFlow<()>,
    {
        let subset = self.subsets[s].as_slice();
        if self.cycles[s].len() == subset.len() {
            if !self.link(last, subset[0]) {
                return ControlFlow::Continue(());
            }
            return self.subset(s + 1, visit);
        }
        for &x in subset {
            if self.used[x as usize] {
                continue;
            }
            if self.link(last, x) {
                self.used[x as usize] = true;
                self.cycles[s].push(x);
                let flow = self.extend(s, x, visit);
                self.cycles[s].pop();
                self.used[x as usize] = false;
                flow?;
            }
            if self.ascending_only {
                break;
            }
        }
        ControlFlow::Continue(())
    }
}

/// The permutation `q` that places `l′` at the depth where `prev` places `l`,
/// for every consecutive pair `(l, l′)` of every cycle (wrapping around).
pub fn assemble_permutation(prev: &Permutation, order: &OrderedLabeledPartition) -> Result<Permutation> {
    assemble_cycles(prev, &order.cycles)
}

/// [`assemble_permutation`] on raw cycles in any rotation.
pub fn assemble_cycles(prev: &Permutation, cycles: &[Vec<u32>]) -> Result<Permutation> {
    let depth = prev.depths();
    let mut q = vec![0u32; prev.m()];
    for c in cycles {
        for (i, &l) in c.iter().enumerate() {
            let d = *depth
                .get(l as usize)
                .ok_or_else(|| Error::Domain(format!("label {l} outside 1..={}", prev.m())))?;
            q[d] = c[(i + 1) % c.len()];
        }
    }
    Permutation::new(q)
}

/// Inverse of [`assemble_permutation`]: the cycles of the successor map from
/// `prev` to `q`.
pub fn cycle_decomposition(prev: &Permutation, q: &Permutation) -> Result<OrderedLabeledPartition> {
    crate::permutations::partition_between(prev, q)?;
    OrderedLabeledPartition::new(successor_cycles(prev, q))
}

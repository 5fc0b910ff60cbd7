//! Permutations of `1..=m`, compatibility, and tree-ordered enumeration of
//! compatible extensions.
//!
//! A permutation is read as a path in the symmetric permutation tree: the
//! label at position `d` is the node at depth `d + 1`. Leaf order of the tree
//! is therefore lexicographic order of the label sequences.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::Partition;

/// A bijective label sequence `x_1 … x_m` over `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    labels: Vec<u32>,
}

impl Permutation {
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidPermutation {
                labels,
                reason: "empty".into(),
            });
        }
        let mut seen = vec![false; m + 1];
        for &x in &labels {
            let ok = (1..=m as u32).contains(&x) && !std::mem::replace(&mut seen[x as usize], true);
            if !ok {
                return Err(Error::InvalidPermutation {
                    reason: format!("label {x} is out of range or repeated"),
                    labels,
                });
            }
        }
        Ok(Self { labels })
    }

    /// `I_m`.
    pub fn identity(m: usize) -> Self {
        Self {
            labels: (1..=m as u32).collect(),
        }
    }

    /// Places label `((d + s) mod m) + 1` at depth `d`.
    pub fn cyclic_shift(m: usize, s: usize) -> Self {
        Self {
            labels: (0..m).map(|d| ((d + s) % m) as u32 + 1).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    /// Labels in depth order, 1-based.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, depth: usize) -> u32 {
        self.labels[depth]
    }

    /// `depths()[x]` is the depth holding label `x` (index 0 unused).
    pub fn depths(&self) -> Vec<usize> {
        let mut at = vec![usize::MAX; self.m() + 1];
        for (d, &x) in self.labels.iter().enumerate() {
            at[x as usize] = d;
        }
        at
    }

    pub(crate) fn from_labels_unchecked(labels: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(labels.clone()).is_ok());
        Self { labels }
    }
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;

    fn try_from(labels: Vec<u32>) -> Result<Self> {
        Permutation::new(labels)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.labels
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// True iff `p` and `q` disagree at every depth.
pub fn is_compatible(p: &Permutation, q: &Permutation) -> Result<bool> {
    same_size(p, q)?;
    Ok(p.labels.iter().zip(&q.labels).all(|(a, b)| a != b))
}

fn same_size(p: &Permutation, q: &Permutation) -> Result<()> {
    if p.m() != q.m() {
        return Err(Error::SizeMismatch {
            expected: p.m(),
            found: q.m(),
        });
    }
    Ok(())
}

/// Cycles of the label-successor map `τ(x) = b[depth of x in a]`, each
/// rotated to start at its minimum label, sorted by that minimum.
pub(crate) fn successor_cycles(a: &Permutation, b: &Permutation) -> Vec<Vec<u32>> {
    let m = a.m();
    let mut succ = vec![0u32; m + 1];
    for d in 0..m {
        succ[a.labels[d] as usize] = b.labels[d];
    }
    let mut seen = vec![false; m + 1];
    let mut cycles = Vec::new();
    for start in 1..=m as u32 {
        if seen[start as usize] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        while !seen[x as usize] {
            seen[x as usize] = true;
            cycle.push(x);
            x = succ[x as usize];
        }
        cycles.push(cycle);
    }
    cycles
}

/// The partition between two compatible permutations: the cycle type of the
/// label-successor map linking them.
pub fn partition_between(a: &Permutation, b: &Permutation) -> Result<Partition> {
    same_size(a, b)?;
    if let Some(d) = (0..a.m()).find(|&d| a.labels[d] == b.labels[d]) {
        return Err(Error::Incompatible {
            depth: d,
            label: a.labels[d],
        });
    }
    Partition::new(successor_cycles(a, b).iter().map(|c| c.len() as u32).collect())
}

/// `r` pairwise-compatible permutations listed in tree order (strictly
/// increasing first labels).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Permutation>", into = "Vec<Permutation>")]
pub struct CompatibleSet {
    perms: Vec<Permutation>,
}

impl CompatibleSet {
    pub fn new(perms: Vec<Permutation>) -> Result<Self> {
        let mut set = Self {
            perms: Vec::with_capacity(perms.len()),
        };
        for p in perms {
            set.push(p)?;
        }
        if set.perms.is_empty() {
            return Err(Error::Domain("a compatible set needs at least one permutation".into()));
        }
        Ok(set)
    }

    /// `{I_m}`.
    pub fn identity(m: usize) -> Self {
        Self {
            perms: vec![Permutation::identity(m)],
        }
    }

    /// Appends `q`, checking compatibility and tree order.
    pub fn push(&mut self, q: Permutation) -> Result<()> {
        if let Some(last) = self.perms.last() {
            same_size(last, &q)?;
            for p in &self.perms {
                if let Some(d) = (0..q.m()).find(|&d| p.labels[d] == q.labels[d]) {
                    return Err(Error::Incompatible {
                        depth: d,
                        label: q.labels[d],
                    });
                }
            }
            if q.labels[0] <= last.labels[0] {
                return Err(Error::Domain(format!(
                    "tree order violated: first label {} does not exceed {}",
                    q.labels[0], last.labels[0]
                )));
            }
        }
        self.perms.push(q);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Permutation> {
        if self.perms.len() > 1 {
            self.perms.pop()
        } else {
            None
        }
    }

    pub fn m(&self) -> usize {
        self.perms[0].m()
    }

    pub fn r(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn last(&self) -> &Permutation {
        self.perms.last().expect("non-empty")
    }
}

impl TryFrom<Vec<Permutation>> for CompatibleSet {
    type Error = Error;

    fn try_from(perms: Vec<Permutation>) -> Result<Self> {
        CompatibleSet::new(perms)
    }
}

impl From<CompatibleSet> for Vec<Permutation> {
    fn from(s: CompatibleSet) -> Self {
        s.perms
    }
}

/// Label blocks used by [`psi`]: consecutive runs `s+1 ..= s+q` for the parts
/// of `beta` in canonical order.
pub fn psi_blocks(beta: &Partition) -> Vec<Vec<u32>> {
    let mut start = 0u32;
    beta.parts()
        .iter()
        .map(|&q| {
            let block = (start + 1..=start + q).collect();
            start += q;
            block
        })
        .collect()
}

/// `Ψ(β)`: the identity together with the permutation that shifts labels by
/// one inside each consecutive block.
pub fn psi(beta: &Partition) -> CompatibleSet {
    let m = beta.m() as usize;
    let mut p2 = vec![0u32; m];
    for block in psi_blocks(beta) {
        let q = block.len();
        for (i, &x) in block.iter().enumerate() {
            p2[x as usize - 1] = block[(i + 1) % q];
        }
    }
    CompatibleSet {
        perms: vec![
            Permutation::identity(m),
            Permutation::from_labels_unchecked(p2),
        ],
    }
}

/// Every permutation extending `context` in tree order, optionally with a
/// prescribed partition to the last permutation of the context.
pub fn enumerate_compatible<'a>(
    context: &'a CompatibleSet,
    constraint: Option<&Partition>,
) -> Result<CompatibleExtensions<'a>> {
    CompatibleExtensions::new(context, constraint, &[])
}

/// Depth-first cursor over the compatible extensions of a [`CompatibleSet`].
///
/// Labels are tried in increasing order at each depth, so emissions follow
/// the leaf order of the symmetric permutation tree. Pruning uses a used-label
/// mask, the forbidden labels contributed by every context permutation, and
/// when a target partition is given, the cycles of the successor map that
/// close (or grow too long) while the prefix is built.
#[derive(Debug, Clone)]
pub struct CompatibleExtensions<'a> {
    context: &'a CompatibleSet,
    m: usize,
    min_first: u32,
    prefix_len: usize,
    assign: Vec<u32>,
    used: Vec<bool>,
    next_try: Vec<u32>,
    depth: usize,
    done: bool,
    pending_full: bool,
    cycles: Option<CycleTracker>,
}

#[derive(Debug, Clone)]
struct CycleTracker {
    // label -> depth in the last context permutation
    last_label: Vec<u32>,
    succ: Vec<u32>,
    pred: Vec<u32>,
    remaining: Vec<u32>,
    max_remaining: u32,
    closed_at: Vec<u32>,
}

impl CycleTracker {
    fn new(last: &Permutation, target: &Partition) -> Self {
        let m = last.m();
        Self {
            last_label: last.labels.clone(),
            succ: vec![0; m + 1],
            pred: vec![0; m + 1],
            remaining: target.multiplicities(),
            max_remaining: target.parts()[0],
            closed_at: vec![0; m],
        }
    }

    /// Adds `τ(last[d]) = v`; returns false (leaving no trace) if the target
    /// cycle type becomes unreachable.
    fn link(&mut self, d: usize, v: u32) -> bool {
        let u = self.last_label[d];
        let mut len = 1u32;
        let mut x = v;
        loop {
            if x == u {
                break;
            }
            len += 1;
            let nx = self.succ[x as usize];
            if nx == 0 {
                // open chain: walk back from u to its head as well
                let mut h = u;
                while self.pred[h as usize] != 0 {
                    h = self.pred[h as usize];
                    len += 1;
                }
                if len > self.max_remaining {
                    return false;
                }
                self.succ[u as usize] = v;
                self.pred[v as usize] = u;
                self.closed_at[d] = 0;
                return true;
            }
            x = nx;
        }
        // closes a cycle of length `len`
        let slot = self.remaining.get_mut(len as usize);
        match slot {
            Some(c) if *c > 0 => *c -= 1,
            _ => return false,
        }
        self.succ[u as usize] = v;
        self.pred[v as usize] = u;
        self.closed_at[d] = len;
        self.refresh_max();
        true
    }

    fn unlink(&mut self, d: usize) {
        let u = self.last_label[d];
        let v = self.succ[u as usize];
        self.succ[u as usize] = 0;
        self.pred[v as usize] = 0;
        let len = std::mem::take(&mut self.closed_at[d]);
        if len > 0 {
            self.remaining[len as usize] += 1;
            self.refresh_max();
        }
    }

    fn refresh_max(&mut self) {
        self.max_remaining = self
            .remaining
            .iter()
            .rposition(|&c| c > 0)
            .unwrap_or(0) as u32;
    }
}

impl<'a> CompatibleExtensions<'a> {
    /// Cursor restricted to permutations starting with `prefix`. An
    /// inadmissible prefix yields an empty stream.
    pub fn new(
        context: &'a CompatibleSet,
        constraint: Option<&Partition>,
        prefix: &[u32],
    ) -> Result<Self> {
        let m = context.m();
        if let Some(c) = constraint {
            if c.m() as usize != m {
                return Err(Error::SizeMismatch {
                    expected: m,
                    found: c.m() as usize,
                });
            }
        }
        if prefix.len() > m {
            return Err(Error::SizeMismatch {
                expected: m,
                found: prefix.len(),
            });
        }
        let mut it = Self {
            context,
            m,
            min_first: context.last().labels[0],
            prefix_len: prefix.len(),
            assign: vec![0; m],
            used: vec![false; m + 1],
            next_try: vec![1; m],
            depth: 0,
            done: false,
            pending_full: false,
            cycles: constraint.map(|c| CycleTracker::new(context.last(), c)),
        };
        for (d, &x) in prefix.iter().enumerate() {
            if !it.try_place(d, x) {
                it.done = true;
                return Ok(it);
            }
        }
        it.depth = prefix.len();
        // a complete prefix is emitted once
        it.pending_full = it.depth == m;
        Ok(it)
    }

    fn admissible(&self, d: usize, x: u32) -> bool {
        !self.used[x as usize]
            && (d > 0 || x > self.min_first)
            && self.context.perms.iter().all(|p| p.labels[d] != x)
    }

    fn try_place(&mut self, d: usize, x: u32) -> bool {
        if x == 0 || x as usize > self.m || !self.admissible(d, x) {
            return false;
        }
        if let Some(t) = self.cycles.as_mut() {
            if !t.link(d, x) {
                return false;
            }
        }
        self.assign[d] = x;
        self.used[x as usize] = true;
        true
    }

    fn unplace(&mut self, d: usize) {
        let x = std::mem::take(&mut self.assign[d]);
        self.used[x as usize] = false;
        if let Some(t) = self.cycles.as_mut() {
            t.unlink(d);
        }
    }
}

impl Iterator for CompatibleExtensions<'_> {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if self.pending_full {
            self.pending_full = false;
            self.done = true;
            return Some(Permutation::from_labels_unchecked(self.assign.clone()));
        }
        while !self.done {
            let d = self.depth;
            let mut placed = false;
            while self.next_try[d] as usize <= self.m {
                let x = self.next_try[d];
                self.next_try[d] += 1;
                if self.try_place(d, x) {
                    placed = true;
                    break;
                }
            }
            if placed {
                if d + 1 == self.m {
                    let out = Permutation::from_labels_unchecked(self.assign.clone());
                    self.unplace(d);
                    return Some(out);
                }
                self.depth = d + 1;
                self.next_try[d + 1] = 1;
            } else if d == self.prefix_len {
                self.done = true;
            } else {
                self.depth = d - 1;
                self.unplace(d - 1);
            }
        }
        None
    }
}

/// The counting expression
/// `f(β) = (m − 1) · Σ_{distinct p_j} (m − 1)! / ((p_j − 1) · Π_{i ≠ j} p_i)`
/// evaluated exactly as a rational. It equals `(m − 1)!` for `β = (m)` but is
/// not a count of permutations for general `β`; see
/// [`crate::oracle::brute_force_count_permutations`].
pub fn count_f(beta: &Partition) -> Result<Ratio<u128>> {
    const LIMIT: usize = 30;
    let m = beta.m() as usize;
    if m > LIMIT {
        return Err(Error::Guard {
            what: "count_f m",
            value: m,
            limit: LIMIT,
        });
    }
    let fact: u128 = (1..m as u128).product();
    let parts = beta.parts();
    let mut sum = Ratio::from_integer(0u128);
    let mut seen = Vec::new();
    for (j, &pj) in parts.iter().enumerate() {
        if seen.contains(&pj) {
            continue;
        }
        seen.push(pj);
        let others: u128 = parts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &q)| q as u128)
            .product();
        let denom = (pj as u128 - 1)
            .checked_mul(others)
            .ok_or(Error::Overflow("count_f"))?;
        sum += Ratio::new(fact, denom);
    }
    Ok(sum * Ratio::from_integer(m as u128 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::enumerate_p2;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn perm(x: &[u32]) -> Permutation {
        Permutation::new(x.to_vec()).unwrap()
    }

    fn part(x: &[u32]) -> Partition {
        Partition::new(x.to_vec()).unwrap()
    }

    /// Derangement numbers by inclusion-exclusion.
    fn derangements(m: u64) -> u64 {
        let mut fact = vec![1i64; m as usize + 1];
        for i in 1..=m as usize {
            fact[i] = fact[i - 1] * i as i64;
        }
        (0..=m as usize)
            .map(|k| {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                sign * fact[m as usize] / fact[k]
            })
            .sum::<i64>() as u64
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
        assert!(Permutation::new(vec![]).is_err());
        assert_eq!(Permutation::cyclic_shift(4, 1), perm(&[2, 3, 4, 1]));
        assert_eq!(Permutation::cyclic_shift(4, 0), Permutation::identity(4));
    }

    #[test]
    fn compatibility_examples() {
        assert!(is_compatible(&perm(&[1, 2, 3, 4]), &perm(&[2, 1, 4, 3])).unwrap());
        assert!(!is_compatible(&perm(&[1, 2, 3, 4]), &perm(&[1, 2, 3, 4])).unwrap());
        assert!(is_compatible(&perm(&[1, 2, 3]), &perm(&[2, 3, 1])).unwrap());
        assert!(matches!(
            is_compatible(&perm(&[1, 2]), &perm(&[1, 2, 3])),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn partition_between_examples() {
        let i4 = Permutation::identity(4);
        assert_eq!(partition_between(&i4, &perm(&[2, 1, 4, 3])).unwrap(), part(&[2, 2]));
        for m in 2..=9 {
            let shift = Permutation::cyclic_shift(m, 1);
            assert_eq!(
                partition_between(&Permutation::identity(m), &shift).unwrap(),
                part(&[m as u32])
            );
        }
        assert!(matches!(
            partition_between(&i4, &perm(&[1, 3, 4, 2])),
            Err(Error::Incompatible { depth: 0, .. })
        ));
    }

    #[test]
    fn partition_between_is_symmetric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 200 {
            let m = 2 + (checked % 8);
            let mut a: Vec<u32> = (1..=m as u32).collect();
            let mut b = a.clone();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let (a, b) = (perm(&a), perm(&b));
            if !is_compatible(&a, &b).unwrap() {
                continue;
            }
            assert_eq!(
                partition_between(&a, &b).unwrap(),
                partition_between(&b, &a).unwrap()
            );
            checked += 1;
        }
    }

    #[test]
    fn psi_examples() {
        let s = psi(&part(&[2, 2]));
        assert_eq!(s.perms()[1], perm(&[2, 1, 4, 3]));
        let s = psi(&part(&[4]));
        assert_eq!(s.perms()[1], perm(&[2, 3, 4, 1]));
        assert_eq!(psi(&part(&[2, 3])).perms()[1], perm(&[2, 3, 1, 5, 4]));
    }

    #[test]
    fn psi_round_trip_and_invariants() {
        for m in 2..=10 {
            for beta in enumerate_p2(m).unwrap() {
                let s = psi(&beta);
                // re-validate through the checked constructor
                let again = CompatibleSet::new(s.perms().to_vec()).unwrap();
                assert_eq!(again.r(), 2);
                assert_eq!(partition_between(&s.perms()[0], &s.perms()[1]).unwrap(), beta);
            }
        }
    }

    #[test]
    fn compatible_set_rejects_bad_order_and_collisions() {
        let mut s = CompatibleSet::identity(3);
        assert!(s.push(perm(&[1, 3, 2])).is_err());
        s.push(perm(&[3, 1, 2])).unwrap();
        assert!(s.push(perm(&[2, 3, 1])).is_err(), "tree order");
        assert_eq!(s.pop(), Some(perm(&[3, 1, 2])));
        assert_eq!(s.pop(), None);
    }

    #[test]
    fn extension_examples() {
        let ctx = CompatibleSet::identity(2);
        let all: Vec<_> = enumerate_compatible(&ctx, None).unwrap().collect();
        assert_eq!(all, vec![perm(&[2, 1])]);

        let ctx = CompatibleSet::identity(4);
        assert_eq!(enumerate_compatible(&ctx, None).unwrap().count(), 9);
        let cycles: Vec<_> = enumerate_compatible(&ctx, Some(&part(&[4]))).unwrap().collect();
        assert_eq!(cycles.len(), 6);
        assert!(cycles.windows(2).all(|w| w[0] < w[1]), "tree order");
    }

    #[test]
    fn extension_counts_match_derangements() {
        for m in 2..=8usize {
            let ctx = CompatibleSet::identity(m);
            let d = derangements(m as u64);
            assert_eq!(enumerate_compatible(&ctx, None).unwrap().count() as u64, d, "m={m}");
            let full_cycles = enumerate_compatible(&ctx, Some(&part(&[m as u32])))
                .unwrap()
                .count() as u64;
            assert_eq!(full_cycles, (1..m as u64).product::<u64>());
            let by_type: u64 = enumerate_p2(m as u32)
                .unwrap()
                .iter()
                .map(|b| enumerate_compatible(&ctx, Some(b)).unwrap().count() as u64)
                .sum();
            assert_eq!(by_type, d, "m={m}");
        }
    }

    #[test]
    fn extensions_respect_context() {
        let ctx = psi(&part(&[3, 3]));
        let beta = part(&[2, 2, 2]);
        let mut n = 0;
        for q in enumerate_compatible(&ctx, Some(&beta)).unwrap() {
            for p in ctx.perms() {
                assert!(p.labels().iter().zip(q.labels()).all(|(a, b)| a != b));
            }
            assert!(q.label_at(0) > ctx.last().label_at(0));
            assert_eq!(partition_between(ctx.last(), &q).unwrap(), beta);
            n += 1;
        }
        assert!(n > 0);
    }

    #[test]
    fn prefix_cursor_partitions_the_stream() {
        let ctx = CompatibleSet::identity(5);
        let full: Vec<_> = enumerate_compatible(&ctx, None).unwrap().collect();
        let mut pieced = Vec::new();
        for a in 1..=5 {
            for b in 1..=5 {
                pieced.extend(CompatibleExtensions::new(&ctx, None, &[a, b]).unwrap());
            }
        }
        assert_eq!(full, pieced);
        let whole: Vec<_> = CompatibleExtensions::new(&ctx, None, &[2, 1, 4, 5, 3])
            .unwrap()
            .collect();
        assert_eq!(whole, vec![perm(&[2, 1, 4, 5, 3])]);
        assert_eq!(CompatibleExtensions::new(&ctx, None, &[1]).unwrap().count(), 0);
    }

    #[test]
    fn count_f_values() {
        assert_eq!(count_f(&part(&[5])).unwrap(), Ratio::from_integer(24));
        assert_eq!(count_f(&part(&[2, 2])).unwrap(), Ratio::from_integer(9));
        for m in 2..=12u32 {
            let expect: u128 = (1..m as u128).product();
            assert_eq!(count_f(&part(&[m])).unwrap(), Ratio::from_integer(expect));
        }
        assert!(count_f(&Partition::single(40).unwrap()).is_err());
    }
}

//! Partitions of `m` whose parts are all at least 2 (the set `P₂(m)`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of `P₂(m)`: a multiset of parts, each at least 2, summing to `m`.
///
/// Parts are kept in non-increasing order so that equality and hashing are
/// structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    /// Builds a partition from parts in any order.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidPartition {
                parts,
                reason: "no parts".into(),
            });
        }
        if let Some(&bad) = parts.iter().find(|&&q| q < 2) {
            return Err(Error::InvalidPartition {
                parts,
                reason: format!("part {bad} is smaller than 2"),
            });
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    /// The single-part partition `(m)`.
    pub fn single(m: u32) -> Result<Self> {
        Self::new(vec![m])
    }

    /// `count` copies of the part `size`.
    pub fn uniform(count: usize, size: u32) -> Result<Self> {
        Self::new(vec![size; count])
    }

    /// Total `m`.
    pub fn m(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Parts in non-increasing order.
    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Number of parts `y`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn min_part(&self) -> u32 {
        *self.parts.last().expect("partition has at least one part")
    }

    /// Part multiplicities indexed by part size (`counts[q]` = copies of `q`).
    pub fn multiplicities(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.parts[0] as usize + 1];
        for &q in &self.parts {
            counts[q as usize] += 1;
        }
        counts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses comma-joined parts, e.g. `"3,2,2"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad part `{tok}` in partition `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts).map_err(|e| Error::Parse(format!("partition `{s}`: {e}")))
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<u32>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

/// Parameter block of a family `Φ(β₁, …, β_{r−1})` of `(m, r)` BTUs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFamilySpec")]
pub struct PartitionFamilySpec {
    m: u32,
    r: usize,
    betas: Vec<Partition>,
}

#[derive(Deserialize)]
struct RawFamilySpec {
    m: Option<u32>,
    r: Option<usize>,
    betas: Vec<Partition>,
}

impl TryFrom<RawFamilySpec> for PartitionFamilySpec {
    type Error = Error;

    fn try_from(raw: RawFamilySpec) -> Result<Self> {
        let spec = PartitionFamilySpec::new(raw.betas)?;
        if raw.m.is_some_and(|m| m != spec.m) || raw.r.is_some_and(|r| r != spec.r) {
            return Err(Error::Parse(format!(
                "family header (m={:?}, r={:?}) disagrees with its partitions",
                raw.m, raw.r
            )));
        }
        Ok(spec)
    }
}

impl PartitionFamilySpec {
    pub fn new(betas: Vec<Partition>) -> Result<Self> {
        let first = betas
            .first()
            .ok_or_else(|| Error::Domain("a family needs at least one partition".into()))?;
        let m = first.m();
        if let Some(bad) = betas.iter().find(|b| b.m() != m) {
            return Err(Error::Domain(format!(
                "partition ({bad}) sums to {} but the family is over m = {m}",
                bad.m()
            )));
        }
        Ok(Self {
            m,
            r: betas.len() + 1,
            betas,
        })
    }

    /// Parses the colon-separated syntax `"2,2:4"`. When `m` is given, every
    /// partition must sum to it; the error names the offending token.
    pub fn parse(text: &str, m: Option<u32>) -> Result<Self> {
        let mut betas = Vec::new();
        for tok in text.split(':') {
            let beta: Partition = tok.parse()?;
            if let Some(m) = m {
                if beta.m() != m {
                    return Err(Error::Parse(format!(
                        "partition `{tok}` sums to {} but m = {m}",
                        beta.m()
                    )));
                }
            }
            betas.push(beta);
        }
        Self::new(betas)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn betas(&self) -> &[Partition] {
        &self.betas
    }

    /// `u`, the smallest part across all partitions of the family.
    pub fn min_component(&self) -> u32 {
        self.betas
            .iter()
            .map(Partition::min_part)
            .min()
            .expect("family is non-empty")
    }
}

impl fmt::Display for PartitionFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.betas.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Every element of `P₂(m)` in reverse-lexicographic order, `(m)` first.
pub fn enumerate_p2(m: u32) -> Result<Vec<Partition>> {
    if m < 2 {
        return Err(Error::Domain(format!("P2({m}) is empty: m must be at least 2")));
    }
    let mut out = Vec::new();
    let mut stack = Vec::new();
    p2_rec(m, m, &mut stack, &mut out);
    Ok(out)
}

fn p2_rec(rest: u32, max_part: u32, stack: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition {
            parts: stack.clone(),
        });
        return;
    }
    for q in (2..=max_part.min(rest)).rev() {
        // a remainder of 1 can never be completed
        if rest - q == 1 {
            continue;
        }
        stack.push(q);
        p2_rec(rest - q, q, stack, out);
        stack.pop();
    }
}

/// `k·α`: every part of `alpha` replicated `k` times, a partition of `k·m`.
pub fn scale(alpha: &Partition, k: u32) -> Result<Partition> {
    if k == 0 {
        return Err(Error::Domain("scale factor must be positive".into()));
    }
    let parts = alpha
        .parts
        .iter()
        .flat_map(|&q| std::iter::repeat_n(q, k as usize))
        .collect();
    Partition::new(parts)
}

/// Optimal partitions `β₁ … β_{r−1}` of `m = b·k^{r−1}`, generated by the
/// single-component-then-rescale loop: at step `i` a fresh partition `(m)` is
/// appended, every earlier partition is scaled by `k`, and `m` grows by `k`.
pub fn optimal_partitions(k: u32, r: usize, b: u32) -> Result<Vec<Partition>> {
    check_optimal_params(k, r, b)?;
    let mut m = b
        .checked_mul(k)
        .ok_or(Error::Overflow("optimal_partitions"))?;
    let mut betas: Vec<Partition> = Vec::with_capacity(r - 1);
    for _ in 1..r {
        betas.push(Partition::single(m)?);
        let last = betas.len() - 1;
        for beta in &mut betas[..last] {
            *beta = scale(beta, k)?;
        }
        if betas.len() < r - 1 {
            m = m.checked_mul(k).ok_or(Error::Overflow("optimal_partitions"))?;
        }
    }
    Ok(betas)
}

/// Closed form of [`optimal_partitions`]: `β_i` is `k^{r−1−i}` copies of `b·k^i`.
pub fn optimal_partitions_closed_form(k: u32, r: usize, b: u32) -> Result<Vec<Partition>> {
    check_optimal_params(k, r, b)?;
    (1..r)
        .map(|i| {
            let copies = checked_pow(k, r - 1 - i)?;
            let size = checked_pow(k, i)?
                .checked_mul(b)
                .ok_or(Error::Overflow("optimal_partitions_closed_form"))?;
            Partition::uniform(copies as usize, size)
        })
        .collect()
}

fn check_optimal_params(k: u32, r: usize, b: u32) -> Result<()> {
    if k < 2 || r < 2 || b < 1 {
        return Err(Error::Domain(format!(
            "optimal partitions need k >= 2, r >= 2, b >= 1 (got k={k}, r={r}, b={b})"
        )));
    }
    Ok(())
}

fn checked_pow(base: u32, exp: usize) -> Result<u32> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or(Error::Overflow("power"))
}

/// Factorises `m = b·k^{r−1}` with `b` minimal, i.e. `k` is the largest
/// integer whose `(r−1)`-th power divides `m`. Returns `(k, b)`.
pub fn factorize_m(m: u32, r: usize) -> Result<(u32, u32)> {
    if m < 2 || r < 2 {
        return Err(Error::Domain(format!(
            "factorize_m needs m >= 2 and r >= 2 (got m={m}, r={r})"
        )));
    }
    let exp = u32::try_from(r - 1).map_err(|_| Error::Overflow("factorize_m"))?;
    let mut best = 1u32;
    let mut k = 2u32;
    while let Some(power) = k.checked_pow(exp).filter(|&p| p <= m) {
        if m.is_multiple_of(power) {
            best = k;
        }
        k += 1;
    }
    Ok((best, m / best.pow(exp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    /// Sorted multisets of every composition of `m`, filtered to parts >= 2.
    fn brute_p2(m: u32) -> BTreeSet<Vec<u32>> {
        let mut set = BTreeSet::new();
        for mask in 0u32..(1 << (m - 1)) {
            let mut parts = Vec::new();
            let mut run = 1;
            for bit in 0..m - 1 {
                if mask & (1 << bit) != 0 {
                    parts.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            parts.push(run);
            if parts.iter().all(|&q| q >= 2) {
                parts.sort_unstable_by(|a, b| b.cmp(a));
                set.insert(parts);
            }
        }
        set
    }

    #[test]
    fn small_p2_sets() {
        assert_eq!(enumerate_p2(2).unwrap(), vec![p(&[2])]);
        assert_eq!(enumerate_p2(4).unwrap(), vec![p(&[4]), p(&[2, 2])]);
        assert_eq!(
            enumerate_p2(6).unwrap(),
            vec![p(&[6]), p(&[4, 2]), p(&[3, 3]), p(&[2, 2, 2])]
        );
        assert_eq!(enumerate_p2(3).unwrap(), vec![p(&[3])]);
    }

    #[test]
    fn p2_rejects_tiny_m() {
        assert!(matches!(enumerate_p2(1), Err(Error::Domain(_))));
        assert!(matches!(enumerate_p2(0), Err(Error::Domain(_))));
    }

    #[test]
    fn p2_matches_composition_oracle() {
        for m in 2..=20 {
            let got = enumerate_p2(m).unwrap();
            let oracle = brute_p2(m);
            assert_eq!(got.len(), oracle.len(), "m = {m}");
            let mut seen = BTreeSet::new();
            for beta in &got {
                assert_eq!(beta.m(), m);
                assert!(beta.parts().iter().all(|&q| q >= 2));
                assert!(beta.parts().windows(2).all(|w| w[0] >= w[1]));
                assert!(oracle.contains(beta.parts()));
                assert!(seen.insert(beta.clone()), "duplicate {beta}");
            }
            // reverse-lexicographic order
            assert!(got.windows(2).all(|w| w[0].parts() > w[1].parts()));
        }
    }

    #[test]
    fn partition_rejects_small_parts() {
        assert!(Partition::new(vec![1, 3]).is_err());
        assert!(Partition::new(vec![]).is_err());
        assert_eq!(p(&[2, 3]).parts(), &[3, 2]);
    }

    #[test]
    fn scale_replicates_parts() {
        let s = scale(&p(&[2, 3]), 2).unwrap();
        assert_eq!(s.parts(), &[3, 3, 2, 2]);
        assert_eq!(s.m(), 10);
        assert_eq!(scale(&p(&[7]), 1).unwrap(), p(&[7]));
        assert_eq!(scale(&p(&[2, 2]), 3).unwrap(), p(&[2; 6]));
        assert_eq!(scale(&p(&[2, 2]), 3).unwrap().m(), 12);
        assert!(scale(&p(&[2]), 0).is_err());
    }

    #[test]
    fn scale_composes() {
        for m in 2..=10 {
            for alpha in enumerate_p2(m).unwrap() {
                for a in 1..=3 {
                    for b in 1..=3 {
                        let lhs = scale(&scale(&alpha, a).unwrap(), b).unwrap();
                        assert_eq!(lhs, scale(&alpha, a * b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn optimal_partition_tables() {
        assert_eq!(optimal_partitions(2, 3, 1).unwrap(), vec![p(&[2, 2]), p(&[4])]);
        assert_eq!(
            optimal_partitions(2, 4, 1).unwrap(),
            vec![p(&[2, 2, 2, 2]), p(&[4, 4]), p(&[8])]
        );
        let t = optimal_partitions(3, 3, 2).unwrap();
        assert_eq!(t, vec![p(&[6, 6, 6]), p(&[18])]);
        assert!(t.iter().all(|b| b.m() == 18));
        assert_eq!(optimal_partitions(5, 2, 1).unwrap(), vec![p(&[5])]);
    }

    #[test]
    fn optimal_loop_matches_closed_form() {
        for k in 2..=4u32 {
            for r in 2..=5usize {
                for b in 1..=3u32 {
                    let looped = optimal_partitions(k, r, b).unwrap();
                    assert_eq!(looped, optimal_partitions_closed_form(k, r, b).unwrap());
                    let m = b * k.pow(r as u32 - 1);
                    for (idx, beta) in looped.iter().enumerate() {
                        let i = idx as u32 + 1;
                        assert_eq!(beta.m(), m);
                        assert_eq!(beta.len(), k.pow(r as u32 - 1 - i) as usize);
                        assert!(beta.parts().iter().all(|&q| q == b * k.pow(i)));
                    }
                }
            }
        }
    }

    #[test]
    fn optimal_rejects_bad_params() {
        assert!(optimal_partitions(1, 3, 1).is_err());
        assert!(optimal_partitions(2, 1, 1).is_err());
        assert!(optimal_partitions(2, 3, 0).is_err());
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize_m(8, 4).unwrap(), (2, 1));
        assert_eq!(factorize_m(9, 3).unwrap(), (3, 1));
        assert_eq!(factorize_m(12, 3).unwrap(), (2, 3));
        assert_eq!(factorize_m(7, 2).unwrap(), (7, 1));
        assert_eq!(factorize_m(6, 3).unwrap(), (1, 6));
    }

    #[test]
    fn factorize_minimises_b() {
        for m in 2..=200u32 {
            for r in 2..=5usize {
                let (k, b) = factorize_m(m, r).unwrap();
                let e = r as u32 - 1;
                assert_eq!(b * k.pow(e), m);
                // no smaller b admits an integer k
                for smaller in 1..b {
                    if m % smaller == 0 {
                        let target = m / smaller;
                        let root_exists = (1..=target).take_while(|c| c.pow(e) <= target).any(|c| c.pow(e) == target);
                        assert!(!root_exists, "m={m} r={r}: b={smaller} also works");
                    }
                }
            }
        }
    }

    #[test]
    fn min_component_examples() {
        let spec = |s: &str| PartitionFamilySpec::parse(s, None).unwrap();
        assert_eq!(spec("2,2:4").min_component(), 2);
        assert_eq!(spec("3,3,3:9").min_component(), 3);
        assert_eq!(spec("6,6,6:18").min_component(), 6);
    }

    #[test]
    fn family_spec_parse() {
        let s = PartitionFamilySpec::parse("2,2:4", Some(4)).unwrap();
        assert_eq!(s.r(), 3);
        assert_eq!(s.m(), 4);
        assert_eq!(s.betas(), &[p(&[2, 2]), p(&[4])]);
        assert_eq!(s.to_string(), "2,2:4");

        let err = PartitionFamilySpec::parse("1,3:4", Some(4)).unwrap_err();
        assert!(err.to_string().contains("1,3"), "{err}");
        let err = PartitionFamilySpec::parse("2,2:5", Some(4)).unwrap_err();
        assert!(err.to_string().contains('5'), "{err}");
        assert!(PartitionFamilySpec::parse("2,x", None).is_err());
        assert!(PartitionFamilySpec::parse("2,2:5", None).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let s = PartitionFamilySpec::parse("3,3:6", None).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"m":6,"r":3,"betas":[[3,3],[6]]}"#);
        let back: PartitionFamilySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Partition>("[1,2]").is_err());
        assert!(serde_json::from_str::<PartitionFamilySpec>(r#"{"m":7,"r":2,"betas":[[6]]}"#).is_err());
    }
}

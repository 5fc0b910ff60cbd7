//! The BTU object, its matrix and Tanner-graph views, and the cycle analysis
//! built on them.

mod export;
mod matrix;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microparts::{MicroPartition, UnorderedLabeledPartition};
use crate::partitions::{Partition, PartitionFamilySpec};
use crate::permutations::{partition_between, psi, successor_cycles, CompatibleSet, Permutation};

pub use export::{parse_alist, to_alist, to_dot};
pub use matrix::BinaryMatrix;

/// Largest `m` for which [`cycle_report`] searches for interaction cycles.
pub const INTERACTION_SEARCH_MAX_M: usize = 12;

/// An `(m, r)` BTU: a tree-ordered set of `r` pairwise-compatible
/// permutations. Entry `(d, x)` of the matrix is 1 when some permutation puts
/// label `x` at depth `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BtuJson", into = "BtuJson")]
pub struct Btu {
    perms: CompatibleSet,
}

#[derive(Serialize, Deserialize)]
struct BtuJson {
    m: usize,
    r: usize,
    perms: Vec<Vec<u32>>,
}

impl TryFrom<BtuJson> for Btu {
    type Error = Error;

    fn try_from(raw: BtuJson) -> Result<Self> {
        let perms = raw
            .perms
            .into_iter()
            .map(Permutation::new)
            .collect::<Result<Vec<_>>>()?;
        let set = CompatibleSet::new(perms)?;
        if set.m() != raw.m {
            return Err(Error::SizeMismatch {
                expected: raw.m,
                found: set.m(),
            });
        }
        if set.r() != raw.r {
            return Err(Error::SizeMismatch {
                expected: raw.r,
                found: set.r(),
            });
        }
        Ok(Btu { perms: set })
    }
}

impl From<Btu> for BtuJson {
    fn from(b: Btu) -> Self {
        BtuJson {
            m: b.m(),
            r: b.r(),
            perms: b.perms.perms().iter().map(|p| p.labels().to_vec()).collect(),
        }
    }
}

impl Btu {
    pub fn new(perms: CompatibleSet) -> Self {
        Self { perms }
    }

    /// The canonical `(m, 2)` BTU `Ψ(β)`.
    pub fn psi(beta: &Partition) -> Self {
        Self::new(psi(beta))
    }

    /// A uniformly shuffled backtracking draw of `r` compatible permutations
    /// with `p₁ = I_m`, returned in tree order.
    pub fn random<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Result<Self> {
        if m < 2 || r < 1 || r > m {
            return Err(Error::Domain(format!("no random ({m},{r}) BTU: need 1 ≤ r ≤ m, m ≥ 2")));
        }
        let mut perms = vec![Permutation::identity(m)];
        while perms.len() < r {
            let q = random_compatible(&perms, m, rng).ok_or_else(|| {
                Error::Domain(format!("no permutation extends {} compatible ones", perms.len()))
            })?;
            perms.push(q);
        }
        perms.sort_by_key(|p| p.label_at(0));
        Ok(Self::new(CompatibleSet::new(perms)?))
    }

    pub fn m(&self) -> usize {
        self.perms.m()
    }

    pub fn r(&self) -> usize {
        self.perms.r()
    }

    pub fn perms(&self) -> &CompatibleSet {
        &self.perms
    }

    /// Labels of all permutations, concatenated. Used as the tie-break key in
    /// searches.
    pub fn concatenated_labels(&self) -> Vec<u32> {
        self.perms
            .perms()
            .iter()
            .flat_map(|p| p.labels().iter().copied())
            .collect()
    }

    /// Rows are depths `0..m`, columns are labels `1..=m` (column `x − 1`).
    pub fn matrix(&self) -> BinaryMatrix {
        let m = self.m();
        let mut h = BinaryMatrix::zeros(m, m);
        for p in self.perms.perms() {
            for d in 0..m {
                h.set(d, p.label_at(d) as usize - 1, true);
            }
        }
        h
    }

    /// Shortest cycle of the Tanner graph; `None` when `r < 2`.
    pub fn girth(&self) -> Option<u32> {
        if self.r() < 2 {
            return None;
        }
        self.matrix().girth()
    }

    /// `2q` for every part `q` of every partition between consecutive
    /// permutations, sorted.
    pub fn known_cycles(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .perms
            .perms()
            .windows(2)
            .flat_map(|w| {
                partition_between(&w[0], &w[1])
                    .expect("members of a compatible set are compatible")
                    .parts()
                    .iter()
                    .map(|q| 2 * q)
                    .collect::<Vec<_>>()
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// The partition between `p_u` and `p_v` for every `1 ≤ u < v ≤ r`, keyed
    /// by 1-based indices.
    pub fn all_pair_partitions(&self) -> BTreeMap<(usize, usize), Partition> {
        let ps = self.perms.perms();
        let mut out = BTreeMap::new();
        for u in 0..ps.len() {
            for v in u + 1..ps.len() {
                let beta = partition_between(&ps[u], &ps[v]).expect("compatible");
                out.insert((u + 1, v + 1), beta);
            }
        }
        out
    }

    /// The `(β₁, …, β_{r−1})` family this BTU belongs to.
    pub fn family(&self) -> Result<PartitionFamilySpec> {
        let betas = self
            .perms
            .perms()
            .windows(2)
            .map(|w| partition_between(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        PartitionFamilySpec::new(betas)
    }
}

fn random_compatible<R: Rng + ?Sized>(ctx: &[Permutation], m: usize, rng: &mut R) -> Option<Permutation> {
    // candidate lists per depth, shuffled once; backtracking keeps the draw exact
    let options: Vec<Vec<u32>> = (0..m)
        .map(|d| {
            let mut xs: Vec<u32> = (1..=m as u32)
                .filter(|&x| ctx.iter().all(|p| p.label_at(d) != x))
                .collect();
            xs.shuffle(rng);
            xs
        })
        .collect();
    let mut used = vec![false; m + 1];
    let mut labels = vec![0u32; m];
    let mut next = vec![0usize; m];
    let mut d = 0usize;
    loop {
        if d == m {
            return Some(Permutation::from_labels_unchecked(labels));
        }
        let mut placed = false;
        while next[d] < options[d].len() {
            let x = options[d][next[d]];
            next[d] += 1;
            if !used[x as usize] {
                used[x as usize] = true;
                labels[d] = x;
                placed = true;
                break;
            }
        }
        if placed {
            d += 1;
            if d < m {
                next[d] = 0;
            }
        } else {
            if d == 0 {
                return None;
            }
            d -= 1;
            used[labels[d] as usize] = false;
        }
    }
}

/// Partition between two permutations of a BTU, tagged with their 1-based
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPartition {
    pub u: usize,
    pub v: usize,
    pub partition: Partition,
}

/// Girth together with the cycle taxonomy of a BTU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub girth: Option<u32>,
    pub known_cycles: Vec<u32>,
    pub pair_partitions: Vec<PairPartition>,
    /// [`micropartition_cycle_bound`] with `t = 1` for the micro-partition
    /// induced between each pair of consecutive partitions, where one exists.
    pub micro_bounds: Vec<u32>,
    /// Length of the shortest cycle that uses edges of two permutations that
    /// are not adjacent in the tuple. `None` when no such cycle exists or the
    /// search was skipped.
    pub min_interaction_cycle: Option<u32>,
    /// False when `m` exceeds [`INTERACTION_SEARCH_MAX_M`].
    pub interaction_searched: bool,
}

pub fn cycle_report(b: &Btu) -> Result<CycleReport> {
    if b.r() < 2 {
        return Err(Error::Domain("cycle report needs r ≥ 2".into()));
    }
    let pair_partitions = b
        .all_pair_partitions()
        .into_iter()
        .map(|((u, v), partition)| PairPartition { u, v, partition })
        .collect();
    let ps = b.perms.perms();
    let mut micro_bounds = Vec::new();
    for w in ps.windows(3) {
        let source = UnorderedLabeledPartition::new(successor_cycles(&w[0], &w[1]))?;
        let target = UnorderedLabeledPartition::new(successor_cycles(&w[1], &w[2]))?;
        let micro = MicroPartition::between(&source, &target)?;
        micro_bounds.extend(micro_bound(&micro, 1));
    }
    let searched = b.m() <= INTERACTION_SEARCH_MAX_M;
    Ok(CycleReport {
        girth: b.girth(),
        known_cycles: b.known_cycles(),
        pair_partitions,
        micro_bounds,
        min_interaction_cycle: if searched { interaction_cycle(b) } else { None },
        interaction_searched: searched,
    })
}

/// Shortest simple cycle whose edges are not all drawn from one pair of
/// consecutive permutations, by iterative deepening over even lengths.
fn interaction_cycle(b: &Btu) -> Option<u32> {
    let m = b.m();
    let r = b.r();
    if r < 3 {
        return None;
    }
    // vertices: depths 0..m, labels m..2m; edge tag = permutation index
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); 2 * m];
    for (i, p) in b.perms.perms().iter().enumerate() {
        for d in 0..m {
            let x = m + p.label_at(d) as usize - 1;
            adj[d].push((x, i));
            adj[x].push((d, i));
        }
    }
    let n = 2 * m;
    let mut len = 4;
    while len <= n {
        for s in 0..n {
            let mut on_path = vec![false; n];
            on_path[s] = true;
            if cycle_dfs(&adj, s, s, len, 1, 0u64, &mut on_path) {
                return Some(len as u32);
            }
        }
        len += 2;
    }
    None
}

fn is_interaction(mask: u64) -> bool {
    // a mask confined to {i, i+1} has its bits within two consecutive positions
    let lo = mask.trailing_zeros();
    (mask >> lo) > 0b11
}

fn cycle_dfs(
    adj: &[Vec<(usize, usize)>],
    start: usize,
    at: usize,
    len: usize,
    depth: usize,
    mask: u64,
    on_path: &mut [bool],
) -> bool {
    for &(w, tag) in &adj[at] {
        let mask = mask | (1 << tag);
        if w == start && depth == len {
            if is_interaction(mask) {
                return true;
            }
            continue;
        }
        // the start vertex is the smallest on the cycle
        if w <= start || on_path[w] || depth >= len {
            continue;
        }
        on_path[w] = true;
        let hit = cycle_dfs(adj, start, w, len, depth + 1, mask, on_path);
        on_path[w] = false;
        if hit {
            return true;
        }
    }
    false
}

/// `2u`, where `u` is the smallest part in the family.
pub fn girth_upper_bound(spec: &PartitionFamilySpec) -> u32 {
    2 * spec.min_component()
}

/// `min 2·(q_{u,j} / x_{j,z} + t_u − 1)` over cells with `x_{j,z} ≥ 2`, with
/// integer division. `None` when no cell holds two or more points.
pub fn micropartition_cycle_bound(
    beta_u: &Partition,
    beta_v: &Partition,
    micro: &MicroPartition,
    t_u: u32,
) -> Result<Option<u32>> {
    if micro.row_margins() != beta_u.parts() || micro.col_margins() != beta_v.parts() {
        return Err(Error::Domain(format!(
            "micro-partition margins {:?}/{:?} do not match {beta_u} and {beta_v}",
            micro.row_margins(),
            micro.col_margins()
        )));
    }
    if t_u < 1 || t_u as usize > beta_u.len() {
        return Err(Error::Domain(format!(
            "t_u = {t_u} outside 1..={}",
            beta_u.len()
        )));
    }
    Ok(micro_bound(micro, t_u))
}

fn micro_bound(micro: &MicroPartition, t_u: u32) -> Option<u32> {
    let mut best: Option<u32> = None;
    for (j, row) in micro.cells().iter().enumerate() {
        let q = micro.row_margins()[j];
        for &x in row {
            if x >= 2 {
                let v = 2 * (q / x + t_u - 1);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
    }
    best
}

/// `h(w₁, w₂, k) = min(|w₁ − w₂|, k − |w₁ − w₂|)`.
pub fn circular_distance(w1: u32, w2: u32, k: u32) -> Result<u32> {
    if k == 0 || !(1..=k).contains(&w1) || !(1..=k).contains(&w2) {
        return Err(Error::Domain(format!("circular distance needs 1 ≤ w ≤ k, got ({w1},{w2},{k})")));
    }
    let d = w1.abs_diff(w2);
    Ok(d.min(k - d))
}

/// Girth after flipping the zero at `(row, col)` (0-based) of a `(k, 2)` BTU
/// whose two permutations form a single `k`-cycle.
pub fn puncture(b: &Btu, (row, col): (usize, usize)) -> Result<u32> {
    if b.r() != 2 {
        return Err(Error::Domain(format!("puncturing needs r = 2, got r = {}", b.r())));
    }
    let k = b.m();
    let ps = b.perms.perms();
    if partition_between(&ps[0], &ps[1])?.len() != 1 {
        return Err(Error::Domain("puncturing needs a single-cycle (k,2) BTU".into()));
    }
    if row >= k || col >= k {
        return Err(Error::Domain(format!("position ({row},{col}) outside {k}x{k}")));
    }
    let mut h = b.matrix();
    if h.get(row, col) {
        return Err(Error::Domain(format!("entry ({row},{col}) is already 1")));
    }
    h.set(row, col, true);
    Ok(h.girth().expect("a 2k-cycle is present"))
}

/// A matrix cut into `k × k` blocks: diagonal sub-blocks and off-diagonal
/// cross-blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossBlockView {
    pub k: usize,
    pub sub_blocks: Vec<BinaryMatrix>,
    /// `CB(i, j)` keyed by 1-based `(i, j)`, `i ≠ j`; it shares its rows with
    /// sub-block `i` and its columns with sub-block `j`.
    pub cross_blocks: BTreeMap<(usize, usize), BinaryMatrix>,
}

impl CrossBlockView {
    pub fn count_ones(&self) -> usize {
        self.sub_blocks.iter().map(BinaryMatrix::count_ones).sum::<usize>()
            + self.cross_blocks.values().map(BinaryMatrix::count_ones).sum::<usize>()
    }
}

pub fn crossblock_decompose(b: &Btu, k: usize) -> Result<CrossBlockView> {
    let m = b.m();
    if k == 0 || !m.is_multiple_of(k) {
        return Err(Error::Domain(format!("block size {k} does not divide m = {m}")));
    }
    let h = b.matrix();
    let n = m / k;
    let mut sub_blocks = Vec::with_capacity(n);
    let mut cross_blocks = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let block = h.submatrix(i * k, j * k, k, k)?;
            if i == j {
                sub_blocks.push(block);
            } else {
                cross_blocks.insert((i + 1, j + 1), block);
            }
        }
    }
    Ok(CrossBlockView {
        k,
        sub_blocks,
        cross_blocks,
    })
}

/// Result of placing extra ones into the cross-blocks of `Ψ((k, k))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeOneScan {
    pub k: usize,
    pub placements: u64,
    pub max_girth: u32,
    /// Placements whose girth reaches `2k`.
    pub reaching_2k: u64,
    /// First such placement as 0-based matrix positions, if any.
    pub example: Option<Vec<(usize, usize)>>,
}

/// Every way of adding three ones to the zero entries of `CB(1,2)` and
/// `CB(2,1)` in the block-diagonal `Ψ((k, k))` matrix, with the resulting
/// girths summarised.
pub fn three_one_scan(k: usize) -> Result<ThreeOneScan> {
    if k < 2 {
        return Err(Error::Domain("three-one scan needs k ≥ 2".into()));
    }
    let base = Btu::psi(&Partition::uniform(2, k as u32)?).matrix();
    let slots: Vec<(usize, usize)> = (0..2 * k)
        .flat_map(|r| (0..2 * k).map(move |c| (r, c)))
        .filter(|&(r, c)| (r < k) != (c < k))
        .collect();
    let mut scan = ThreeOneScan {
        k,
        placements: 0,
        max_girth: 0,
        reaching_2k: 0,
        example: None,
    };
    let n = slots.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let mut h = base.clone();
                for &i in &[a, b, c] {
                    h.set(slots[i].0, slots[i].1, true);
                }
                let g = h.girth().expect("sub-blocks carry cycles");
                scan.placements += 1;
                scan.max_girth = scan.max_girth.max(g);
                if g >= 2 * k as u32 {
                    scan.reaching_2k += 1;
                    if scan.example.is_none() {
                        scan.example = Some(vec![slots[a], slots[b], slots[c]]);
                    }
                }
            }
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::enumerate_p2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn part(x: &[u32]) -> Partition {
        Partition::new(x.to_vec()).unwrap()
    }

    fn shifts(m: usize, r: usize) -> Btu {
        Btu::new(CompatibleSet::new((0..r).map(|s| Permutation::cyclic_shift(m, s)).collect()).unwrap())
    }

    #[test]
    fn matrix_is_r_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let b = Btu::random(7, 3, &mut rng).unwrap();
            let h = b.matrix();
            assert_eq!(h.row_weights(), vec![3; 7]);
            assert_eq!(h.col_weights(), vec![3; 7]);
            assert_eq!(b.perms().perms()[0], Permutation::identity(7));
        }
        assert!(Btu::random(3, 4, &mut rng).is_err());
    }

    #[test]
    fn psi_girth_and_known_cycles() {
        assert_eq!(Btu::psi(&part(&[4])).girth(), Some(8));
        assert_eq!(Btu::psi(&part(&[2, 2])).girth(), Some(4));
        assert_eq!(Btu::psi(&part(&[4, 3])).known_cycles(), vec![6, 8]);
        assert_eq!(Btu::psi(&part(&[5])).known_cycles(), vec![10]);
        assert_eq!(Btu::new(CompatibleSet::identity(4)).girth(), None);
    }

    #[test]
    fn r2_girth_is_min_known_cycle() {
        for m in 2..=9 {
            for beta in enumerate_p2(m).unwrap() {
                let b = Btu::psi(&beta);
                assert_eq!(b.girth(), b.known_cycles().into_iter().min());
            }
        }
    }

    #[test]
    fn pair_partitions() {
        let b = shifts(5, 3);
        let pp = b.all_pair_partitions();
        assert_eq!(pp.len(), 3);
        assert_eq!(pp[&(1, 3)], part(&[5]));
        let b2 = Btu::psi(&part(&[3, 2]));
        assert_eq!(b2.all_pair_partitions().into_values().collect::<Vec<_>>(), vec![part(&[3, 2])]);
    }

    #[test]
    fn json_shape() {
        let b = Btu::psi(&part(&[2]));
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"m":2,"r":2,"perms":[[1,2],[2,1]]}"#);
        let back: Btu = serde_json::from_str(r#"{"m":2,"r":2,"perms":[[1,2],[2,1]]}"#).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Btu>(r#"{"m":3,"r":2,"perms":[[1,2],[2,1]]}"#).is_err());
        assert!(serde_json::from_str::<Btu>(r#"{"m":2,"r":2,"perms":[[1,2],[1,2]]}"#).is_err());
    }

    #[test]
    fn bounds() {
        let spec = |s: &str| PartitionFamilySpec::parse(s, None).unwrap();
        assert_eq!(girth_upper_bound(&spec("2,2:4")), 4);
        assert_eq!(girth_upper_bound(&spec("3,3,3:9")), 6);
        assert_eq!(girth_upper_bound(&spec("7")), 14);

        let micro = MicroPartition::new(vec![4], vec![2, 2], vec![vec![2, 2]]).unwrap();
        assert_eq!(micropartition_cycle_bound(&part(&[4]), &part(&[2, 2]), &micro, 1).unwrap(), Some(4));
        assert!(micropartition_cycle_bound(&part(&[4]), &part(&[2, 2]), &micro, 2).is_err());
        let flat = MicroPartition::new(vec![2, 2], vec![2, 2], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(micropartition_cycle_bound(&part(&[2, 2]), &part(&[2, 2]), &flat, 1).unwrap(), None);
    }

    #[test]
    fn circular_distances() {
        assert_eq!(circular_distance(1, 1, 5).unwrap(), 0);
        assert_eq!(circular_distance(1, 4, 5).unwrap(), 2);
        assert_eq!(circular_distance(2, 5, 6).unwrap(), 3);
        assert!(circular_distance(0, 1, 5).is_err());
    }

    #[test]
    fn puncture_examples() {
        let b4 = Btu::psi(&part(&[4]));
        let h = b4.matrix();
        for r in 0..4 {
            for c in 0..4 {
                if !h.get(r, c) {
                    assert_eq!(puncture(&b4, (r, c)).unwrap(), 4);
                } else {
                    assert!(puncture(&b4, (r, c)).is_err());
                }
            }
        }
        // depth 0 holds labels 1 and 2; label 5 sits three steps around the cycle
        let b6 = Btu::psi(&part(&[6]));
        assert_eq!(puncture(&b6, (0, 4)).unwrap(), 6);
        assert!(puncture(&Btu::psi(&part(&[2, 2])), (0, 2)).is_err());
    }

    #[test]
    fn crossblocks_of_block_diagonal() {
        let b = Btu::psi(&part(&[3, 3]));
        let v = crossblock_decompose(&b, 3).unwrap();
        assert_eq!(v.sub_blocks.len(), 2);
        assert_eq!(v.cross_blocks.len(), 2);
        assert!(v.cross_blocks.values().all(|cb| cb.count_ones() == 0));
        for sb in &v.sub_blocks {
            assert_eq!(sb.row_weights(), vec![2; 3]);
        }
        assert_eq!(v.count_ones(), 12);
        assert!(crossblock_decompose(&b, 4).is_err());

        let b = Btu::psi(&Partition::uniform(3, 3).unwrap());
        let v = crossblock_decompose(&b, 3).unwrap();
        assert_eq!(v.sub_blocks.len(), 3);
        assert_eq!(v.cross_blocks.len(), 6);
        assert!(v.cross_blocks.values().all(|cb| cb.count_ones() == 0));
    }

    #[test]
    fn report_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let b = Btu::random(6, 3, &mut rng).unwrap();
            let rep = cycle_report(&b).unwrap();
            let g = rep.girth.unwrap();
            assert!(g <= *rep.known_cycles.iter().min().unwrap());
            if let Some(w) = rep.min_interaction_cycle {
                assert!(g <= w);
            }
            assert_eq!(g, rep.known_cycles[0].min(rep.min_interaction_cycle.unwrap_or(u32::MAX)));
            assert_eq!(rep.pair_partitions.len(), 3);
        }
        let r2 = cycle_report(&Btu::psi(&part(&[3, 3]))).unwrap();
        assert_eq!(r2.min_interaction_cycle, None);
        assert!(r2.micro_bounds.is_empty());
    }

    #[test]
    fn interaction_mask() {
        assert!(!is_interaction(0b011));
        assert!(!is_interaction(0b110));
        assert!(!is_interaction(0b100));
        assert!(is_interaction(0b101));
        assert!(is_interaction(0b111));
    }
}

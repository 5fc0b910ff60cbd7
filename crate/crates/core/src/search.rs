//! Girth searches over BTU families.
//!
//! Every driver produces candidates in a fixed depth-first order. The space is
//! split into branches that are explored independently (optionally on a
//! thread pool) and merged back in branch order, so a run capped at `N`
//! candidates always returns the best of the first `N` candidates of the full
//! stream, whatever the worker count.
//!
//! Among candidates of equal girth the one with the lexicographically
//! smallest concatenated permutation labels wins.

use std::collections::HashSet;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::btu::{girth_upper_bound, Btu};
use crate::error::{Error, Result};
use crate::microparts::{enumerate_label_mappings, enumerate_micropartitions, for_each_cycle_order, UnorderedLabeledPartition};
use crate::partitions::{enumerate_p2, factorize_m, optimal_partitions, Partition, PartitionFamilySpec};
use crate::permutations::{enumerate_compatible, psi, CompatibleExtensions, CompatibleSet, Permutation};

/// Limits on a search. With no limits set the search is exhaustive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_candidates: Option<u64>,
    /// Wall-clock limit. Runs stopped by it are not reproducible.
    pub max_seconds: Option<f64>,
    pub parallel_width: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_candidates: None,
            max_seconds: None,
            parallel_width: 1,
        }
    }
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn candidates(n: u64) -> Self {
        Self {
            max_candidates: Some(n),
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, w: usize) -> Self {
        self.parallel_width = w.max(1);
        self
    }

    fn deadline(&self) -> Option<Instant> {
        self.max_seconds
            .map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Alpha,
    Alpha1,
    Pipeline,
    Implicit,
    Hierarchy,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Alpha => "alpha",
            SearchMode::Alpha1 => "alpha1",
            SearchMode::Pipeline => "pipeline",
            SearchMode::Implicit => "implicit",
            SearchMode::Hierarchy => "hierarchy",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SearchMode::Alpha),
            "alpha1" => Ok(SearchMode::Alpha1),
            "pipeline" => Ok(SearchMode::Pipeline),
            "implicit" => Ok(SearchMode::Implicit),
            "hierarchy" => Ok(SearchMode::Hierarchy),
            other => Err(Error::Parse(format!("unknown search mode {other:?}"))),
        }
    }
}

/// Best girth seen by one family of an implicit enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub beta_tuple: String,
    pub best_girth: Option<u32>,
    /// Distinct matrices among the candidates evaluated in this family.
    pub classes_seen: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub mode: SearchMode,
    pub m: usize,
    pub r: usize,
    pub spec: Option<PartitionFamilySpec>,
    pub best: Option<Btu>,
    pub girth: Option<u32>,
    /// Candidates evaluated. For the hierarchy search this includes partial
    /// tuples whose girth was computed for ordering and pruning.
    pub explored: u64,
    /// Position of the witness in the candidate stream.
    pub witness_rank: Option<u64>,
    /// Distinct matrices among the evaluated candidates.
    pub distinct: u64,
    /// Evaluated candidates whose matrix had been seen before.
    pub duplicates: u64,
    /// True when a limit stopped the search before the space was exhausted.
    pub truncated: bool,
    pub notes: Vec<String>,
    pub census: Vec<CensusRow>,
}

impl SearchResult {
    fn empty(mode: SearchMode, m: usize, r: usize, spec: Option<PartitionFamilySpec>) -> Self {
        Self {
            mode,
            m,
            r,
            spec,
            best: None,
            girth: None,
            explored: 0,
            witness_rank: None,
            distinct: 0,
            duplicates: 0,
            truncated: false,
            notes: Vec::new(),
            census: Vec::new(),
        }
    }

    fn absorb(&mut self, merged: Merged) {
        self.explored = merged.explored;
        self.distinct = merged.seen.len() as u64;
        self.duplicates = merged.explored - self.distinct;
        self.truncated = merged.truncated;
        if let Some(b) = merged.best {
            self.girth = Some(b.girth);
            self.witness_rank = Some(b.rank);
            self.best = Some(b.btu);
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    girth: u32,
    labels: Vec<u32>,
    btu: Btu,
    rank: u64,
}

fn beats(girth: u32, labels: &[u32], incumbent: Option<&Best>) -> bool {
    match incumbent {
        None => true,
        Some(b) => girth > b.girth || (girth == b.girth && labels < b.labels.as_slice()),
    }
}

/// Per-branch evaluation state.
struct Tally {
    cap: u64,
    deadline: Option<Instant>,
    evaluated: u64,
    best: Option<Best>,
    history: Vec<Best>,
    seen: HashSet<Vec<u64>>,
    new_seen: Vec<(u64, Vec<u64>)>,
    stopped: bool,
}

impl Tally {
    fn new(cap: u64, deadline: Option<Instant>) -> Self {
        Self {
            cap,
            deadline,
            evaluated: 0,
            best: None,
            history: Vec::new(),
            seen: HashSet::new(),
            new_seen: Vec::new(),
            stopped: false,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.evaluated >= self.cap || self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stopped = true;
        }
        self.stopped
    }

    fn offer(&mut self, set: &CompatibleSet) -> ControlFlow<()> {
        if self.out_of_budget() {
            return ControlFlow::Break(());
        }
        let idx = self.evaluated;
        self.evaluated += 1;
        let btu = Btu::new(set.clone());
        let h = btu.matrix();
        let fp = h.fingerprint();
        if !self.seen.contains(&fp) {
            self.seen.insert(fp.clone());
            self.new_seen.push((idx, fp));
        }
        let girth = h.girth().unwrap_or(0);
        let labels = btu.concatenated_labels();
        if beats(girth, &labels, self.best.as_ref()) {
            let b = Best {
                girth,
                labels,
                btu,
                rank: idx,
            };
            self.history.push(b.clone());
            self.best = Some(b);
        }
        ControlFlow::Continue(())
    }
}

struct Merged {
    best: Option<Best>,
    explored: u64,
    seen: HashSet<Vec<u64>>,
    truncated: bool,
}

/// Runs `run` on every branch and merges the outcomes in branch order under
/// the candidate cap.
fn run_branches<B, F>(branches: &[B], budget: &SearchBudget, run: F) -> Result<Merged>
where
    B: Sync,
    F: Fn(&B, &mut Tally) -> Result<()> + Sync,
{
    let width = budget.parallel_width.max(1);
    let deadline = budget.deadline();
    let pool = if width > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(width)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let mut remaining = budget.max_candidates.unwrap_or(u64::MAX);
    let mut merged = Merged {
        best: None,
        explored: 0,
        seen: HashSet::new(),
        truncated: false,
    };
    let total = branches.len();
    let mut done = 0usize;
    for wave in branches.chunks(width) {
        if remaining == 0 {
            break;
        }
        let cap = remaining;
        let go = |b: &B| -> Result<Tally> {
            let mut t = Tally::new(cap, deadline);
            run(b, &mut t)?;
            Ok(t)
        };
        let outcomes: Vec<Result<Tally>> = match &pool {
            Some(p) => p.install(|| wave.par_iter().map(go).collect()),
            None => wave.iter().map(go).collect(),
        };
        for t in outcomes {
            let t = t?;
            done += 1;
            let take = t.evaluated.min(remaining);
            let base = merged.explored;
            if let Some(b) = t.history.iter().rev().find(|b| b.rank < take) {
                if beats(b.girth, &b.labels, merged.best.as_ref()) {
                    let mut b = b.clone();
                    b.rank += base;
                    merged.best = Some(b);
                }
            }
            for (idx, fp) in t.new_seen {
                if idx < take {
                    merged.seen.insert(fp);
                }
            }
            merged.explored += take;
            remaining -= take;
            if t.stopped || t.evaluated > take {
                merged.truncated = true;
            }
            if remaining == 0 {
                if done < total {
                    merged.truncated = true;
                }
                break;
            }
        }
    }
    Ok(merged)
}

fn check_mr(m: usize, r: usize) -> Result<()> {
    if m < 2 || r < 2 {
        return Err(Error::Domain(format!("search needs m ≥ 2 and r ≥ 2, got ({m},{r})")));
    }
    if r > m {
        return Err(Error::Domain(format!(
            "no ({m},{r}) BTU exists: r compatible permutations need r distinct first labels"
        )));
    }
    Ok(())
}

/// Two-label prefixes of `p₂` in tree order; their streams concatenate to the
/// full stream.
fn prefix_branches(m: usize) -> Vec<Vec<u32>> {
    let m = m as u32;
    let mut out = Vec::new();
    for a in 2..=m {
        for b in 1..=m {
            if b != a && b != 2 {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

/// Depth-first extension of `ctx` to `r` permutations, each new permutation
/// optionally constrained by `betas[i]`.
fn extend_dfs(
    ctx: &mut CompatibleSet,
    r: usize,
    betas: Option<&[Partition]>,
    prefix: &[u32],
    tally: &mut Tally,
) -> Result<ControlFlow<()>> {
    if ctx.r() == r {
        return Ok(tally.offer(ctx));
    }
    let constraint = betas.map(|b| &b[ctx.r() - 1]);
    let base = ctx.clone();
    let prefix = if ctx.r() == 1 { prefix } else { &[] };
    for q in CompatibleExtensions::new(&base, constraint, prefix)? {
        ctx.push(q)?;
        let flow = extend_dfs(ctx, r, betas, &[], tally);
        ctx.pop();
        if flow?.is_break() {
            return Ok(ControlFlow::Break(()));
        }
    }
    Ok(ControlFlow::Continue(()))
}

/// Exhaustive search over all tree-ordered compatible tuples with
/// `p₁ = I_m`.
pub fn algorithm_alpha(m: usize, r: usize, budget: &SearchBudget) -> Result<SearchResult> {
    check_mr(m, r)?;
    let branches = prefix_branches(m);
    let merged = run_branches(&branches, budget, |prefix, tally| {
        let mut ctx = CompatibleSet::identity(m);
        extend_dfs(&mut ctx, r, None, prefix, tally).map(|_| ())
    })?;
    let mut res = SearchResult::empty(SearchMode::Alpha, m, r, None);
    res.absorb(merged);
    Ok(res)
}

/// [`algorithm_alpha`] restricted to the tuples whose consecutive partitions
/// are `spec.betas()`.
pub fn algorithm_alpha1(spec: &PartitionFamilySpec, budget: &SearchBudget) -> Result<SearchResult> {
    let (m, r) = (spec.m() as usize, spec.r());
    check_mr(m, r)?;
    let branches = prefix_branches(m);
    let betas = spec.betas();
    let merged = run_branches(&branches, budget, |prefix, tally| {
        let mut ctx = CompatibleSet::identity(m);
        extend_dfs(&mut ctx, r, Some(betas), prefix, tally).map(|_| ())
    })?;
    let mut res = SearchResult::empty(SearchMode::Alpha1, m, r, Some(spec.clone()));
    res.absorb(merged);
    if res.best.is_none() && !res.truncated {
        res.notes.push("family is empty".into());
    }
    Ok(res)
}

struct Pipeline<'a> {
    betas: &'a [Partition],
    r: usize,
}

impl Pipeline<'_> {
    /// Extends `ctx` (holding `s + 1` permutations) through every
    /// micro-partition and canonically ordered label mapping from `source`.
    fn stage(&self, ctx: &CompatibleSet, source: &UnorderedLabeledPartition, tally: &mut Tally) -> Result<ControlFlow<()>> {
        if ctx.r() == self.r {
            return Ok(tally.offer(ctx));
        }
        let s = ctx.r() - 1;
        for micro in enumerate_micropartitions(&self.betas[s - 1], &self.betas[s])? {
            for target in enumerate_label_mappings(&micro, source)? {
                if !target.is_canonically_ordered() {
                    continue;
                }
                if self.orders(ctx, &target, tally)?.is_break() {
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    /// Every cycle order of `target` that yields a tree-ordered successor.
    fn orders(&self, ctx: &CompatibleSet, target: &UnorderedLabeledPartition, tally: &mut Tally) -> Result<ControlFlow<()>> {
        let mut failure = None;
        let first = ctx.last().label_at(0);
        let flow = for_each_cycle_order(target, ctx, true, |_, q| {
            if q.label_at(0) <= first {
                return ControlFlow::Continue(());
            }
            let mut next = ctx.clone();
            let step = next.push(q.clone()).and_then(|_| self.stage(&next, target, tally));
            match step {
                Ok(f) => f,
                Err(e) => {
                    failure = Some(e);
                    ControlFlow::Break(())
                }
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(flow),
        }
    }
}

/// Micro-partition enumeration of `Φ(β₁, …, β_{r−1})`: `p₁ = I_m`,
/// `p₂ = Ψ(β₁)`, and each later permutation assembled from a micro-partition,
/// a label mapping and a cycle order. Stage-two `(micro-partition, label
/// mapping)` pairs form the parallel branches.
pub fn pipeline_search(spec: &PartitionFamilySpec, budget: &SearchBudget) -> Result<SearchResult> {
    let (m, r) = (spec.m() as usize, spec.r());
    check_mr(m, r)?;
    let betas = spec.betas();
    let start = psi(&betas[0]);
    let source = UnorderedLabeledPartition::psi_blocks(&betas[0]);
    let pipe = Pipeline { betas, r };
    let merged = if r == 2 {
        run_branches(&[()], budget, |_, tally| {
            let _ = tally.offer(&start);
            Ok(())
        })?
    } else {
        let mut branches = Vec::new();
        for micro in enumerate_micropartitions(&betas[0], &betas[1])? {
            for target in enumerate_label_mappings(&micro, &source)? {
                if target.is_canonically_ordered() {
                    branches.push(target);
                }
            }
        }
        run_branches(&branches, budget, |target, tally| pipe.orders(&start, target, tally).map(|_| ()))?
    };
    let mut res = SearchResult::empty(SearchMode::Pipeline, m, r, Some(spec.clone()));
    res.absorb(merged);
    if res.best.is_none() && !res.truncated {
        res.notes.push("family is empty".into());
    }
    Ok(res)
}

/// All `(r − 1)`-tuples of `P₂(m)` in enumeration order.
pub fn family_tuples(m: u32, r: usize) -> Result<Vec<Vec<Partition>>> {
    let all = enumerate_p2(m)?;
    let mut out: Vec<Vec<Partition>> = vec![Vec::new()];
    for _ in 1..r {
        out = out
            .into_iter()
            .flat_map(|t| {
                all.iter().map(move |b| {
                    let mut t = t.clone();
                    t.push(b.clone());
                    t
                })
            })
            .collect();
    }
    Ok(out)
}

/// [`pipeline_search`] on every family of `(m, r)`, each under its own copy
/// of `budget`.
pub fn implicit_enumeration(m: usize, r: usize, budget: &SearchBudget) -> Result<SearchResult> {
    check_mr(m, r)?;
    let mut res = SearchResult::empty(SearchMode::Implicit, m, r, None);
    let mut best: Option<Best> = None;
    for betas in family_tuples(m as u32, r)? {
        let spec = PartitionFamilySpec::new(betas)?;
        let fam = pipeline_search(&spec, budget)?;
        res.census.push(CensusRow {
            beta_tuple: spec.to_string(),
            best_girth: fam.girth,
            classes_seen: fam.distinct,
        });
        if let (Some(g), Some(b)) = (fam.girth, fam.best) {
            let labels = b.concatenated_labels();
            if beats(g, &labels, best.as_ref()) {
                best = Some(Best {
                    girth: g,
                    labels,
                    btu: b,
                    rank: res.explored + fam.witness_rank.unwrap_or(0),
                });
                res.spec = Some(spec.clone());
            }
        }
        res.explored += fam.explored;
        res.distinct += fam.distinct;
        res.duplicates += fam.duplicates;
        res.truncated |= fam.truncated;
    }
    res.notes.push("candidate budget applies to each family separately".into());
    if let Some(b) = best {
        res.girth = Some(b.girth);
        res.witness_rank = Some(b.rank);
        res.best = Some(b.btu);
    }
    Ok(res)
}

struct Hierarchy<'a> {
    betas: &'a [Partition],
    r: usize,
    bound: u32,
    cap: u64,
    deadline: Option<Instant>,
    explored: u64,
    best: Option<Best>,
    truncated: bool,
}

impl Hierarchy<'_> {
    fn halted(&mut self) -> bool {
        if self.explored >= self.cap || self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.truncated = true;
        }
        self.truncated || self.best.as_ref().is_some_and(|b| b.girth >= self.bound)
    }

    fn stage(&mut self, ctx: &mut CompatibleSet) -> Result<()> {
        let constraint = &self.betas[ctx.r() - 1];
        let mut scored: Vec<(u32, Permutation)> = Vec::new();
        {
            let base = ctx.clone();
            for q in enumerate_compatible(&base, Some(constraint))? {
                if self.halted() {
                    break;
                }
                self.explored += 1;
                ctx.push(q.clone())?;
                let g = Btu::new(ctx.clone()).girth().unwrap_or(0);
                ctx.pop();
                scored.push((g, q));
            }
        }
        scored.sort_by_key(|s| std::cmp::Reverse(s.0));
        for (g, q) in scored {
            if self.best.as_ref().is_some_and(|b| g <= b.girth) {
                break;
            }
            ctx.push(q)?;
            if ctx.r() == self.r {
                let btu = Btu::new(ctx.clone());
                self.best = Some(Best {
                    girth: g,
                    labels: btu.concatenated_labels(),
                    btu,
                    rank: self.explored,
                });
            } else if !self.halted() {
                self.stage(ctx)?;
            }
            ctx.pop();
            if self.halted() {
                break;
            }
        }
        Ok(())
    }
}

/// Stage-wise construction on the optimal family of `(m, r)`: `(k, b)` from
/// [`factorize_m`], partitions from [`optimal_partitions`], `p₁ = I_m`,
/// `p₂ = Ψ(β₁)`. Each later stage scores every constrained extension by the
/// girth of the partial BTU and descends best-first, abandoning branches that
/// cannot beat the incumbent and stopping once the girth bound is reached.
/// Runs on a single thread.
pub fn hierarchy_search(m: usize, r: usize, budget: &SearchBudget) -> Result<SearchResult> {
    check_mr(m, r)?;
    let (k, b) = factorize_m(m as u32, r)?;
    if k == 1 {
        log::warn!("m = {m} has no factor k ≥ 2 with k^{} | m; falling back to implicit enumeration", r - 1);
        let mut res = implicit_enumeration(m, r, budget)?;
        res.notes.push(format!(
            "hierarchy: no k ≥ 2 with k^{} dividing {m}; fell back to implicit enumeration",
            r - 1
        ));
        return Ok(res);
    }
    let spec = PartitionFamilySpec::new(optimal_partitions(k, r, b)?)?;
    let bound = girth_upper_bound(&spec);
    let mut h = Hierarchy {
        betas: spec.betas(),
        r,
        bound,
        cap: budget.max_candidates.unwrap_or(u64::MAX),
        deadline: budget.deadline(),
        explored: 0,
        best: None,
        truncated: false,
    };
    let mut ctx = psi(&spec.betas()[0]);
    if r == 2 {
        let btu = Btu::new(ctx.clone());
        h.explored = 1;
        h.best = Some(Best {
            girth: btu.girth().unwrap_or(0),
            labels: btu.concatenated_labels(),
            btu,
            rank: 0,
        });
    } else {
        h.stage(&mut ctx)?;
    }
    let mut res = SearchResult::empty(SearchMode::Hierarchy, m, r, Some(spec.clone()));
    res.explored = h.explored;
    res.truncated = h.truncated;
    res.notes.push(format!("k = {k}, b = {b}, girth bound {bound}"));
    res.notes.push(
        "stage policy: best-first descent on partial girth with pruning at the incumbent; single-threaded".into(),
    );
    if let Some(best) = h.best {
        res.girth = Some(best.girth);
        res.witness_rank = Some(best.rank);
        res.best = Some(best.btu);
        res.distinct = 1;
    }
    Ok(res)
}

/// Dispatches to the driver for `mode`. `spec` is required by the
/// family-restricted modes.
pub fn search(
    mode: SearchMode,
    m: usize,
    r: usize,
    spec: Option<&PartitionFamilySpec>,
    budget: &SearchBudget,
) -> Result<SearchResult> {
    let need_spec = || {
        spec.ok_or_else(|| Error::Domain(format!("mode {mode} needs a partition family")))
    };
    if let Some(s) = spec {
        if s.m() as usize != m || s.r() != r {
            return Err(Error::Domain(format!(
                "family {s} describes ({},{}) BTUs, not ({m},{r})",
                s.m(),
                s.r()
            )));
        }
    }
    match mode {
        SearchMode::Alpha => algorithm_alpha(m, r, budget),
        SearchMode::Alpha1 => algorithm_alpha1(need_spec()?, budget),
        SearchMode::Pipeline => pipeline_search(need_spec()?, budget),
        SearchMode::Implicit => implicit_enumeration(m, r, budget),
        SearchMode::Hierarchy => hierarchy_search(m, r, budget),
    }
}

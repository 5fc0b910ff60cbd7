//! `btu verify`: library results against the brute-force oracles.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use btu_core::btu::{micropartition_cycle_bound, puncture};
use btu_core::microparts::{count_label_mappings, enumerate_label_mappings, enumerate_micropartitions};
use btu_core::oracle::{brute_force_count_permutations, brute_force_girth, canonical_form};
use btu_core::partitions::enumerate_p2;
use btu_core::permutations::{count_f, enumerate_compatible, is_compatible};
use btu_core::search::{family_tuples, pipeline_search};
use btu_core::{Btu, CompatibleSet, MicroPartition, Partition, PartitionFamilySpec, Permutation, SearchBudget, UnorderedLabeledPartition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::CliError;
use crate::Suite;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub suite: &'static str,
    pub check: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    fn push(&mut self, suite: &'static str, check: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.rows.push(Row {
            suite,
            check: check.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        });
    }

    fn info(&mut self, suite: &'static str, check: impl Into<String>, detail: impl Into<String>) {
        self.rows.push(Row {
            suite,
            check: check.into(),
            status: Status::Info,
            detail: detail.into(),
        });
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status == Status::Fail).count()
    }

    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:<w$} {:<6} detail", "suite", "check", "status");
        for r in &self.rows {
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "info",
            };
            let pad = w - r.check.chars().count();
            let _ = writeln!(out, "{:<8} {}{} {:<6} {}", r.suite, r.check, " ".repeat(pad), status, r.detail);
        }
        let checks = self.rows.iter().filter(|r| r.status != Status::Info).count();
        let _ = writeln!(out, "{} of {checks} checks passed", checks - self.failures());
        out
    }
}

pub fn run(suite: Suite, seed: u64) -> Result<Report, CliError> {
    let mut report = Report::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Counting {
        counting(&mut report)?;
    }
    if all || suite == Suite::Girth {
        girth(&mut report, seed)?;
    }
    if all || suite == Suite::Bounds {
        bounds(&mut report)?;
    }
    if all || suite == Suite::Iso {
        iso(&mut report)?;
    }
    Ok(report)
}

fn counting(rep: &mut Report) -> Result<(), CliError> {
    for m in 2..=8u32 {
        let beta = Partition::single(m)?;
        let listed = enumerate_compatible(&CompatibleSet::identity(m as usize), Some(&beta))?.count() as u64;
        let scanned = brute_force_count_permutations(&beta)?;
        let fact: u64 = (1..m as u64).product();
        rep.push(
            "counting",
            format!("(m-1)! extensions m={m}"),
            listed == fact && scanned == fact,
            format!("enumerated {listed}, scanned {scanned}, (m-1)! {fact}"),
        );
    }
    for m in 2..=8usize {
        let listed = enumerate_compatible(&CompatibleSet::identity(m), None)?.count() as u64;
        let d = derangements(m as u64);
        rep.push("counting", format!("derangements m={m}"), listed == d, format!("enumerated {listed}, D(m) {d}"));
    }
    for m in 2..=6 {
        for beta in enumerate_p2(m)? {
            let f = count_f(&beta)?;
            let scan = brute_force_count_permutations(&beta)?;
            rep.info("counting", format!("f({beta})"), format!("formula {f}, scan {scan}"));
        }
    }
    let mut micros = 0;
    let mut bad = 0;
    for m in 2..=7 {
        let ps = enumerate_p2(m)?;
        for u in &ps {
            let source = UnorderedLabeledPartition::psi_blocks(u);
            for v in &ps {
                for micro in enumerate_micropartitions(u, v)? {
                    micros += 1;
                    if count_label_mappings(&micro)? != enumerate_label_mappings(&micro, &source)?.count() as u128 {
                        bad += 1;
                    }
                }
            }
        }
    }
    rep.push("counting", "label-mapping product m<=7", bad == 0, format!("{micros} micro-partitions, {bad} mismatches"));
    Ok(())
}

/// Inclusion-exclusion: D(m) = sum over k of (-1)^k m!/k!.
fn derangements(m: u64) -> u64 {
    let mut term: i128 = (1..=m as i128).product();
    let mut sum = 0i128;
    for k in 0..=m as i128 {
        if k > 0 {
            term /= k;
        }
        sum += if k % 2 == 0 { term } else { -term };
    }
    sum as u64
}

fn girth(rep: &mut Report, seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..100 {
        let b = Btu::random(6, 3, &mut rng)?;
        if b.girth() != brute_force_girth(&b)? {
            bad += 1;
        }
    }
    rep.push("girth", "BFS vs walk oracle, 100 random (6,3)", bad == 0, format!("seed {seed}, {bad} mismatches"));
    let mut bad = Vec::new();
    for m in 2..=10 {
        for beta in enumerate_p2(m)? {
            let b = Btu::psi(&beta);
            let want = 2 * beta.min_part();
            if b.girth() != Some(want) || b.known_cycles().into_iter().min() != Some(want) {
                bad.push(beta.to_string());
            }
        }
    }
    rep.push("girth", "girth(psi(beta)) = 2 min part, m<=10", bad.is_empty(), bad.join(" "));
    Ok(())
}

fn bounds(rep: &mut Report) -> Result<(), CliError> {
    let mut worst = Vec::new();
    let mut families = 0;
    for m in 3..=5u32 {
        for betas in family_tuples(m, 3)? {
            families += 1;
            let spec = PartitionFamilySpec::new(betas)?;
            let res = pipeline_search(&spec, &SearchBudget::unlimited())?;
            if res.girth.is_some_and(|g| g > 2 * spec.min_component()) {
                worst.push(spec.to_string());
            }
        }
    }
    rep.push("bounds", "pipeline girth <= 2u, m<=5 r=3", worst.is_empty(), format!("{families} families {}", worst.join(" ")));
    for k in 4..=8usize {
        let b = Btu::psi(&Partition::single(k as u32)?);
        let h = b.matrix();
        let hi = if k % 2 == 0 { k } else { k + 1 } as u32;
        let mut seen = BTreeSet::new();
        for row in 0..k {
            for col in 0..k {
                if !h.get(row, col) {
                    seen.insert(puncture(&b, (row, col))?);
                }
            }
        }
        let ok = seen.iter().all(|l| (4..=hi).contains(l)) && seen.contains(&4);
        rep.push("bounds", format!("puncture k={k}"), ok, format!("l in {seen:?}, bound {hi}"));
    }
    for k in 2..=6u32 {
        let big = Partition::single(k * k)?;
        let many = Partition::uniform(k as usize, k)?;
        let spread = MicroPartition::new(vec![k * k], vec![k; k as usize], vec![vec![k; k as usize]])?;
        let gather = MicroPartition::new(vec![k; k as usize], vec![k * k], vec![vec![k]; k as usize])?;
        let a = micropartition_cycle_bound(&big, &many, &spread, 1)?;
        let b = micropartition_cycle_bound(&many, &big, &gather, k)?;
        rep.push(
            "bounds",
            format!("micro bound k={k}"),
            a == Some(2 * k) && b == Some(2 * k),
            format!("{a:?} {b:?}, expected {}", 2 * k),
        );
    }
    Ok(())
}

fn iso(rep: &mut Report) -> Result<(), CliError> {
    let id = Permutation::identity(4);
    let mut classes = BTreeSet::new();
    for q in enumerate_compatible(&CompatibleSet::identity(4), None)? {
        debug_assert!(is_compatible(&id, &q)?);
        let b = Btu::new(CompatibleSet::new(vec![id.clone(), q])?);
        classes.insert(canonical_form(&b)?);
    }
    rep.push("iso", "(4,2) classes = |P2(4)|", classes.len() == 2, format!("{} classes", classes.len()));
    let a = canonical_form(&Btu::psi(&Partition::new(vec![2, 2])?))?;
    let b = canonical_form(&Btu::psi(&Partition::new(vec![4])?))?;
    rep.push("iso", "psi((4)) not iso psi((2,2))", a != b, "");
    for m in 2..=5u32 {
        let mut per_beta = BTreeSet::new();
        for beta in enumerate_p2(m)? {
            per_beta.insert(canonical_form(&Btu::psi(&beta))?);
        }
        let mut all = BTreeSet::new();
        for q in enumerate_compatible(&CompatibleSet::identity(m as usize), None)? {
            let b = Btu::new(CompatibleSet::new(vec![Permutation::identity(m as usize), q])?);
            all.insert(canonical_form(&b)?);
        }
        rep.push(
            "iso",
            format!("(m,2) classes m={m}"),
            per_beta == all,
            format!("{} classes, {} partitions", all.len(), per_beta.len()),
        );
    }
    Ok(())
}

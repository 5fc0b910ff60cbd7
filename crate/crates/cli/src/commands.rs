use std::fs;
use std::ops::ControlFlow;
use std::path::Path;

use btu_core::btu::{cycle_report, parse_alist};
use btu_core::microparts::{
    count_label_mappings, enumerate_micropartitions, for_each_cycle_order, label_mappings,
};
use btu_core::oracle::brute_force_girth;
use btu_core::partitions::{enumerate_p2, factorize_m, optimal_partitions};
use btu_core::search::{self, SearchBudget, SearchMode, SearchResult};
use btu_core::{
    psi, Btu, Error, MicroPartition, Partition, PartitionFamilySpec, UnorderedLabeledPartition,
};
use clap::Parser;
use serde_json::{json, Value};

use crate::emit::{emit, Payload};
use crate::manifest::RunManifest;
use crate::{verify, Cli, Command, Format, Mode, SearchArgs, Stage};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Guard { .. } => 3,
            Error::Overflow(_) => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command produced: its standard output plus the fields a manifest
/// records.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub exit_code: u8,
    pub summary: Value,
    pub seed: Option<u64>,
    pub budget: Option<SearchBudget>,
}

impl Output {
    fn text(text: String) -> Self {
        Self {
            text,
            ..Self::default()
        }
    }
}

fn partition_arg(flag: &str, text: &str) -> CliResult<Partition> {
    text.parse::<Partition>()
        .map_err(|e| CliError::usage(format!("invalid {flag} {text:?}: {e}")))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

fn read_btu(path: &Path) -> CliResult<Btu> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::usage(format!("{} is not a BTU JSON document: {e}", path.display())))
}

pub fn run(command: Command) -> CliResult<Output> {
    match command {
        Command::Partitions { m } => partitions(m),
        Command::OptimalParams { m, r, k, b } => optimal_params(m, r, k, b),
        Command::Psi { beta, format } => {
            let beta = partition_arg("--beta", &beta)?;
            Ok(Output::text(emit(&Payload::Btu(Btu::psi(&beta)), format)?))
        }
        Command::Enumerate {
            stage,
            from,
            to,
            micro,
        } => enumerate(stage, &from, &to, micro),
        Command::Girth { input, oracle } => girth(&input, oracle),
        Command::Search(args) => run_search(args),
        Command::Export { input, format, out } => {
            let text = emit(&Payload::Btu(read_btu(&input)?), format)?;
            match out {
                Some(path) => {
                    fs::write(&path, &text)
                        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
                    Ok(Output::text(String::new()))
                }
                None => Ok(Output::text(text)),
            }
        }
        Command::Verify { suite, seed } => {
            let report = verify::run(suite, seed)?;
            let failed = report.failures();
            Ok(Output {
                text: report.render(),
                exit_code: if failed > 0 { 4 } else { 0 },
                summary: json!({"checks": report.rows.len(), "failed": failed}),
                seed: Some(seed),
                budget: None,
            })
        }
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn partitions(m: u32) -> CliResult<Output> {
    let all = enumerate_p2(m)?;
    let parts: Vec<&[u32]> = all.iter().map(Partition::parts).collect();
    let value = json!({"m": m, "count": all.len(), "partitions": parts});
    Ok(Output::text(emit(&Payload::Json(value), Format::Json)?))
}

fn optimal_params(m: Option<u32>, r: usize, k: Option<u32>, b: Option<u32>) -> CliResult<Output> {
    let (k, b) = match (m, k, b) {
        (_, Some(k), Some(b)) => (k, b),
        (Some(m), _, _) => factorize_m(m, r)?,
        _ => return Err(CliError::usage("give --m, or both --k and --b")),
    };
    let mut value = json!({"k": k, "b": b, "r": r, "m": b as u64 * (k as u64).pow(r as u32 - 1)});
    if k >= 2 {
        let spec = PartitionFamilySpec::new(optimal_partitions(k, r, b)?)?;
        value["betas"] = json!(spec.betas().iter().map(Partition::parts).collect::<Vec<_>>());
        value["spec"] = json!(spec.to_string());
        value["girth_bound"] = json!(2 * spec.min_component());
    } else {
        value["betas"] = Value::Null;
        value["spec"] = Value::Null;
        value["girth_bound"] = Value::Null;
    }
    Ok(Output::text(emit(&Payload::Json(value), Format::Json)?))
}

fn enumerate(stage: Stage, from: &str, to: &str, only: Option<usize>) -> CliResult<Output> {
    let bu = partition_arg("--from", from)?;
    let bv = partition_arg("--to", to)?;
    let micros = enumerate_micropartitions(&bu, &bv)?;
    if let Some(i) = only {
        if i >= micros.len() {
            return Err(CliError::usage(format!(
                "--micro {i} out of range: {} micro-partitions",
                micros.len()
            )));
        }
    }
    let chosen: Vec<(usize, &MicroPartition)> = micros
        .iter()
        .enumerate()
        .filter(|(i, _)| only.is_none_or(|o| o == *i))
        .collect();
    let source = UnorderedLabeledPartition::psi_blocks(&bu);
    let mut rows = Vec::new();
    for (i, micro) in chosen {
        match stage {
            Stage::Micro => rows.push(json!({
                "index": i,
                "cells": micro.cells(),
                "label_mappings": count_label_mappings(micro)?.to_string(),
            })),
            Stage::Labels => {
                for lm in label_mappings(micro, &source)? {
                    let target = lm.target();
                    rows.push(json!({
                        "micro": i,
                        "target": target.subsets(),
                        "canonical": target.is_canonically_ordered(),
                    }));
                }
            }
            Stage::Orders => {
                let ctx = psi(&bu);
                for lm in label_mappings(micro, &source)? {
                    let target = lm.target();
                    if !target.is_canonically_ordered() {
                        continue;
                    }
                    let _ = for_each_cycle_order(&target, &ctx, true, |order, q| {
                        rows.push(json!({
                            "micro": i,
                            "cycles": order.cycles(),
                            "perm": q.labels(),
                        }));
                        ControlFlow::Continue(())
                    })?;
                }
            }
        }
    }
    let value = json!({"from": bu.to_string(), "to": bv.to_string(), "count": rows.len(), "items": rows});
    Ok(Output::text(emit(&Payload::Json(value), Format::Json)?))
}

fn girth(input: &Path, oracle: bool) -> CliResult<Output> {
    let text = read(input)?;
    let value = match serde_json::from_str::<Btu>(&text) {
        Ok(b) if b.r() >= 2 => {
            let mut v = serde_json::to_value(cycle_report(&b)?).map_err(|e| CliError::invariant(e.to_string()))?;
            if oracle {
                let walked = brute_force_girth(&b)?;
                if walked != b.girth() {
                    return Err(CliError::invariant(format!(
                        "BFS girth {:?} disagrees with the oracle's {walked:?}",
                        b.girth()
                    )));
                }
                v["oracle_girth"] = json!(walked);
            }
            v
        }
        Ok(_) if oracle => return Err(CliError::usage("--oracle needs a BTU with r >= 2")),
        Ok(_) => json!({"girth": Value::Null}),
        Err(json_err) => match parse_alist(&text) {
            Ok(_) if oracle => return Err(CliError::usage("--oracle needs BTU JSON input")),
            Ok(h) => json!({"girth": h.girth()}),
            Err(_) => {
                return Err(CliError::usage(format!(
                    "{} is neither BTU JSON ({json_err}) nor alist",
                    input.display()
                )))
            }
        },
    };
    let summary = json!({"girth": value["girth"]});
    let mut out = Output::text(emit(&Payload::Json(value), Format::Json)?);
    out.summary = summary;
    Ok(out)
}

fn core_mode(m: Mode) -> SearchMode {
    match m {
        Mode::Alpha => SearchMode::Alpha,
        Mode::Alpha1 => SearchMode::Alpha1,
        Mode::Pipeline => SearchMode::Pipeline,
        Mode::Implicit => SearchMode::Implicit,
        Mode::Hierarchy => SearchMode::Hierarchy,
    }
}

fn run_search(args: SearchArgs) -> CliResult<Output> {
    let spec = args
        .betas
        .as_deref()
        .map(|t| {
            PartitionFamilySpec::parse(t, Some(args.m as u32))
                .map_err(|e| CliError::usage(format!("invalid --betas {t:?}: {e}")))
        })
        .transpose()?;
    if args.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let budget = SearchBudget {
        max_candidates: args.max_candidates,
        max_seconds: args.max_seconds,
        parallel_width: args.workers,
    };
    let mode = core_mode(args.mode);
    let result = search::search(mode, args.m, args.r, spec.as_ref(), &budget)?;
    check_result(&result)?;
    if let Some(path) = &args.census {
        if mode != SearchMode::Implicit {
            return Err(CliError::usage("--census is only produced by --mode implicit"));
        }
        let csv = emit(&Payload::Census(&result.census), Format::Csv)?;
        fs::write(path, csv).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    }
    let text = emit(&Payload::Search(&result), args.format)?;
    Ok(Output {
        text,
        exit_code: 0,
        summary: json!({
            "girth": result.girth,
            "explored": result.explored,
            "truncated": result.truncated,
        }),
        seed: None,
        budget: Some(budget),
    })
}

/// Cheap consistency checks on a finished search; a miss is an internal error.
fn check_result(res: &SearchResult) -> CliResult<()> {
    if let Some(b) = &res.best {
        if b.girth() != res.girth {
            return Err(CliError::invariant(format!(
                "witness girth {:?} differs from reported {:?}",
                b.girth(),
                res.girth
            )));
        }
        if let (Some(spec), Some(g)) = (&res.spec, res.girth) {
            if g > 2 * spec.min_component() {
                return Err(CliError::invariant(format!("girth {g} exceeds the bound for {spec}")));
            }
        }
    }
    Ok(())
}

fn replay(path: &Path) -> CliResult<Output> {
    let recorded: RunManifest = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::usage(format!("{} is not a run manifest: {e}", path.display())))?;
    if recorded.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest was written by version {}, replaying with {}",
            recorded.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let argv = std::iter::once("btu".to_string()).chain(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(format!("recorded command line: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::usage("a manifest cannot replay another replay"));
    }
    let out = run(cli.command)?;
    if out.text != recorded.output || out.exit_code != recorded.exit_code {
        return Err(CliError::invariant(format!(
            "replay of {} produced different output",
            path.display()
        )));
    }
    Ok(out)
}

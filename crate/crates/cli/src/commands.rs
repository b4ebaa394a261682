use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use codesign::accel::mixed::{sample_plans, PlanIndices, SegmentCosts};
use codesign::monotonicity::{
    average_srcc_from_columns, avg_srcc_cdf, cdf_of, srcc, srcc_matrix, srcc_matrix_from_columns, SrccMatrix,
};
use codesign::pareto::{build_constraint_grid, OptimalSet, OptimalSetOptions, ProxyProfile};
use codesign::search::{
    fully_coupled_exhaustive, run_comparison, semi_decoupled_stage_two, stage_one, CoDesignProblem, ComparisonReport,
    DesignConstraints,
};
use codesign::{Accelerator, CostOracle, Error, Execution, Metric, PerfTable};
use serde::{Deserialize, Serialize};

use crate::config::{ConstraintSpec, ExperimentConfig};
use crate::experiment::{read_table_with_ids, Setup};
use crate::output::{csv_bytes, write_atomic, write_json, Manifest};
use crate::CliError;

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_resource(h: f64) -> String {
    if h >= f64::MAX {
        "unbounded".into()
    } else {
        h.to_string()
    }
}

fn options(config: &ExperimentConfig) -> OptimalSetOptions {
    OptimalSetOptions { epsilon: config.epsilon }
}

pub fn table(config: &ExperimentConfig, out: &Path, mode: Execution) -> Result<(), CliError> {
    let setup = Setup::build(config, mode)?;
    let table = setup.table(config, out)?;
    println!(
        "{} rows in {}",
        table.num_archs() * table.num_accels(),
        out.join(crate::experiment::TABLE_FILE).display()
    );
    Ok(())
}

fn matrix_csv(m: &SrccMatrix) -> Result<Vec<u8>> {
    let mut header = vec!["accel_id"];
    header.extend(m.accel_ids.iter().map(String::as_str));
    csv_bytes(
        &header,
        (0..m.len())
            .map(|i| std::iter::once(m.accel_ids[i].clone()).chain((0..m.len()).map(move |j| fmt_opt(m.get(i, j))))),
    )
}

fn cdf_csv(cdf: &[(f64, f64)]) -> Result<Vec<u8>> {
    csv_bytes(&["avg_srcc", "cumulative_fraction"], cdf.iter().map(|(v, f)| [v.to_string(), f.to_string()]))
}

/// Writes both metrics' matrices and CDFs; returns the written file names.
fn write_srcc(out: &Path, prefix: &str, table: &PerfTable, ids: &[String], mode: Execution) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for metric in Metric::ALL {
        let m = srcc_matrix(table, ids.to_vec(), metric, mode)?;
        let name = format!("{prefix}srcc_{}.csv", metric.name());
        write_atomic(&out.join(&name), &matrix_csv(&m)?)?;
        files.push(name);
        if m.len() >= 2 {
            let name = format!("{prefix}cdf_{}.csv", metric.name());
            write_atomic(&out.join(&name), &cdf_csv(&avg_srcc_cdf(&m)?)?)?;
            files.push(name);
        }
        if !m.holes.is_empty() {
            log::warn!("{}: constant columns left empty: {:?}", metric.name(), m.holes);
        }
    }
    Ok(files)
}

/// SRCC outputs from either a config (computing or reusing its table) or a
/// standalone table CSV.
pub fn srcc_cmd(
    config: Option<&ExperimentConfig>,
    table_path: Option<&Path>,
    out: &Path,
    mode: Execution,
) -> Result<(), CliError> {
    let (ids, table) = match (table_path, config) {
        (Some(path), _) => read_table_with_ids(path, None)?,
        (None, Some(config)) => {
            let setup = Setup::build(config, mode)?;
            (setup.accel_ids(), setup.table(config, out)?)
        }
        (None, None) => return Err(CliError::Config(vec!["srcc needs --config or --table".into()])),
    };
    let files = write_srcc(out, "", &table, &ids, mode)?;
    if let (Some(config), None) = (config, table_path) {
        let names: Vec<&str> = files.iter().map(String::as_str).collect();
        Manifest::record(out, config, &names)?;
    }
    println!("wrote {}", files.join(", "));
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct Stage1Record {
    pub proxy_index: usize,
    pub proxy: Accelerator,
    pub k: usize,
    pub evaluations: u64,
    pub set: OptimalSet,
}

pub fn stage1(config: &ExperimentConfig, out: &Path, mode: Execution) -> Result<(), CliError> {
    let setup = Setup::build(config, mode)?;
    let proxy = setup.proxy(config.proxy)?;
    let table = setup.table(config, out)?;
    let proxies: Vec<usize> = if config.all_proxies { (0..setup.accels.len()).collect() } else { vec![proxy] };
    let mut files = Vec::new();
    for p in proxies {
        let counter = codesign::CountingOracle::new(&table);
        let (_, set) =
            stage_one(&setup.catalog, &counter, p, config.k, options(config), mode).map_err(CliError::runtime)?;
        let name = format!("stage1/optimal_set_{p:03}.json");
        let record = Stage1Record {
            proxy_index: p,
            proxy: setup.accels[p],
            k: config.k,
            evaluations: counter.evaluations(),
            set,
        };
        write_json(&out.join(&name), &record)?;
        log::info!("proxy {p}: {} architectures", record.set.len());
        files.push(name);
    }
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    Manifest::record(out, config, &names)?;
    println!("wrote {} optimal set(s) under {}", files.len(), out.join("stage1").display());
    Ok(())
}

fn resolve(spec: &ConstraintSpec, grid: &[codesign::pareto::ConstraintPoint]) -> Result<DesignConstraints, CliError> {
    let (l, e, h) = match *spec {
        ConstraintSpec::Explicit { latency_budget, energy_budget, resource_budget } => {
            (latency_budget, energy_budget, resource_budget)
        }
        ConstraintSpec::GridPoint { grid_point, resource_budget } => {
            let p = grid.get(grid_point).ok_or_else(|| {
                CliError::Config(vec![format!(
                    "grid point {grid_point} does not exist: the proxy grid has {} points",
                    grid.len()
                )])
            })?;
            (p.latency_budget, p.energy_budget, resource_budget)
        }
    };
    DesignConstraints::new(l, e, h.unwrap_or(f64::MAX)).map_err(|e| CliError::Config(vec![e.to_string()]))
}

#[derive(Serialize, Deserialize)]
pub struct ConstraintReport {
    pub constraint: usize,
    pub report: ComparisonReport,
}

pub fn codesign(config: &ExperimentConfig, out: &Path, mode: Execution) -> Result<(), CliError> {
    if config.constraints.is_empty() {
        return Err(CliError::Config(vec!["codesign needs at least one constraint triple".into()]));
    }
    let setup = Setup::build(config, mode)?;
    let proxy = setup.proxy(config.proxy)?;
    let table = setup.table(config, out)?;
    let ids = setup.accel_ids();
    let grid = build_constraint_grid(&ProxyProfile::measure(&table, proxy, mode)?, config.k)?;
    let triples: Vec<DesignConstraints> =
        config.constraints.iter().map(|c| resolve(c, &grid)).collect::<Result<_, _>>()?;
    let problem = CoDesignProblem::new(&setup.catalog, &setup.accels, &table)?.with_mode(mode);

    let reports: Vec<ConstraintReport> = triples
        .iter()
        .enumerate()
        .map(|(i, c)| ConstraintReport {
            constraint: i,
            report: run_comparison(&problem, c, proxy, config.k, options(config)),
        })
        .collect();
    write_json(&out.join("comparison.json"), &reports)?;
    let ids = &ids;
    let rows = reports.iter().flat_map(|r| {
        r.report.rows.iter().map(move |row| {
            let o = row.outcome.as_ref();
            [
                r.constraint.to_string(),
                row.strategy.name().to_string(),
                o.and_then(|o| o.best_arch).map(|a| a.to_string()).unwrap_or_default(),
                o.and_then(|o| o.best_accel).map(|h| ids[h].clone()).unwrap_or_default(),
                fmt_opt(o.and_then(|o| o.accuracy)),
                o.map(|o| o.evaluations.to_string()).unwrap_or_default(),
                row.expected_evaluations.map(|v| v.to_string()).unwrap_or_default(),
                fmt_opt(row.gap_vs_oracle),
                format!("{:.3}", row.wall_time_ms),
                row.error.clone().unwrap_or_default(),
            ]
        })
    });
    let header = [
        "constraint",
        "strategy",
        "best_arch",
        "best_accel",
        "accuracy",
        "evaluations",
        "expected_evaluations",
        "gap_vs_oracle",
        "wall_time_ms",
        "error",
    ];
    write_atomic(&out.join("comparison.csv"), &csv_bytes(&header, rows)?)?;
    let mut files = vec!["comparison.json".to_string(), "comparison.csv".to_string()];

    if config.all_proxies {
        write_atomic(&out.join("proxy_sweep.csv"), &proxy_sweep(config, &setup, &table, &triples, mode)?)?;
        files.push("proxy_sweep.csv".to_string());
    }
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    Manifest::record(out, config, &names)?;
    for r in &reports {
        for row in &r.report.rows {
            if let Some(o) = &row.outcome {
                println!(
                    "constraint {} {:>15}: accuracy {} evaluations {}",
                    r.constraint,
                    row.strategy.name(),
                    o.accuracy.map_or_else(|| "-".into(), |a| format!("{a:.3}")),
                    o.evaluations
                );
            }
        }
    }
    Ok(())
}

/// Every accelerator as the proxy, against the coupled oracle per triple.
/// The SRCC columns compare the proxy with the oracle's accelerator.
fn proxy_sweep(
    config: &ExperimentConfig,
    setup: &Setup,
    table: &PerfTable,
    triples: &[DesignConstraints],
    mode: Execution,
) -> Result<Vec<u8>, CliError> {
    let ids = setup.accel_ids();
    let problem = CoDesignProblem::new(&setup.catalog, &setup.accels, table)?.with_mode(mode);
    let oracles =
        triples.iter().map(|c| fully_coupled_exhaustive(&problem, c)).collect::<codesign::Result<Vec<_>>>()?;
    let sets: Vec<Option<OptimalSet>> = (0..setup.accels.len())
        .map(|p| match stage_one(&setup.catalog, table, p, config.k, options(config), mode) {
            Ok((_, set)) => Ok(Some(set)),
            Err(Error::EmptyOptimalSet) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<codesign::Result<_>>()?;
    let m = setup.catalog.len() as u64;
    let mut rows = Vec::new();
    for (i, (c, oracle)) in triples.iter().zip(&oracles).enumerate() {
        let feasible = problem.feasible_accels(c);
        for (p, set) in sets.iter().enumerate() {
            let target = oracle.best_accel;
            let corr = |metric: Metric| {
                target.and_then(|t| srcc(&table.metric_column(p, metric), &table.metric_column(t, metric)).ok())
            };
            let (outcome, size) = match set {
                Some(set) => (Some(semi_decoupled_stage_two(&problem, table, set, c)), set.len()),
                None => (None, 0),
            };
            let others = feasible.len() as u64 - u64::from(feasible.contains(&p));
            let accuracy = outcome.as_ref().and_then(|o| o.accuracy);
            rows.push([
                i.to_string(),
                p.to_string(),
                ids[p].clone(),
                target.map(|t| ids[t].clone()).unwrap_or_default(),
                fmt_opt(corr(Metric::Latency)),
                fmt_opt(corr(Metric::Energy)),
                size.to_string(),
                outcome.as_ref().and_then(|o| o.best_arch).map(|a| a.to_string()).unwrap_or_default(),
                outcome.as_ref().and_then(|o| o.best_accel).map(|h| ids[h].clone()).unwrap_or_default(),
                fmt_opt(accuracy),
                fmt_opt(oracle.accuracy),
                fmt_opt(oracle.accuracy.zip(accuracy).map(|(o, a)| o - a)),
                (m + others * size as u64).to_string(),
            ]);
        }
    }
    let header = [
        "constraint",
        "proxy",
        "proxy_id",
        "target_id",
        "latency_srcc",
        "energy_srcc",
        "set_size",
        "best_arch",
        "best_accel",
        "accuracy",
        "oracle_accuracy",
        "gap",
        "evaluations",
    ];
    Ok(csv_bytes(&header, rows)?)
}

#[derive(Serialize, Deserialize)]
struct PlanRecord {
    plan_id: usize,
    segments: Vec<String>,
}

pub fn mixed(config: &ExperimentConfig, out: &Path, mode: Execution) -> Result<(), CliError> {
    let Some(settings) = config.mixed.filter(|m| m.enabled) else {
        return Err(CliError::Config(vec!["mixed needs \"mixed\": {\"enabled\": true, ...} in the config".into()]));
    };
    let setup = Setup::build(config, mode)?;
    let ids = setup.accel_ids();
    let plans = sample_plans(settings.plan_seed, settings.plan_count, setup.accels.len())?;

    let costs =
        codesign::exec::map_slice(mode, &setup.space.architectures, |a| SegmentCosts::new(&a.layers(), &setup.accels));
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (i, c) in costs.into_iter().enumerate() {
        match c {
            Ok(c) => kept.push((i, c)),
            Err(e) => skipped.push((i, e)),
        }
    }
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|(i, e)| format!("{i} ({e})")).collect();
        log::warn!("skipping {} architecture(s) that cannot be split into parts: {}", skipped.len(), list.join(", "));
    }
    if kept.len() < 3 {
        return Err(CliError::runtime(anyhow::anyhow!("mixed SRCC needs at least 3 partitionable architectures")));
    }
    let estimate = |plan: &PlanIndices| kept.iter().map(|(_, c)| c.plan(plan)).collect::<Vec<_>>();
    let columns = codesign::exec::map_slice(mode, &plans, estimate);

    let plan_records: Vec<PlanRecord> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| PlanRecord { plan_id: i, segments: p.iter().map(|&h| ids[h].clone()).collect() })
        .collect();
    write_json(&out.join("mixed/plans.json"), &plan_records)?;
    let mut files = vec!["mixed/plans.json".to_string()];
    let plan_ids: Vec<String> = (0..plans.len()).map(|i| format!("plan{i}")).collect();
    for metric in Metric::ALL {
        let metric_columns: Vec<Vec<f64>> = columns.iter().map(|c| c.iter().map(|p| metric.of(p)).collect()).collect();
        let averages = average_srcc_from_columns(&metric_columns, mode)?;
        let name = format!("mixed/cdf_{}.csv", metric.name());
        write_atomic(&out.join(&name), &cdf_csv(&cdf_of(&averages))?)?;
        files.push(name);
        if plans.len() <= settings.matrix_limit {
            let m = srcc_matrix_from_columns(&metric_columns, plan_ids.clone(), metric, mode)?;
            let name = format!("mixed/srcc_{}.csv", metric.name());
            write_atomic(&out.join(&name), &matrix_csv(&m)?)?;
            files.push(name);
        } else {
            log::info!("{} plans exceed matrix_limit {}; writing the CDF only", plans.len(), settings.matrix_limit);
        }
    }
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    Manifest::record(out, config, &names)?;
    println!("{} plans over {} architectures; wrote {}", plans.len(), kept.len(), files.join(", "));
    Ok(())
}

/// Plain-text summary of a bundle, written to `report.txt` and stdout.
pub fn report(out: &Path) -> Result<(), CliError> {
    let manifest =
        Manifest::read(out)?.ok_or_else(|| CliError::Config(vec![format!("no manifest in {}", out.display())]))?;
    let mut text = String::new();
    let _ = writeln!(text, "bundle {}", out.display());
    let _ = writeln!(text, "engine {} config {}", manifest.engine_version, manifest.config_hash);
    let c = &manifest.config;
    let _ = writeln!(text, "space {:?} seed {} count {}; K {}", c.space.kind, c.space.seed, c.space.count, c.k);
    for (file, hash) in &manifest.files {
        let current = crate::output::sha256_file(&out.join(file)).ok();
        let status = if current.as_deref() == Some(hash.as_str()) { "ok" } else { "CHANGED" };
        let _ = writeln!(text, "  {file} {status}");
    }
    for metric in Metric::ALL {
        let path = out.join(format!("cdf_{}.csv", metric.name()));
        if let Ok(bytes) = std::fs::read(&path) {
            let mut r = csv::Reader::from_reader(bytes.as_slice());
            let values: Vec<f64> = r.records().filter_map(|rec| rec.ok()?.get(0)?.parse().ok()).collect();
            if let (Some(lo), Some(hi)) = (values.first(), values.last()) {
                let _ = writeln!(text, "{} average SRCC range [{lo:.4}, {hi:.4}]", metric.name());
            }
        }
    }
    let comparison = out.join("comparison.json");
    if comparison.exists() {
        let reports: Vec<ConstraintReport> =
            serde_json::from_slice(&std::fs::read(&comparison).context("cannot read comparison.json")?)
                .context("corrupt comparison.json")?;
        for r in &reports {
            let _ = writeln!(
                text,
                "constraint {}: L {} E {} H {} proxy {} feasible hw {}",
                r.constraint,
                r.report.constraints.latency_budget,
                r.report.constraints.energy_budget,
                fmt_resource(r.report.constraints.resource_budget),
                r.report.proxy,
                r.report.num_feasible_accels
            );
            for row in &r.report.rows {
                let acc = row.outcome.as_ref().and_then(|o| o.accuracy);
                let evals = row.outcome.as_ref().map(|o| o.evaluations);
                let _ = writeln!(
                    text,
                    "  {:<15} accuracy {:<8} gap {:<8} evaluations {}",
                    row.strategy.name(),
                    acc.map_or("-".into(), |a| format!("{a:.3}")),
                    row.gap_vs_oracle.map_or("-".into(), |g| format!("{g:.3}")),
                    evals.map_or("-".into(), |e| e.to_string())
                );
            }
        }
    }
    let sweep = out.join("proxy_sweep.csv");
    if let Ok(bytes) = std::fs::read(&sweep) {
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let gaps: Vec<Option<f64>> =
            r.records().filter_map(|rec| rec.ok().map(|rec| rec.get(11).and_then(|g| g.parse().ok()))).collect();
        let zero = gaps.iter().filter(|g| **g == Some(0.0)).count();
        let worst = gaps.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        let _ = writeln!(text, "proxy sweep: {zero}/{} runs with zero gap, worst gap {worst:.4}", gaps.len());
    }
    write_atomic(&out.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

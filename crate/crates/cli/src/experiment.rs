//! Builds spaces, hardware and the performance table from a config.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use codesign::accel::{build_hardware_space, SupportProfile};
use codesign::arch::generate_space;
use codesign::Accelerator;
use codesign::{AnalyticalOracle, ArchCatalog, ArchSpaceSample, CostOracle, Execution, PerfEstimate, PerfTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, ProxySelector};
use crate::output::{csv_bytes, sha256_file, write_atomic, write_json, Manifest, TABLE_FILES};
use crate::CliError;

pub const TABLE_FILE: &str = "perf_table.csv";
pub const TABLE_HEADER: [&str; 4] = ["arch_id", "accel_id", "latency_cycles", "energy_nj"];

pub struct Setup {
    pub space: ArchSpaceSample,
    pub accels: Vec<Accelerator>,
    pub catalog: ArchCatalog,
    pub mode: Execution,
}

#[derive(Serialize)]
struct ArchRecord<'a> {
    arch_id: usize,
    accuracy: f64,
    flops: u64,
    architecture: &'a codesign::Architecture,
}

#[derive(Serialize)]
struct AccelRecord<'a> {
    accel_id: String,
    resource: f64,
    accelerator: &'a Accelerator,
}

impl Setup {
    pub fn build(config: &ExperimentConfig, mode: Execution) -> Result<Self, CliError> {
        let space =
            generate_space(config.space.kind, config.space.seed, config.space.count).map_err(CliError::runtime)?;
        let profile = SupportProfile::of_space(&space).ok_or_else(|| {
            CliError::Config(vec!["architecture space has no spatial MAC layer to size hardware against".into()])
        })?;
        let hw = build_hardware_space(
            config.hardware.seed,
            config.hardware.count_per_dataflow,
            &config.hardware.dataflows,
            &config.validity_rule(),
            &profile,
        )
        .map_err(|e| CliError::Config(vec![format!("hardware: {e}")]))?;
        if hw.is_empty() {
            return Err(CliError::Config(vec!["validity rule leaves no accelerator".into()]));
        }
        log::info!("{} architectures, {} accelerators", space.len(), hw.len());
        let catalog = ArchCatalog::from_space(&space, mode);
        Ok(Setup { space, accels: hw.accelerators, catalog, mode })
    }

    pub fn accel_ids(&self) -> Vec<String> {
        self.accels.iter().map(ToString::to_string).collect()
    }

    pub fn proxy(&self, selector: ProxySelector) -> Result<usize, CliError> {
        match selector {
            ProxySelector::Index(i) if i < self.accels.len() => Ok(i),
            ProxySelector::Index(i) => Err(CliError::Config(vec![format!(
                "proxy index {i} is outside the {}-accelerator sample",
                self.accels.len()
            )])),
            ProxySelector::Random { seed } => Ok(ChaCha8Rng::seed_from_u64(seed).gen_range(0..self.accels.len())),
        }
    }

    /// Loads the persisted table when it was produced from the same space and
    /// hardware settings, else computes and persists it.
    pub fn table(&self, config: &ExperimentConfig, out: &Path) -> Result<PerfTable> {
        let path = out.join(TABLE_FILE);
        if let Some(manifest) = Manifest::read(out)? {
            let recorded = manifest.files.get(TABLE_FILE);
            if manifest.table_fingerprint == config.table_fingerprint()
                && path.exists()
                && recorded.is_some_and(|h| sha256_file(&path).is_ok_and(|cur| &cur == h))
            {
                log::info!("reusing {}", path.display());
                return read_table(&path, &self.accel_ids());
            }
        }
        let oracle = AnalyticalOracle::new(&self.space, &self.accels);
        log::info!("computing {} x {} performance table", oracle.num_archs(), oracle.num_accels());
        let start = Instant::now();
        let table = PerfTable::compute(&oracle, self.mode);
        log::info!("table computed in {:.2}s", start.elapsed().as_secs_f64());
        write_atomic(&path, &table_csv(&table, &self.accel_ids())?)?;
        self.write_catalogs(out)?;
        Manifest::record(out, config, &TABLE_FILES)?;
        Ok(table)
    }

    fn write_catalogs(&self, out: &Path) -> Result<()> {
        let archs: Vec<ArchRecord> = self
            .space
            .architectures
            .iter()
            .enumerate()
            .map(|(i, a)| ArchRecord {
                arch_id: i,
                accuracy: self.catalog.accuracy(i),
                flops: a.flops(),
                architecture: a,
            })
            .collect();
        write_json(&out.join("architectures.json"), &archs)?;
        let accels: Vec<AccelRecord> = self
            .accels
            .iter()
            .map(|a| AccelRecord {
                accel_id: a.to_string(),
                resource: codesign::accel::hardware_resource(a),
                accelerator: a,
            })
            .collect();
        write_json(&out.join("accelerators.json"), &accels)
    }
}

pub fn table_csv(table: &PerfTable, accel_ids: &[String]) -> Result<Vec<u8>> {
    csv_bytes(
        &TABLE_HEADER,
        table.entries().map(|(a, h, p)| {
            [a.to_string(), accel_ids[h].clone(), p.latency_cycles.to_string(), p.energy_nj.to_string()]
        }),
    )
}

/// Parses a table CSV. With `accel_order` the accelerator columns follow it;
/// otherwise they follow first appearance in the file.
pub fn read_table(path: &Path, accel_order: &[String]) -> Result<PerfTable> {
    let (ids, table) = read_table_with_ids(path, Some(accel_order))?;
    debug_assert_eq!(ids.len(), accel_order.len());
    Ok(table)
}

pub fn read_table_with_ids(path: &Path, accel_order: Option<&[String]>) -> Result<(Vec<String>, PerfTable)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TABLE_HEADER {
        bail!("{} does not have the columns {}", path.display(), TABLE_HEADER.join(","));
    }
    let mut ids: Vec<String> = accel_order.map(<[String]>::to_vec).unwrap_or_default();
    let mut index: HashMap<String, usize> = ids.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut entries = Vec::new();
    let mut num_archs = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = || -> Option<(usize, String, u64, f64)> {
            Some((record[0].parse().ok()?, record[1].to_string(), record[2].parse().ok()?, record[3].parse().ok()?))
        };
        let Some((arch, accel, latency_cycles, energy_nj)) = parse() else {
            bail!("{}: malformed row {}", path.display(), line + 2);
        };
        let h = match index.get(&accel) {
            Some(&h) => h,
            None if accel_order.is_none() => {
                ids.push(accel.clone());
                index.insert(accel, ids.len() - 1);
                ids.len() - 1
            }
            None => bail!("{}: unknown accelerator {accel} on row {}", path.display(), line + 2),
        };
        num_archs = num_archs.max(arch + 1);
        entries.push((arch, h, PerfEstimate { latency_cycles, energy_nj }));
    }
    let table = PerfTable::from_entries(num_archs, ids.len(), entries)?;
    Ok((ids, table))
}

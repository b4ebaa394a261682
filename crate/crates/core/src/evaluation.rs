//! Cost oracles over an (architecture x accelerator) grid.
//!
//! Search strategies only see architectures and accelerators by index, through
//! a [`CostOracle`]. [`AnalyticalOracle`] runs the roofline model on demand,
//! [`PerfTable`] serves a precomputed grid, and [`CountingOracle`] wraps either
//! one to count evaluations.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::accel::{estimate_layers, Accelerator, PerfEstimate};
use crate::arch::{ArchSpaceSample, LayerDescriptor};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Latency/energy of architecture `arch` on accelerator `accel`.
pub trait CostOracle: Sync {
    fn estimate(&self, arch: usize, accel: usize) -> PerfEstimate;
    fn num_archs(&self) -> usize;
    fn num_accels(&self) -> usize;
}

impl<T: CostOracle + ?Sized> CostOracle for &T {
    fn estimate(&self, arch: usize, accel: usize) -> PerfEstimate {
        (**self).estimate(arch, accel)
    }
    fn num_archs(&self) -> usize {
        (**self).num_archs()
    }
    fn num_accels(&self) -> usize {
        (**self).num_accels()
    }
}

/// Roofline model over pre-lowered architectures.
#[derive(Debug, Clone)]
pub struct AnalyticalOracle {
    layers: Vec<Vec<LayerDescriptor>>,
    accels: Vec<Accelerator>,
}

impl AnalyticalOracle {
    pub fn new(space: &ArchSpaceSample, accels: &[Accelerator]) -> Self {
        AnalyticalOracle { layers: space.architectures.iter().map(|a| a.layers()).collect(), accels: accels.to_vec() }
    }

    pub fn from_layers(layers: Vec<Vec<LayerDescriptor>>, accels: Vec<Accelerator>) -> Self {
        AnalyticalOracle { layers, accels }
    }

    pub fn layers(&self, arch: usize) -> &[LayerDescriptor] {
        &self.layers[arch]
    }

    pub fn accelerators(&self) -> &[Accelerator] {
        &self.accels
    }
}

impl CostOracle for AnalyticalOracle {
    fn estimate(&self, arch: usize, accel: usize) -> PerfEstimate {
        estimate_layers(&self.layers[arch], &self.accels[accel])
    }
    fn num_archs(&self) -> usize {
        self.layers.len()
    }
    fn num_accels(&self) -> usize {
        self.accels.len()
    }
}

/// Counts every call that reaches the wrapped oracle. Safe under any
/// parallel schedule.
pub struct CountingOracle<O> {
    inner: O,
    count: AtomicU64,
}

impl<O: CostOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        CountingOracle { inner, count: AtomicU64::new(0) }
    }

    pub fn evaluations(&self) -> u64 {
        self.count.load(AtomicOrdering::Relaxed)
    }
}

impl<O: CostOracle> CostOracle for CountingOracle<O> {
    fn estimate(&self, arch: usize, accel: usize) -> PerfEstimate {
        self.count.fetch_add(1, AtomicOrdering::Relaxed);
        self.inner.estimate(arch, accel)
    }
    fn num_archs(&self) -> usize {
        self.inner.num_archs()
    }
    fn num_accels(&self) -> usize {
        self.inner.num_accels()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Latency,
    Energy,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Latency, Metric::Energy];

    pub fn of(self, p: &PerfEstimate) -> f64 {
        match self {
            Metric::Latency => p.latency_cycles as f64,
            Metric::Energy => p.energy_nj,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::Energy => "energy",
        }
    }
}

/// Dense arch-major performance table.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfTable {
    num_archs: usize,
    num_accels: usize,
    cells: Vec<PerfEstimate>,
}

impl PerfTable {
    /// Evaluates every cell of `oracle`, one architecture row per task.
    pub fn compute<O: CostOracle>(oracle: &O, mode: Execution) -> Self {
        let (m, n) = (oracle.num_archs(), oracle.num_accels());
        let rows = exec::map_range(mode, m, |a| (0..n).map(|h| oracle.estimate(a, h)).collect::<Vec<_>>());
        PerfTable { num_archs: m, num_accels: n, cells: rows.into_iter().flatten().collect() }
    }

    /// Builds a table from arch-major rows.
    pub fn from_rows(rows: Vec<Vec<PerfEstimate>>) -> Result<Self> {
        let num_archs = rows.len();
        let num_accels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_accels) {
            return Err(Error::InvalidInput("ragged performance table".into()));
        }
        Ok(PerfTable { num_archs, num_accels, cells: rows.into_iter().flatten().collect() })
    }

    /// Builds a table from `accel`-major columns.
    pub fn from_columns(columns: &[Vec<PerfEstimate>]) -> Result<Self> {
        let num_archs = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != num_archs) {
            return Err(Error::InvalidInput("ragged performance table".into()));
        }
        let rows = (0..num_archs).map(|a| columns.iter().map(|c| c[a]).collect()).collect();
        Self::from_rows(rows)
    }

    /// Assembles a table from sparse entries, reporting every missing cell.
    pub fn from_entries<I>(num_archs: usize, num_accels: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, PerfEstimate)>,
    {
        let mut cells: Vec<Option<PerfEstimate>> = vec![None; num_archs * num_accels];
        for (a, h, p) in entries {
            if a >= num_archs || h >= num_accels {
                return Err(Error::InvalidInput(format!("cell ({a}, {h}) outside a {num_archs}x{num_accels} table")));
            }
            cells[a * num_accels + h] = Some(p);
        }
        let missing: Vec<(usize, usize)> = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| (i / num_accels, i % num_accels))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingCells(missing));
        }
        Ok(PerfTable { num_archs, num_accels, cells: cells.into_iter().flatten().collect() })
    }

    pub fn get(&self, arch: usize, accel: usize) -> PerfEstimate {
        self.cells[arch * self.num_accels + accel]
    }

    pub fn row(&self, arch: usize) -> &[PerfEstimate] {
        &self.cells[arch * self.num_accels..(arch + 1) * self.num_accels]
    }

    pub fn column(&self, accel: usize) -> Vec<PerfEstimate> {
        (0..self.num_archs).map(|a| self.get(a, accel)).collect()
    }

    pub fn metric_column(&self, accel: usize, metric: Metric) -> Vec<f64> {
        (0..self.num_archs).map(|a| metric.of(&self.get(a, accel))).collect()
    }

    /// `(arch, accel, estimate)` in arch-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, PerfEstimate)> + '_ {
        self.cells.iter().enumerate().map(|(i, p)| (i / self.num_accels, i % self.num_accels, *p))
    }
}

impl CostOracle for PerfTable {
    fn estimate(&self, arch: usize, accel: usize) -> PerfEstimate {
        self.get(arch, accel)
    }
    fn num_archs(&self) -> usize {
        self.num_archs
    }
    fn num_accels(&self) -> usize {
        self.num_accels
    }
}

/// Hardware-independent facts about each architecture: its accuracy and its
/// position in canonical-serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchCatalog {
    accuracy: Vec<f64>,
    canonical_rank: Vec<usize>,
}

impl ArchCatalog {
    pub fn from_space(space: &ArchSpaceSample, mode: Execution) -> Self {
        let facts = exec::map_slice(mode, &space.architectures, |a| (a.accuracy(), a.canonical_json()));
        let mut order: Vec<usize> = (0..facts.len()).collect();
        order.sort_by(|&i, &j| facts[i].1.cmp(&facts[j].1));
        let mut canonical_rank = vec![0; facts.len()];
        for (rank, &i) in order.iter().enumerate() {
            canonical_rank[i] = rank;
        }
        ArchCatalog { accuracy: facts.into_iter().map(|f| f.0).collect(), canonical_rank }
    }

    /// Catalog whose canonical order is the index order.
    pub fn from_accuracies(accuracy: Vec<f64>) -> Self {
        let canonical_rank = (0..accuracy.len()).collect();
        ArchCatalog { accuracy, canonical_rank }
    }

    pub fn len(&self) -> usize {
        self.accuracy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accuracy.is_empty()
    }

    pub fn accuracy(&self, arch: usize) -> f64 {
        self.accuracy[arch]
    }

    pub fn accuracies(&self) -> &[f64] {
        &self.accuracy
    }

    pub fn canonical_rank(&self, arch: usize) -> usize {
        self.canonical_rank[arch]
    }

    /// The shared tie-break: higher accuracy, then lower latency, then lower
    /// energy, then earlier canonical serialization. `Less` means `a` wins.
    pub fn compare(&self, a: (usize, &PerfEstimate), b: (usize, &PerfEstimate)) -> Ordering {
        self.accuracy[b.0]
            .total_cmp(&self.accuracy[a.0])
            .then(a.1.latency_cycles.cmp(&b.1.latency_cycles))
            .then(a.1.energy_nj.total_cmp(&b.1.energy_nj))
            .then(self.canonical_rank[a.0].cmp(&self.canonical_rank[b.0]))
    }
}

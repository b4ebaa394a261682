//! Optimal-architecture sets on a proxy accelerator.
//!
//! Stage 1 measures every architecture on the proxy once, spreads a grid of
//! (latency, energy) budgets over the observed costs and keeps the
//! constrained accuracy-argmax at each grid point. Stage 2 re-costs only the
//! set members on another accelerator.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::accel::PerfEstimate;
use crate::error::{Error, Result};
use crate::evaluation::{ArchCatalog, CostOracle};
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPoint {
    pub latency_budget: u64,
    pub energy_budget: f64,
}

impl ConstraintPoint {
    pub fn new(latency_budget: u64, energy_budget: f64) -> Result<Self> {
        if latency_budget == 0 || !(energy_budget.is_finite() && energy_budget > 0.0) {
            return Err(Error::InvalidInput(format!(
                "constraint point needs positive finite budgets, got ({latency_budget}, {energy_budget})"
            )));
        }
        Ok(ConstraintPoint { latency_budget, energy_budget })
    }

    pub fn admits(&self, p: &PerfEstimate) -> bool {
        p.latency_cycles <= self.latency_budget && p.energy_nj <= self.energy_budget
    }
}

/// Best architecture among `candidates` that fits both budgets, under the
/// catalog's tie-break. `None` when nothing fits.
pub fn constrained_argmax<I>(
    catalog: &ArchCatalog,
    candidates: I,
    budget: &ConstraintPoint,
) -> Option<(usize, PerfEstimate)>
where
    I: IntoIterator<Item = (usize, PerfEstimate)>,
{
    candidates.into_iter().filter(|(_, p)| budget.admits(p)).min_by(|a, b| catalog.compare((a.0, &a.1), (b.0, &b.1)))
}

/// Every architecture's cost on one accelerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyProfile {
    pub proxy: usize,
    pub costs: Vec<PerfEstimate>,
}

impl ProxyProfile {
    /// Charges one evaluation per architecture.
    pub fn measure<O: CostOracle>(oracle: &O, proxy: usize, mode: Execution) -> Result<Self> {
        if proxy >= oracle.num_accels() {
            return Err(Error::InvalidInput(format!(
                "proxy index {proxy} out of range for {} accelerators",
                oracle.num_accels()
            )));
        }
        let costs = exec::map_range(mode, oracle.num_archs(), |a| oracle.estimate(a, proxy));
        Ok(ProxyProfile { proxy, costs })
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn argmax(&self, catalog: &ArchCatalog, budget: &ConstraintPoint) -> Option<(usize, PerfEstimate)> {
        constrained_argmax(catalog, self.costs.iter().copied().enumerate(), budget)
    }
}

/// Nearest-rank quantile of sorted data at `k / K`.
fn quantile<T: Copy>(sorted: &[T], k: usize, of: usize) -> T {
    let m = sorted.len();
    let rank = (k * m).div_ceil(of).max(1);
    sorted[rank - 1]
}

/// `K` budget pairs at quantiles `1/K, 2/K, ..., 1` of the proxy's latency and
/// energy distributions. Coinciding points are merged, so the grid can be
/// shorter than `K`.
pub fn build_constraint_grid(profile: &ProxyProfile, k: usize) -> Result<Vec<ConstraintPoint>> {
    if k == 0 {
        return Err(Error::InvalidInput("grid size K must be at least 1".into()));
    }
    if profile.is_empty() {
        return Err(Error::InvalidInput("cannot build a grid over an empty space".into()));
    }
    let mut lat: Vec<u64> = profile.costs.iter().map(|p| p.latency_cycles).collect();
    let mut energy: Vec<f64> = profile.costs.iter().map(|p| p.energy_nj).collect();
    lat.sort_unstable();
    energy.sort_by(f64::total_cmp);

    let mut grid: Vec<ConstraintPoint> = Vec::with_capacity(k);
    for i in 1..=k {
        let point = ConstraintPoint { latency_budget: quantile(&lat, i, k), energy_budget: quantile(&energy, i, k) };
        if grid.last() != Some(&point) {
            grid.push(point);
        }
    }
    if grid.len() < k {
        log::warn!("constraint grid shrank from {k} to {} distinct points", grid.len());
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEntry {
    pub arch: usize,
    pub proxy_cost: PerfEstimate,
    pub accuracy: f64,
}

/// Knobs for [`build_optimal_set`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimalSetOptions {
    /// Also keep architectures within this many accuracy points of a grid
    /// point's optimum (and feasible there). Off by default.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSet {
    pub proxy: usize,
    pub grid: Vec<ConstraintPoint>,
    pub entries: Vec<SetEntry>,
    /// Entry index chosen at each grid point; `None` where nothing fits.
    pub grid_choice: Vec<Option<usize>>,
}

impl OptimalSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn archs(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.arch).collect()
    }
}

/// Union of per-grid-point argmaxes on the proxy, in grid order.
pub fn build_optimal_set(
    catalog: &ArchCatalog,
    profile: &ProxyProfile,
    grid: &[ConstraintPoint],
    options: OptimalSetOptions,
    mode: Execution,
) -> Result<OptimalSet> {
    if catalog.len() != profile.len() {
        return Err(Error::InvalidInput(format!(
            "catalog has {} architectures but the profile has {}",
            catalog.len(),
            profile.len()
        )));
    }
    let winners = exec::map_slice(mode, grid, |point| profile.argmax(catalog, point));

    let mut entries: Vec<SetEntry> = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    let mut push = |entries: &mut Vec<SetEntry>, arch: usize| -> usize {
        if seen.insert(arch) {
            entries.push(SetEntry { arch, proxy_cost: profile.costs[arch], accuracy: catalog.accuracy(arch) });
            entries.len() - 1
        } else {
            entries.iter().position(|e| e.arch == arch).expect("seen implies stored")
        }
    };
    let grid_choice: Vec<Option<usize>> = winners.iter().map(|w| w.map(|(arch, _)| push(&mut entries, arch))).collect();
    if entries.is_empty() {
        return Err(Error::EmptyOptimalSet);
    }

    if let Some(eps) = options.epsilon.filter(|e| *e > 0.0) {
        for (point, winner) in grid.iter().zip(&winners) {
            let Some((best, _)) = winner else { continue };
            let floor = catalog.accuracy(*best) - eps;
            let mut near: Vec<usize> = (0..profile.len())
                .filter(|&a| point.admits(&profile.costs[a]) && catalog.accuracy(a) >= floor)
                .collect();
            near.sort_by(|&a, &b| catalog.compare((a, &profile.costs[a]), (b, &profile.costs[b])));
            for a in near {
                push(&mut entries, a);
            }
        }
    }

    Ok(OptimalSet { proxy: profile.proxy, grid: grid.to_vec(), entries, grid_choice })
}

/// Best set member on `target` under `budget`. Charges one evaluation per
/// set entry.
pub fn select_from_set<O: CostOracle>(
    catalog: &ArchCatalog,
    set: &OptimalSet,
    oracle: &O,
    target: usize,
    budget: &ConstraintPoint,
) -> Option<(usize, PerfEstimate)> {
    let costs: Vec<(usize, PerfEstimate)> =
        set.entries.iter().map(|e| (e.arch, oracle.estimate(e.arch, target))).collect();
    constrained_argmax(catalog, costs, budget)
}

/// Best set member on the proxy itself, from the costs stored in Stage 1.
pub fn select_on_proxy(
    catalog: &ArchCatalog,
    set: &OptimalSet,
    budget: &ConstraintPoint,
) -> Option<(usize, PerfEstimate)> {
    constrained_argmax(catalog, set.entries.iter().map(|e| (e.arch, e.proxy_cost)), budget)
}

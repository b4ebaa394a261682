#![allow(dead_code)]

use codesign::accel::{
    build_hardware_space, Accelerator, Dataflow, ResourceModel, SupportProfile, ValidityRule, HW_GRID,
};
use codesign::arch::generate_space;
use codesign::pareto::ConstraintPoint;
use codesign::search::DesignConstraints;
use codesign::{AnalyticalOracle, ArchCatalog, ArchSpaceSample, Execution, PerfEstimate, PerfTable, SpaceKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Strictly increasing integer latency map for speed rank `r` (0 = fastest).
pub fn lat_map(r: u64, x: u64) -> u64 {
    (1 + r) * x + r * x.isqrt() + 7 * r
}

/// Strictly increasing energy map for speed rank `r`.
pub fn energy_map(r: u64, e: f64) -> f64 {
    e * (1.0 + 0.5 * r as f64) + r as f64 * e.sqrt()
}

/// Hardware family whose every latency/energy column is a strictly
/// increasing transform of a hidden base column. Accelerators are pointwise
/// ordered by speed rank, and faster ones need more resource.
pub struct Family {
    pub catalog: ArchCatalog,
    pub accels: Vec<Accelerator>,
    pub table: PerfTable,
    /// speed rank of each accelerator index
    pub rank: Vec<u64>,
    pub base_latency: Vec<u64>,
    pub base_energy: Vec<f64>,
    pub proxy: usize,
}

impl Family {
    pub fn new(seed: u64, m: usize, n: usize) -> Family {
        assert!(n <= 54);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_latency: Vec<u64> = (0..m).map(|_| rng.gen_range(1_000..2_000_000)).collect();
        let base_energy: Vec<f64> =
            base_latency.iter().map(|&l| (l as f64 * rng.gen_range(0.6..1.4)).round() + 10.0).collect();
        let max_l = *base_latency.iter().max().unwrap() as f64;
        let accuracy: Vec<f64> =
            base_latency.iter().map(|&l| 92.5 + 1.7 * (l as f64 / max_l).sqrt() + rng.gen_range(-0.3..0.3)).collect();

        // distinct hardware, sorted by resource so speed rank follows resource
        let model = ResourceModel::default();
        let mut pool: Vec<Accelerator> =
            (0..HW_GRID).step_by(HW_GRID / n).take(n).map(|i| Accelerator::from_grid_index(i, Dataflow::KcP)).collect();
        pool.sort_by(|a, b| model.resource(b).total_cmp(&model.resource(a)));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let accels: Vec<Accelerator> = order.iter().map(|&r| pool[r]).collect();
        let rank: Vec<u64> = order.iter().map(|&r| r as u64).collect();

        let columns: Vec<Vec<PerfEstimate>> = rank
            .iter()
            .map(|&r| {
                (0..m)
                    .map(|a| PerfEstimate {
                        latency_cycles: lat_map(r, base_latency[a]),
                        energy_nj: energy_map(r, base_energy[a]),
                    })
                    .collect()
            })
            .collect();
        let table = PerfTable::from_columns(&columns).unwrap();
        let proxy = rng.gen_range(0..n);
        Family {
            catalog: ArchCatalog::from_accuracies(accuracy),
            accels,
            table,
            rank,
            base_latency,
            base_energy,
            proxy,
        }
    }

    /// Budget on accelerator `h` equivalent to a base-unit budget.
    pub fn budget_on(&self, h: usize, base: (u64, f64)) -> ConstraintPoint {
        ConstraintPoint {
            latency_budget: lat_map(self.rank[h], base.0),
            energy_budget: energy_map(self.rank[h], base.1),
        }
    }

    /// Base-unit budget behind a budget observed on accelerator `h`: the
    /// grid budgets are observed costs, so the preimage is a base value.
    pub fn base_of(&self, h: usize, point: &ConstraintPoint) -> (u64, f64) {
        let r = self.rank[h];
        let l = self.base_latency.iter().copied().find(|&x| lat_map(r, x) == point.latency_budget).unwrap();
        let e = self.base_energy.iter().copied().find(|&x| energy_map(r, x) == point.energy_budget).unwrap();
        (l, e)
    }

    pub fn resource(&self, h: usize) -> f64 {
        ResourceModel::default().resource(&self.accels[h])
    }
}

/// Plain nested-loop co-design scan, written independently of the library's
/// comparators: best accuracy, then latency, energy, and index for the
/// architecture; first accelerator wins on equal accuracy.
pub fn nested_loop_coupled(
    accuracy: &[f64],
    accels: &[Accelerator],
    table: &PerfTable,
    c: &DesignConstraints,
) -> Option<(usize, usize)> {
    let model = ResourceModel::default();
    let mut best: Option<(usize, usize)> = None;
    for (h, accel) in accels.iter().enumerate() {
        if model.resource(accel) > c.resource_budget {
            continue;
        }
        let mut local: Option<usize> = None;
        for a in 0..accuracy.len() {
            let p = table.get(a, h);
            if p.latency_cycles > c.latency_budget || p.energy_nj > c.energy_budget {
                continue;
            }
            local = match local {
                None => Some(a),
                Some(b) => {
                    let q = table.get(b, h);
                    let better = if accuracy[a] != accuracy[b] {
                        accuracy[a] > accuracy[b]
                    } else if p.latency_cycles != q.latency_cycles {
                        p.latency_cycles < q.latency_cycles
                    } else if p.energy_nj != q.energy_nj {
                        p.energy_nj < q.energy_nj
                    } else {
                        a < b
                    };
                    Some(if better { a } else { b })
                }
            };
        }
        if let Some(a) = local {
            if best.is_none_or(|(ba, _)| accuracy[a] > accuracy[ba]) {
                best = Some((a, h));
            }
        }
    }
    best
}

/// Three models, two accelerators. The proxy's best model under the budget
/// is not the best model on the faster accelerator, where a more accurate
/// model fits.
pub struct Adversarial {
    pub catalog: ArchCatalog,
    pub accels: Vec<Accelerator>,
    pub table: PerfTable,
    pub constraints: DesignConstraints,
    pub proxy: usize,
}

pub fn adversarial_instance() -> Adversarial {
    let p = |l: u64, e: f64| PerfEstimate { latency_cycles: l, energy_nj: e };
    let table = PerfTable::from_columns(&[
        vec![p(500, 5_000.0), p(800, 8_000.0), p(2_000, 20_000.0)],
        vec![p(300, 3_000.0), p(400, 4_000.0), p(900, 9_000.0)],
    ])
    .unwrap();
    Adversarial {
        catalog: ArchCatalog::from_accuracies(vec![92.6, 93.4, 94.5]),
        accels: vec![
            Accelerator::new(64, 400, 100, Dataflow::KcP).unwrap(),
            Accelerator::new(256, 800, 300, Dataflow::KcP).unwrap(),
        ],
        table,
        constraints: DesignConstraints::unlimited_resource(1_000, 10_000.0).unwrap(),
        proxy: 0,
    }
}

pub const CELL_ARCHS: usize = 1017;
pub const MOBILE_ARCHS: usize = 1046;
pub const HW_PER_DATAFLOW: usize = 51;

/// Seed-1 space with its filtered hardware sample and analytical oracle.
pub struct Experiment {
    pub space: ArchSpaceSample,
    pub accels: Vec<Accelerator>,
    pub catalog: ArchCatalog,
    pub oracle: AnalyticalOracle,
}

pub fn experiment(kind: SpaceKind) -> Experiment {
    let count = match kind {
        SpaceKind::Cell => CELL_ARCHS,
        SpaceKind::Mobile => MOBILE_ARCHS,
    };
    let space = generate_space(kind, 1, count).unwrap();
    let profile = SupportProfile::of_space(&space).unwrap();
    let hw =
        build_hardware_space(1, HW_PER_DATAFLOW, &Dataflow::ALL, &ValidityRule::for_space(kind), &profile).unwrap();
    let accels = hw.accelerators;
    let catalog = ArchCatalog::from_space(&space, Execution::Parallel);
    let oracle = AnalyticalOracle::new(&space, &accels);
    Experiment { space, accels, catalog, oracle }
}

mod common;

use codesign::monotonicity::{ranks, srcc, srcc_matrix};
use codesign::pareto::{
    build_constraint_grid, build_optimal_set, select_from_set, ConstraintPoint, OptimalSetOptions, ProxyProfile,
};
use codesign::search::{
    fully_coupled_exhaustive, fully_decoupled, semi_decoupled, CoDesignProblem, DecoupledOrder, DesignConstraints,
};
use codesign::{Accelerator, ArchCatalog, Dataflow, Execution, Metric, PerfEstimate, PerfTable};
use common::Family;
use proptest::prelude::*;

fn table_strategy(max_archs: usize, accels: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Vec<PerfEstimate>>)> {
    (3..max_archs).prop_flat_map(move |m| {
        (
            prop::collection::vec((0u32..40).prop_map(|v| 92.5 + 0.05 * f64::from(v)), m),
            prop::collection::vec(
                prop::collection::vec(
                    (1u64..60, 1u32..60)
                        .prop_map(|(l, e)| PerfEstimate { latency_cycles: 10 * l, energy_nj: f64::from(e) * 3.0 }),
                    accels,
                ),
                m,
            ),
        )
    })
}

proptest! {
    #[test]
    fn rank_sums_and_equivariance(values in prop::collection::vec(0u8..20, 1..80), rot in 0usize..80) {
        let x: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let n = x.len();
        let r = ranks(&x).unwrap().0;
        let sum: f64 = r.iter().sum();
        prop_assert!((sum - (n * (n + 1)) as f64 / 2.0).abs() < 1e-9);

        let k = rot % n;
        let mut rotated = x.clone();
        rotated.rotate_left(k);
        let mut expected = r.clone();
        expected.rotate_left(k);
        prop_assert_eq!(ranks(&rotated).unwrap().0, expected);
    }

    #[test]
    fn srcc_is_symmetric_and_transform_invariant(
        pairs in prop::collection::vec((0u16..500, 0u16..500), 3..120),
        scale in 0.01f64..10.0,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        if let (Ok(a), Ok(b)) = (srcc(&x, &y), srcc(&y, &x)) {
            prop_assert_eq!(a, b);
            prop_assert!((-1.0..=1.0).contains(&a));
            let fx: Vec<f64> = x.iter().map(|v| v * scale + v.sqrt() + v.powi(3)).collect();
            prop_assert_eq!(srcc(&fx, &y).unwrap(), a);
            prop_assert_eq!(srcc(&x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn tie_free_srcc_matches_closed_form(perm in Just((0..40).collect::<Vec<u32>>()).prop_shuffle(), n in 3usize..40) {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = perm.iter().filter(|&&v| (v as usize) < n).map(|&v| f64::from(v)).collect();
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        let nf = n as f64;
        let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        prop_assert!((srcc(&x, &y).unwrap() - closed).abs() < 1e-12);
    }

    #[test]
    fn matrix_entries_match_pairwise_calls((acc, rows) in table_strategy(30, 4)) {
        let _ = acc;
        let table = PerfTable::from_rows(rows).unwrap();
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let m = srcc_matrix(&table, ids, Metric::Latency, Execution::Parallel).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let direct = srcc(&table.metric_column(i, Metric::Latency), &table.metric_column(j, Metric::Latency)).ok();
                prop_assert_eq!(m.get(i, j), direct);
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn set_members_are_pareto_efficient((acc, rows) in table_strategy(200, 1), k in 1usize..30) {
        let catalog = ArchCatalog::from_accuracies(acc.clone());
        let table = PerfTable::from_rows(rows).unwrap();
        let profile = ProxyProfile::measure(&table, 0, Execution::Sequential).unwrap();
        let grid = build_constraint_grid(&profile, k).unwrap();
        let set = build_optimal_set(&catalog, &profile, &grid, OptimalSetOptions::default(), Execution::Sequential).unwrap();
        prop_assert!(set.len() <= k);
        for e in &set.entries {
            let pe = profile.costs[e.arch];
            for (b, pb) in profile.costs.iter().enumerate() {
                let weakly = acc[b] >= acc[e.arch] && pb.latency_cycles <= pe.latency_cycles && pb.energy_nj <= pe.energy_nj;
                let strictly = acc[b] > acc[e.arch] || pb.latency_cycles < pe.latency_cycles || pb.energy_nj < pe.energy_nj;
                prop_assert!(!(weakly && strictly), "entry {} dominated by {}", e.arch, b);
            }
        }
        // selecting on the proxy at each grid point returns that point's argmax
        for (point, choice) in set.grid.iter().zip(&set.grid_choice) {
            let picked = select_from_set(&catalog, &set, &table, 0, point).map(|(a, _)| a);
            prop_assert_eq!(picked, choice.map(|i| set.entries[i].arch));
        }
    }

    #[test]
    fn larger_budgets_never_lower_accuracy((acc, rows) in table_strategy(100, 1), l in 10u64..600, e in 3.0f64..180.0, dl in 0u64..200, de in 0.0f64..60.0) {
        let catalog = ArchCatalog::from_accuracies(acc);
        let table = PerfTable::from_rows(rows).unwrap();
        let profile = ProxyProfile::measure(&table, 0, Execution::Sequential).unwrap();
        let small = profile.argmax(&catalog, &ConstraintPoint::new(l, e).unwrap());
        let large = profile.argmax(&catalog, &ConstraintPoint::new(l + dl, e + de).unwrap());
        if let Some((a, _)) = small {
            let (b, _) = large.unwrap();
            prop_assert!(catalog.accuracy(b) >= catalog.accuracy(a));
        }
    }

    #[test]
    fn coupled_dominates_every_strategy((acc, rows) in table_strategy(40, 5), l in 10u64..600, e in 3.0f64..180.0, proxy in 0usize..5, k in 1usize..10) {
        let catalog = ArchCatalog::from_accuracies(acc);
        let table = PerfTable::from_rows(rows).unwrap();
        let accels: Vec<Accelerator> = (0..5).map(|i| Accelerator::from_grid_index(i * 80, Dataflow::YrP)).collect();
        let problem = CoDesignProblem::new(&catalog, &accels, &table).unwrap();
        let c = DesignConstraints::unlimited_resource(l, e).unwrap();
        let coupled = fully_coupled_exhaustive(&problem, &c).unwrap();
        let others = [
            semi_decoupled(&problem, &c, proxy, k, OptimalSetOptions::default()).unwrap(),
            fully_decoupled(&problem, &c, proxy, DecoupledOrder::ArchitectureFirst).unwrap(),
            fully_decoupled(&problem, &c, proxy, DecoupledOrder::AcceleratorFirst).unwrap(),
        ];
        for o in &others {
            if let Some(a) = o.accuracy {
                prop_assert!(coupled.accuracy.unwrap() >= a);
                let cost = table.get(o.best_arch.unwrap(), o.best_accel.unwrap());
                prop_assert!(c.point().admits(&cost));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_families_share_sets_and_optima(seed in any::<u64>(), m in 5usize..120, n in 2usize..12, pick in any::<prop::sample::Index>(), k in 1usize..25) {
        let fam = Family::new(seed, m, n);
        let grids: Vec<_> = (0..n)
            .map(|h| build_constraint_grid(&ProxyProfile::measure(&fam.table, h, Execution::Sequential).unwrap(), k).unwrap())
            .collect();
        let sets: Vec<Vec<usize>> = (0..n)
            .map(|h| {
                let profile = ProxyProfile::measure(&fam.table, h, Execution::Sequential).unwrap();
                let mut s = build_optimal_set(&fam.catalog, &profile, &grids[h], OptimalSetOptions::default(), Execution::Sequential).unwrap().archs();
                s.sort_unstable();
                s
            })
            .collect();
        prop_assert!(sets.iter().all(|s| *s == sets[0]));

        let problem = CoDesignProblem::new(&fam.catalog, &fam.accels, &fam.table).unwrap();
        let fastest = (0..n).min_by_key(|&h| fam.rank[h]).unwrap();
        let base = fam.base_of(fam.proxy, pick.get(&grids[fam.proxy]));
        let budget = fam.budget_on(fastest, base);
        let c = DesignConstraints::unlimited_resource(budget.latency_budget, budget.energy_budget).unwrap();
        let coupled = fully_coupled_exhaustive(&problem, &c).unwrap();
        let semi = semi_decoupled(&problem, &c, fam.proxy, k, OptimalSetOptions::default()).unwrap();
        prop_assert_eq!(semi.accuracy, coupled.accuracy);
    }
}

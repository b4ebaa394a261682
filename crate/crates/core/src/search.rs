//! Co-design strategies over one shared problem instance.
//!
//! * fully coupled: every (architecture, accelerator) pair, the optimality oracle
//! * fully decoupled: NAS on a proxy, then pick hardware for that one model
//! * semi-decoupled: optimal set on a proxy, then search hardware over the set
//!
//! Every strategy costs designs through a [`CountingOracle`], so the reported
//! evaluation counts are exact under any parallel schedule.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accel::{Accelerator, PerfEstimate, ResourceModel};
use crate::error::{Error, Result};
use crate::evaluation::{ArchCatalog, CostOracle, CountingOracle};
use crate::exec::{self, Execution};
use crate::pareto::{
    build_constraint_grid, build_optimal_set, constrained_argmax, select_from_set, select_on_proxy, ConstraintPoint,
    OptimalSet, OptimalSetOptions, ProxyProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub latency_budget: u64,
    pub energy_budget: f64,
    pub resource_budget: f64,
}

impl DesignConstraints {
    pub fn new(latency_budget: u64, energy_budget: f64, resource_budget: f64) -> Result<Self> {
        let c = DesignConstraints { latency_budget, energy_budget, resource_budget };
        c.validate()?;
        Ok(c)
    }

    /// Budgets with no resource limit.
    pub fn unlimited_resource(latency_budget: u64, energy_budget: f64) -> Result<Self> {
        Self::new(latency_budget, energy_budget, f64::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.latency_budget == 0 {
            problems.push("latency budget must be positive".to_string());
        }
        for (name, v) in [("energy", self.energy_budget), ("resource", self.resource_budget)] {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} budget must be positive and finite, got {v}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    pub fn point(&self) -> ConstraintPoint {
        ConstraintPoint { latency_budget: self.latency_budget, energy_budget: self.energy_budget }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Decoupled,
    Coupled,
    SemiDecoupled,
    Random,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Decoupled => "decoupled",
            StrategyKind::Coupled => "coupled",
            StrategyKind::SemiDecoupled => "semi-decoupled",
            StrategyKind::Random => "random",
        }
    }
}

/// Stage order of the fully decoupled strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoupledOrder {
    #[default]
    ArchitectureFirst,
    AcceleratorFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoDesignOutcome {
    pub strategy: StrategyKind,
    pub best_arch: Option<usize>,
    pub best_accel: Option<usize>,
    pub accuracy: Option<f64>,
    pub cost: Option<PerfEstimate>,
    pub evaluations: u64,
    /// Semi-decoupled: size of the optimal set. Decoupled: 1 when the first
    /// stage produced a candidate for the second, else 0.
    pub carried: Option<usize>,
}

impl CoDesignOutcome {
    fn new(
        strategy: StrategyKind,
        best: Option<Pick>,
        evaluations: u64,
        carried: Option<usize>,
        catalog: &ArchCatalog,
    ) -> Self {
        CoDesignOutcome {
            strategy,
            best_arch: best.map(|b| b.arch),
            best_accel: best.map(|b| b.accel),
            accuracy: best.map(|b| catalog.accuracy(b.arch)),
            cost: best.map(|b| b.cost),
            evaluations,
            carried,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.best_arch.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pick {
    arch: usize,
    accel: usize,
    cost: PerfEstimate,
}

/// Architectures, accelerators and their cost oracle, indexed consistently.
pub struct CoDesignProblem<'a, O> {
    pub catalog: &'a ArchCatalog,
    pub accels: &'a [Accelerator],
    pub oracle: &'a O,
    pub resource: ResourceModel,
    pub mode: Execution,
}

impl<'a, O: CostOracle> CoDesignProblem<'a, O> {
    pub fn new(catalog: &'a ArchCatalog, accels: &'a [Accelerator], oracle: &'a O) -> Result<Self> {
        if catalog.is_empty() || accels.is_empty() {
            return Err(Error::InvalidInput("co-design needs at least one architecture and one accelerator".into()));
        }
        if oracle.num_archs() != catalog.len() || oracle.num_accels() != accels.len() {
            return Err(Error::InvalidInput(format!(
                "oracle covers {}x{} designs but the problem has {}x{}",
                oracle.num_archs(),
                oracle.num_accels(),
                catalog.len(),
                accels.len()
            )));
        }
        Ok(CoDesignProblem { catalog, accels, oracle, resource: ResourceModel::default(), mode: Execution::default() })
    }

    pub fn with_mode(mut self, mode: Execution) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_resource_model(mut self, resource: ResourceModel) -> Self {
        self.resource = resource;
        self
    }

    pub fn num_archs(&self) -> usize {
        self.catalog.len()
    }

    /// Accelerator indices within the resource budget, in hardware order.
    pub fn feasible_accels(&self, c: &DesignConstraints) -> Vec<usize> {
        (0..self.accels.len()).filter(|&h| self.resource.resource(&self.accels[h]) <= c.resource_budget).collect()
    }

    fn check_proxy(&self, proxy: usize) -> Result<()> {
        if proxy >= self.accels.len() {
            return Err(Error::InvalidInput(format!(
                "proxy index {proxy} out of range for {} accelerators",
                self.accels.len()
            )));
        }
        Ok(())
    }

    fn best_on<C: CostOracle>(
        &self,
        oracle: &C,
        accel: usize,
        budget: &ConstraintPoint,
    ) -> Option<(usize, PerfEstimate)> {
        constrained_argmax(self.catalog, (0..self.num_archs()).map(|a| (a, oracle.estimate(a, accel))), budget)
    }
}

/// Keeps the first accelerator whose pick has strictly higher accuracy.
fn first_best(
    catalog: &ArchCatalog,
    picks: impl IntoIterator<Item = (usize, Option<(usize, PerfEstimate)>)>,
) -> Option<Pick> {
    let mut best: Option<Pick> = None;
    for (accel, pick) in picks {
        let Some((arch, cost)) = pick else { continue };
        if best.is_none_or(|b| catalog.accuracy(arch) > catalog.accuracy(b.arch)) {
            best = Some(Pick { arch, accel, cost });
        }
    }
    best
}

/// Exhaustive scan of every architecture on every resource-feasible
/// accelerator.
pub fn fully_coupled_exhaustive<O: CostOracle>(
    problem: &CoDesignProblem<O>,
    c: &DesignConstraints,
) -> Result<CoDesignOutcome> {
    c.validate()?;
    let counter = CountingOracle::new(problem.oracle);
    let feasible = problem.feasible_accels(c);
    let budget = c.point();
    let picks = exec::map_slice(problem.mode, &feasible, |&h| problem.best_on(&counter, h, &budget));
    let best = first_best(problem.catalog, feasible.iter().copied().zip(picks));
    Ok(CoDesignOutcome::new(StrategyKind::Coupled, best, counter.evaluations(), None, problem.catalog))
}

/// Architecture search on the proxy followed by hardware search for that
/// single architecture, or the reverse with [`DecoupledOrder::AcceleratorFirst`].
pub fn fully_decoupled<O: CostOracle>(
    problem: &CoDesignProblem<O>,
    c: &DesignConstraints,
    proxy: usize,
    order: DecoupledOrder,
) -> Result<CoDesignOutcome> {
    c.validate()?;
    problem.check_proxy(proxy)?;
    let counter = CountingOracle::new(problem.oracle);
    let feasible = problem.feasible_accels(c);
    let budget = c.point();
    let by_cost = |a: &(usize, PerfEstimate), b: &(usize, PerfEstimate)| {
        a.1.latency_cycles.cmp(&b.1.latency_cycles).then(a.1.energy_nj.total_cmp(&b.1.energy_nj)).then(a.0.cmp(&b.0))
    };

    let (best, carried) = match order {
        DecoupledOrder::ArchitectureFirst => {
            let profile = ProxyProfile::measure(&counter, proxy, problem.mode)?;
            match profile.argmax(problem.catalog, &budget) {
                None => (None, 0),
                Some((arch, _)) => {
                    let costs = exec::map_slice(problem.mode, &feasible, |&h| (h, counter.estimate(arch, h)));
                    let hw = costs.into_iter().filter(|(_, p)| budget.admits(p)).min_by(by_cost);
                    (hw.map(|(accel, cost)| Pick { arch, accel, cost }), 1)
                }
            }
        }
        DecoupledOrder::AcceleratorFirst => {
            // size the hardware for a fixed reference model: the first in canonical order
            let reference = (0..problem.num_archs()).min_by_key(|&a| problem.catalog.canonical_rank(a)).unwrap_or(0);
            let costs = exec::map_slice(problem.mode, &feasible, |&h| (h, counter.estimate(reference, h)));
            match costs.into_iter().min_by(by_cost) {
                None => (None, 0),
                Some((accel, _)) => {
                    let pick = problem.best_on(&counter, accel, &budget);
                    (pick.map(|(arch, cost)| Pick { arch, accel, cost }), 1)
                }
            }
        }
    };
    Ok(CoDesignOutcome::new(StrategyKind::Decoupled, best, counter.evaluations(), Some(carried), problem.catalog))
}

/// Stage 1 on its own: the proxy's optimal set over a `k`-point grid.
/// Charges one evaluation per architecture on `oracle`.
pub fn stage_one<O: CostOracle>(
    catalog: &ArchCatalog,
    oracle: &O,
    proxy: usize,
    k: usize,
    options: OptimalSetOptions,
    mode: Execution,
) -> Result<(ProxyProfile, OptimalSet)> {
    let profile = ProxyProfile::measure(oracle, proxy, mode)?;
    let grid = build_constraint_grid(&profile, k)?;
    let set = build_optimal_set(catalog, &profile, &grid, options, mode)?;
    Ok((profile, set))
}

/// The semi-decoupled strategy: one exhaustive scan on the proxy, then only
/// the optimal set is costed on every other resource-feasible accelerator.
pub fn semi_decoupled<O: CostOracle>(
    problem: &CoDesignProblem<O>,
    c: &DesignConstraints,
    proxy: usize,
    k: usize,
    options: OptimalSetOptions,
) -> Result<CoDesignOutcome> {
    c.validate()?;
    problem.check_proxy(proxy)?;
    let counter = CountingOracle::new(problem.oracle);
    let set = match stage_one(problem.catalog, &counter, proxy, k, options, problem.mode) {
        Ok((_, set)) => set,
        Err(Error::EmptyOptimalSet) => {
            return Ok(CoDesignOutcome::new(
                StrategyKind::SemiDecoupled,
                None,
                counter.evaluations(),
                Some(0),
                problem.catalog,
            ));
        }
        Err(e) => return Err(e),
    };
    let outcome = semi_decoupled_stage_two(problem, &counter, &set, c);
    Ok(CoDesignOutcome { evaluations: counter.evaluations(), ..outcome })
}

/// Stage 2 over a prebuilt set. Charges `|set|` evaluations on `oracle` per
/// non-proxy resource-feasible accelerator.
pub fn semi_decoupled_stage_two<P: CostOracle, O: CostOracle>(
    problem: &CoDesignProblem<P>,
    oracle: &O,
    set: &OptimalSet,
    c: &DesignConstraints,
) -> CoDesignOutcome {
    let counter = CountingOracle::new(oracle);
    let feasible = problem.feasible_accels(c);
    let budget = c.point();
    let picks = exec::map_slice(problem.mode, &feasible, |&h| {
        if h == set.proxy {
            select_on_proxy(problem.catalog, set, &budget)
        } else {
            select_from_set(problem.catalog, set, &counter, h, &budget)
        }
    });
    let best = first_best(problem.catalog, feasible.iter().copied().zip(picks));
    CoDesignOutcome::new(StrategyKind::SemiDecoupled, best, counter.evaluations(), Some(set.len()), problem.catalog)
}

/// Uniform random sampling of distinct (architecture, accelerator) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomCoSearch {
    pub seed: u64,
    pub budget: usize,
}

impl RandomCoSearch {
    pub fn run<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome> {
        c.validate()?;
        let counter = CountingOracle::new(problem.oracle);
        let feasible = problem.feasible_accels(c);
        let m = problem.num_archs();
        let pairs = m * feasible.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut drawn: Vec<usize> = rand::seq::index::sample(&mut rng, pairs, self.budget.min(pairs)).into_vec();
        // scan in grid order so equal-accuracy picks resolve as in the exhaustive scan
        drawn.sort_unstable();
        let budget = c.point();
        let costs = exec::map_slice(problem.mode, &drawn, |&i| {
            let (h, a) = (feasible[i / m], i % m);
            (h, a, counter.estimate(a, h))
        });
        let mut per_accel: Vec<(usize, Option<(usize, PerfEstimate)>)> = Vec::new();
        for chunk in costs.chunk_by(|x, y| x.0 == y.0) {
            let pick = constrained_argmax(problem.catalog, chunk.iter().map(|&(_, a, p)| (a, p)), &budget);
            per_accel.push((chunk[0].0, pick));
        }
        let best = first_best(problem.catalog, per_accel);
        Ok(CoDesignOutcome::new(StrategyKind::Random, best, counter.evaluations(), None, problem.catalog))
    }
}

/// A co-design driver that can be swapped into [`run_comparison`]-style
/// harnesses.
pub trait SearchStrategy {
    fn kind(&self) -> StrategyKind;
    fn search<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome>;
}

pub struct Coupled;

impl SearchStrategy for Coupled {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Coupled
    }
    fn search<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome> {
        fully_coupled_exhaustive(problem, c)
    }
}

pub struct Decoupled {
    pub proxy: usize,
    pub order: DecoupledOrder,
}

impl SearchStrategy for Decoupled {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Decoupled
    }
    fn search<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome> {
        fully_decoupled(problem, c, self.proxy, self.order)
    }
}

pub struct SemiDecoupled {
    pub proxy: usize,
    pub k: usize,
    pub options: OptimalSetOptions,
}

impl SearchStrategy for SemiDecoupled {
    fn kind(&self) -> StrategyKind {
        StrategyKind::SemiDecoupled
    }
    fn search<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome> {
        semi_decoupled(problem, c, self.proxy, self.k, self.options)
    }
}

impl SearchStrategy for RandomCoSearch {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Random
    }
    fn search<O: CostOracle>(&self, problem: &CoDesignProblem<O>, c: &DesignConstraints) -> Result<CoDesignOutcome> {
        self.run(problem, c)
    }
}

/// Evaluation count each strategy must charge, from its outcome's shape.
pub fn closed_form_evaluations(
    outcome: &CoDesignOutcome,
    num_archs: usize,
    feasible: &[usize],
    proxy: usize,
    order: DecoupledOrder,
) -> Option<u64> {
    let m = num_archs as u64;
    let f = feasible.len() as u64;
    let carried = outcome.carried.map(|c| c as u64);
    match outcome.strategy {
        StrategyKind::Coupled => Some(m * f),
        StrategyKind::Decoupled => carried.map(|c| match order {
            DecoupledOrder::ArchitectureFirst => m + c * f,
            DecoupledOrder::AcceleratorFirst => f + c * m,
        }),
        StrategyKind::SemiDecoupled => {
            let others = f - u64::from(feasible.contains(&proxy));
            carried.map(|size| m + others * size)
        }
        StrategyKind::Random => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub outcome: Option<CoDesignOutcome>,
    pub error: Option<String>,
    pub expected_evaluations: Option<u64>,
    /// Coupled accuracy minus this strategy's accuracy.
    pub gap_vs_oracle: Option<f64>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub constraints: DesignConstraints,
    pub proxy: usize,
    pub k: usize,
    pub num_archs: usize,
    pub num_feasible_accels: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, kind: StrategyKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.strategy == kind)
    }
}

/// Runs decoupled, coupled and semi-decoupled on identical inputs. A failing
/// strategy is reported in its row without aborting the others.
pub fn run_comparison<O: CostOracle>(
    problem: &CoDesignProblem<O>,
    c: &DesignConstraints,
    proxy: usize,
    k: usize,
    options: OptimalSetOptions,
) -> ComparisonReport {
    let order = DecoupledOrder::ArchitectureFirst;
    let feasible = problem.feasible_accels(c);
    let timed = |f: &dyn Fn() -> Result<CoDesignOutcome>| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed().as_secs_f64() * 1e3)
    };
    let runs: Vec<(StrategyKind, (Result<CoDesignOutcome>, f64))> = vec![
        (StrategyKind::Decoupled, timed(&|| fully_decoupled(problem, c, proxy, order))),
        (StrategyKind::Coupled, timed(&|| fully_coupled_exhaustive(problem, c))),
        (StrategyKind::SemiDecoupled, timed(&|| semi_decoupled(problem, c, proxy, k, options))),
    ];
    let oracle_accuracy = runs.iter().find_map(|(kind, (r, _))| match (kind, r) {
        (StrategyKind::Coupled, Ok(o)) => o.accuracy,
        _ => None,
    });
    let rows = runs
        .into_iter()
        .map(|(strategy, (result, wall_time_ms))| match result {
            Ok(outcome) => ComparisonRow {
                strategy,
                expected_evaluations: closed_form_evaluations(&outcome, problem.num_archs(), &feasible, proxy, order),
                gap_vs_oracle: oracle_accuracy.zip(outcome.accuracy).map(|(o, a)| o - a),
                outcome: Some(outcome),
                error: None,
                wall_time_ms,
            },
            Err(e) => ComparisonRow {
                strategy,
                outcome: None,
                error: Some(e.to_string()),
                expected_evaluations: None,
                gap_vs_oracle: None,
                wall_time_ms,
            },
        })
        .collect();
    ComparisonReport {
        constraints: *c,
        proxy,
        k,
        num_archs: problem.num_archs(),
        num_feasible_accels: feasible.len(),
        rows,
    }
}

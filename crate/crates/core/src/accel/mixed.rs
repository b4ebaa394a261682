//! Layer-wise mixed dataflow: a model is cut into 22 parts (first layer, 20
//! evenly sized groups of intermediate layers, last layer) and each part runs
//! on its own accelerator.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cost::{estimate_layer, estimate_layers, PerfEstimate};
use super::Accelerator;
use crate::arch::{Architecture, LayerDescriptor};
use crate::error::{Error, Result};

pub const SEGMENTS: usize = 22;
const INTERMEDIATE_GROUPS: usize = SEGMENTS - 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDataflowPlan {
    pub segments: Vec<Accelerator>,
}

impl MixedDataflowPlan {
    pub fn new(segments: Vec<Accelerator>) -> Result<Self> {
        let plan = MixedDataflowPlan { segments };
        plan.validate()?;
        Ok(plan)
    }

    pub fn uniform(accel: Accelerator) -> Self {
        MixedDataflowPlan { segments: vec![accel; SEGMENTS] }
    }

    pub fn from_indices(indices: &PlanIndices, pool: &[Accelerator]) -> Self {
        MixedDataflowPlan { segments: indices.iter().map(|&i| pool[i]).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.len() != SEGMENTS {
            return Err(Error::InvalidInput(format!(
                "mixed plan needs {SEGMENTS} segments, got {}",
                self.segments.len()
            )));
        }
        self.segments.iter().try_for_each(Accelerator::validate)
    }
}

/// A plan expressed as indices into an accelerator pool.
pub type PlanIndices = [usize; SEGMENTS];

/// Seeded plans drawing every segment uniformly from a pool of `pool_len`
/// accelerators.
pub fn sample_plans(seed: u64, count: usize, pool_len: usize) -> Result<Vec<PlanIndices>> {
    if pool_len == 0 {
        return Err(Error::InvalidInput("empty accelerator pool".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| std::array::from_fn(|_| rng.gen_range(0..pool_len))).collect())
}

/// Layer ranges of the 22 parts. Intermediate groups get
/// `floor((n - 2) / 20)` layers each, with the remainder going to the last
/// intermediate group.
pub fn partition(num_layers: usize) -> Result<Vec<Range<usize>>> {
    if num_layers < SEGMENTS {
        return Err(Error::PartitionInfeasible { layers: num_layers, parts: SEGMENTS });
    }
    let inner = num_layers - 2;
    let base = inner / INTERMEDIATE_GROUPS;
    let mut parts = Vec::with_capacity(SEGMENTS);
    parts.push(0..1);
    for g in 0..INTERMEDIATE_GROUPS {
        let start = 1 + g * base;
        let end = if g + 1 == INTERMEDIATE_GROUPS { num_layers - 1 } else { start + base };
        parts.push(start..end);
    }
    parts.push(num_layers - 1..num_layers);
    Ok(parts)
}

/// Costs each layer on its segment's accelerator, accumulating in layer order.
pub fn estimate_mixed_layers(layers: &[LayerDescriptor], plan: &MixedDataflowPlan) -> Result<PerfEstimate> {
    plan.validate()?;
    let parts = partition(layers.len())?;
    let mut total = PerfEstimate::ZERO;
    for (range, accel) in parts.into_iter().zip(&plan.segments) {
        for layer in &layers[range] {
            total += estimate_layer(layer, accel);
        }
    }
    Ok(total)
}

pub fn estimate_mixed(arch: &Architecture, plan: &MixedDataflowPlan) -> Result<PerfEstimate> {
    estimate_mixed_layers(&arch.layers(), plan)
}

/// Per-segment, per-accelerator costs of one architecture, so that any plan
/// over the same pool is a sum of 22 lookups.
///
/// Layer energies are integer-valued, so segment subtotals sum to exactly the
/// same value as layer-order accumulation.
#[derive(Debug, Clone)]
pub struct SegmentCosts {
    pool_len: usize,
    costs: Vec<PerfEstimate>,
}

impl SegmentCosts {
    pub fn new(layers: &[LayerDescriptor], pool: &[Accelerator]) -> Result<Self> {
        let parts = partition(layers.len())?;
        let mut costs = Vec::with_capacity(SEGMENTS * pool.len());
        for range in parts {
            for accel in pool {
                costs.push(estimate_layers(&layers[range.clone()], accel));
            }
        }
        Ok(SegmentCosts { pool_len: pool.len(), costs })
    }

    pub fn segment(&self, segment: usize, accel: usize) -> PerfEstimate {
        self.costs[segment * self.pool_len + accel]
    }

    pub fn plan(&self, plan: &PlanIndices) -> PerfEstimate {
        plan.iter().enumerate().map(|(s, &a)| self.segment(s, a)).sum()
    }
}

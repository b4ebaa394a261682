//! Accelerator hardware space and the analytical latency/energy model.

pub mod cost;
pub mod mixed;

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cost::{estimate_layer, estimate_layers, estimate_model, spatial_utilization, PerfEstimate};
pub use mixed::{estimate_mixed, MixedDataflowPlan, SEGMENTS};

use crate::arch::{ArchSpaceSample, LayerDescriptor, SpaceKind};
use crate::error::{Error, Result};

pub const PE_CHOICES: [u32; 6] = [512, 256, 128, 64, 32, 16];
pub const NOC_CHOICES: [u32; 8] = [300, 400, 500, 600, 700, 800, 900, 1000];
pub const OFFCHIP_CHOICES: [u32; 9] = [50, 100, 150, 200, 250, 275, 300, 325, 350];

/// Hardware configurations per dataflow.
pub const HW_GRID: usize = PE_CHOICES.len() * NOC_CHOICES.len() * OFFCHIP_CHOICES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataflow {
    /// Output/input-channel parallel (NVDLA-style).
    #[serde(rename = "KC-P")]
    KcP,
    /// Output-row / filter-row parallel (Eyeriss-style row stationary).
    #[serde(rename = "YR-P")]
    YrP,
    /// Output-column parallel, weight stationary.
    #[serde(rename = "X-P")]
    XP,
}

impl Dataflow {
    pub const ALL: [Dataflow; 3] = [Dataflow::KcP, Dataflow::YrP, Dataflow::XP];

    pub fn name(self) -> &'static str {
        match self {
            Dataflow::KcP => "KC-P",
            Dataflow::YrP => "YR-P",
            Dataflow::XP => "X-P",
        }
    }
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One hardware choice: PE array size, NoC and off-chip bandwidth (bytes per
/// cycle), and dataflow template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Accelerator {
    pub num_pes: u32,
    pub noc_bandwidth: u32,
    pub offchip_bandwidth: u32,
    pub dataflow: Dataflow,
}

impl Accelerator {
    pub fn new(num_pes: u32, noc_bandwidth: u32, offchip_bandwidth: u32, dataflow: Dataflow) -> Result<Self> {
        let accel = Accelerator { num_pes, noc_bandwidth, offchip_bandwidth, dataflow };
        accel.validate()?;
        Ok(accel)
    }

    pub fn validate(&self) -> Result<()> {
        if !PE_CHOICES.contains(&self.num_pes)
            || !NOC_CHOICES.contains(&self.noc_bandwidth)
            || !OFFCHIP_CHOICES.contains(&self.offchip_bandwidth)
        {
            return Err(Error::InvalidInput(format!("accelerator outside the hardware grid: {self}")));
        }
        Ok(())
    }

    /// Position in the per-dataflow hardware grid.
    pub fn from_grid_index(index: usize, dataflow: Dataflow) -> Self {
        let off = index % OFFCHIP_CHOICES.len();
        let noc = (index / OFFCHIP_CHOICES.len()) % NOC_CHOICES.len();
        let pe = index / (OFFCHIP_CHOICES.len() * NOC_CHOICES.len());
        Accelerator {
            num_pes: PE_CHOICES[pe],
            noc_bandwidth: NOC_CHOICES[noc],
            offchip_bandwidth: OFFCHIP_CHOICES[off],
            dataflow,
        }
    }
}

impl fmt::Display for Accelerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}pe-noc{}-off{}-{}", self.num_pes, self.noc_bandwidth, self.offchip_bandwidth, self.dataflow)
    }
}

/// Area-like scalar used for the hardware resource constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceModel {
    pub area_per_pe: f64,
    pub area_per_noc_byte: f64,
}

impl Default for ResourceModel {
    fn default() -> Self {
        ResourceModel { area_per_pe: 1.0, area_per_noc_byte: 0.01 }
    }
}

impl ResourceModel {
    pub fn resource(&self, accel: &Accelerator) -> f64 {
        f64::from(accel.num_pes) * self.area_per_pe + f64::from(accel.noc_bandwidth) * self.area_per_noc_byte
    }
}

pub fn hardware_resource(accel: &Accelerator) -> f64 {
    ResourceModel::default().resource(accel)
}

/// Seeded, duplicate-free list of accelerators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwSpaceSample {
    pub seed: u64,
    pub accelerators: Vec<Accelerator>,
}

impl HwSpaceSample {
    pub fn len(&self) -> usize {
        self.accelerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accelerators.is_empty()
    }

    /// Concatenates samples in order, keeping the first copy of any repeat.
    pub fn merge<I: IntoIterator<Item = HwSpaceSample>>(seed: u64, samples: I) -> HwSpaceSample {
        let mut seen = HashSet::new();
        let accelerators = samples.into_iter().flat_map(|s| s.accelerators).filter(|a| seen.insert(*a)).collect();
        HwSpaceSample { seed, accelerators }
    }

    /// Drops accelerators the validity rule flags as unsupported, returning them.
    pub fn retain_supported(&mut self, rule: &ValidityRule, profile: &SupportProfile) -> Vec<Accelerator> {
        let (kept, dropped) = self.accelerators.iter().partition(|a| rule.supports(a, profile));
        self.accelerators = kept;
        dropped
    }
}

/// Samples `count` distinct points of the hardware grid crossed with
/// `dataflows`. Each dataflow set draws from its own ChaCha stream, so
/// per-dataflow samples under one seed are independent.
pub fn sample_hardware(seed: u64, count: usize, dataflows: &[Dataflow]) -> Result<HwSpaceSample> {
    let mut flows: Vec<Dataflow> = dataflows.to_vec();
    flows.sort();
    flows.dedup();
    if flows.is_empty() {
        return Err(Error::InvalidInput("at least one dataflow is required".into()));
    }
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let available = HW_GRID * flows.len();
    if count > available {
        return Err(Error::SpaceExhausted { requested: count as u128, available: available as u128 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(flows.iter().map(|df| 1u64 << *df as u32).sum());
    let accelerators = rand::seq::index::sample(&mut rng, available, count)
        .into_iter()
        .map(|i| Accelerator::from_grid_index(i % HW_GRID, flows[i / HW_GRID]))
        .collect();
    Ok(HwSpaceSample { seed, accelerators })
}

/// Per-dataflow sampling with a shared seed, merged in dataflow order and
/// filtered by the validity rule.
pub fn build_hardware_space(
    seed: u64,
    count_per_dataflow: usize,
    dataflows: &[Dataflow],
    rule: &ValidityRule,
    profile: &SupportProfile,
) -> Result<HwSpaceSample> {
    let mut samples = Vec::with_capacity(dataflows.len());
    for &df in dataflows {
        samples.push(sample_hardware(seed, count_per_dataflow, &[df])?);
    }
    let mut merged = HwSpaceSample::merge(seed, samples);
    let dropped = merged.retain_supported(rule, profile);
    if !dropped.is_empty() {
        log::info!("{} sampled accelerator(s) unsupported by their dataflow", dropped.len());
    }
    Ok(merged)
}

/// Mapping extents of an architecture space's smallest layers, which decide
/// whether a dataflow can occupy a given PE array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportProfile {
    /// Smallest `K * C` (C = 1 for depthwise).
    pub kc_extent: u64,
    /// Smallest `Y' * R`.
    pub yr_extent: u64,
}

impl SupportProfile {
    /// Per-extent minima over every MAC-bearing layer with a spatial output
    /// (the global-pooled classifier is left out).
    pub fn of_space(space: &ArchSpaceSample) -> Option<Self> {
        space
            .architectures
            .iter()
            .flat_map(|a| a.layers())
            .filter(|l| l.macs() > 0 && l.output_height() > 1)
            .map(|l| Self::of_layer(&l))
            .reduce(|a, b| SupportProfile {
                kc_extent: a.kc_extent.min(b.kc_extent),
                yr_extent: a.yr_extent.min(b.yr_extent),
            })
    }

    pub fn of_layer(layer: &LayerDescriptor) -> Self {
        SupportProfile {
            kc_extent: layer.out_channels * layer.reduction_channels(),
            yr_extent: layer.output_height() * layer.kernel_height,
        }
    }
}

/// Which sampled accelerator/dataflow pairs count as supported.
///
/// KC-P needs `K*C * kc_divisor >= num_pes`, YR-P needs
/// `Y'*R * yr_divisor >= num_pes`, and every dataflow needs at least
/// `min_noc_per_pe` bytes/cycle of NoC bandwidth per PE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRule {
    pub kc_divisor: u64,
    pub yr_divisor: u64,
    pub min_noc_per_pe: f64,
}

impl ValidityRule {
    /// Accepts every accelerator.
    pub const PERMISSIVE: ValidityRule =
        ValidityRule { kc_divisor: u64::MAX, yr_divisor: u64::MAX, min_noc_per_pe: 0.0 };

    /// Thresholds calibrated so the seed-1, 51-per-dataflow sample keeps 133
    /// accelerators for the cell space and 132 for the mobile space.
    pub fn for_space(kind: SpaceKind) -> Self {
        match kind {
            SpaceKind::Cell => ValidityRule { kc_divisor: 8, yr_divisor: 16, min_noc_per_pe: 1.0 },
            SpaceKind::Mobile => ValidityRule { kc_divisor: 8, yr_divisor: 128, min_noc_per_pe: 1.25 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kc_divisor == 0
            || self.yr_divisor == 0
            || !(self.min_noc_per_pe.is_finite() && self.min_noc_per_pe >= 0.0)
        {
            return Err(Error::InvalidInput(format!("invalid validity rule {self:?}")));
        }
        Ok(())
    }

    pub fn supports(&self, accel: &Accelerator, profile: &SupportProfile) -> bool {
        let pes = u64::from(accel.num_pes);
        if f64::from(accel.noc_bandwidth) < self.min_noc_per_pe * pes as f64 {
            return false;
        }
        match accel.dataflow {
            Dataflow::KcP => profile.kc_extent.saturating_mul(self.kc_divisor) >= pes,
            Dataflow::YrP => profile.yr_extent.saturating_mul(self.yr_divisor) >= pes,
            Dataflow::XP => true,
        }
    }
}

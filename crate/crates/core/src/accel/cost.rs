//! Roofline latency/energy model.
//!
//! Per layer:
//!
//! * compute cycles = `ceil(MACs / spatial_utilization)`
//! * NoC traffic: input, weight and output bytes delivered to the PE array,
//!   with operand re-fetch divided by the dataflow's reuse
//! * off-chip traffic: every tensor moves across the DRAM interface once
//! * latency = max(compute, NoC traffic / NoC bandwidth, off-chip traffic / off-chip bandwidth)
//! * energy = MACs * e_mac + 3 * MACs * e_spad + NoC bytes * e_noc + DRAM bytes * e_dram
//!
//! Without reuse every input element is fetched once per output channel it
//! feeds and every weight once per output row. KC-P multicasts inputs across
//! the output channels it maps spatially, YR-P keeps inputs and filter rows
//! resident for `R` steps, and X-P keeps weights stationary so they cross the
//! NoC once per layer.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::{Accelerator, Dataflow};
use crate::arch::{Architecture, LayerDescriptor, LayerKind};

pub const E_MAC: f64 = 1.0;
pub const E_SPAD: f64 = 6.0;
pub const E_NOC: f64 = 2.0;
pub const E_DRAM: f64 = 200.0;
/// Scratchpad accesses per MAC: two operand reads and one accumulation.
pub const SPAD_PER_MAC: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerfEstimate {
    pub latency_cycles: u64,
    pub energy_nj: f64,
}

impl PerfEstimate {
    pub const ZERO: PerfEstimate = PerfEstimate { latency_cycles: 0, energy_nj: 0.0 };
}

impl Add for PerfEstimate {
    type Output = PerfEstimate;

    fn add(self, rhs: PerfEstimate) -> PerfEstimate {
        PerfEstimate {
            latency_cycles: self.latency_cycles + rhs.latency_cycles,
            energy_nj: self.energy_nj + rhs.energy_nj,
        }
    }
}

impl AddAssign for PerfEstimate {
    fn add_assign(&mut self, rhs: PerfEstimate) {
        *self = *self + rhs;
    }
}

impl Sum for PerfEstimate {
    fn sum<I: Iterator<Item = PerfEstimate>>(iter: I) -> PerfEstimate {
        iter.fold(PerfEstimate::ZERO, Add::add)
    }
}

/// PEs the dataflow can keep busy on this layer.
pub fn spatial_utilization(layer: &LayerDescriptor, accel: &Accelerator) -> u64 {
    let mapped = match accel.dataflow {
        Dataflow::KcP => layer.out_channels * layer.reduction_channels(),
        Dataflow::YrP => layer.output_height() * layer.kernel_height,
        Dataflow::XP => layer.output_width(),
    };
    mapped.min(u64::from(accel.num_pes)).max(1)
}

/// Byte counts moved for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Traffic {
    pub onchip: u64,
    pub offchip: u64,
}

pub fn traffic(layer: &LayerDescriptor, accel: &Accelerator) -> Traffic {
    let input = layer.input_bytes();
    let weights = layer.weight_bytes();
    let output = layer.output_bytes();
    // output channels each input element feeds
    let fanout = match layer.kind {
        LayerKind::StandardConv | LayerKind::PointwiseConv => layer.out_channels,
        _ => 1,
    };
    let input_fetches = input * fanout;
    let weight_fetches = weights * layer.output_height();

    let pes = u64::from(accel.num_pes);
    let (input_noc, weight_noc) = match accel.dataflow {
        Dataflow::KcP => (input_fetches.div_ceil(fanout.min(pes)), weight_fetches),
        Dataflow::YrP => {
            let r = layer.kernel_height;
            (input_fetches.div_ceil(r), weight_fetches.div_ceil(r))
        }
        Dataflow::XP => (input_fetches, weights),
    };
    Traffic { onchip: input_noc + weight_noc + output, offchip: input + weights + output }
}

pub fn estimate_layer(layer: &LayerDescriptor, accel: &Accelerator) -> PerfEstimate {
    let macs = layer.macs();
    let compute = if macs == 0 { 0 } else { macs.div_ceil(spatial_utilization(layer, accel)) };
    let t = traffic(layer, accel);
    let noc_cycles = t.onchip.div_ceil(u64::from(accel.noc_bandwidth));
    let dram_cycles = t.offchip.div_ceil(u64::from(accel.offchip_bandwidth));

    let energy = macs as f64 * E_MAC
        + (SPAD_PER_MAC * macs) as f64 * E_SPAD
        + t.onchip as f64 * E_NOC
        + t.offchip as f64 * E_DRAM;
    PerfEstimate { latency_cycles: compute.max(noc_cycles).max(dram_cycles), energy_nj: energy }
}

/// Sum of per-layer estimates, accumulated in layer order.
pub fn estimate_layers(layers: &[LayerDescriptor], accel: &Accelerator) -> PerfEstimate {
    layers.iter().map(|l| estimate_layer(l, accel)).sum()
}

pub fn estimate_model(arch: &Architecture, accel: &Accelerator) -> PerfEstimate {
    estimate_layers(&arch.layers(), accel)
}

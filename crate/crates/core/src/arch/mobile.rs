//! AlphaNet-like mobile space: seven stages of inverted-residual blocks with a
//! fixed channel schedule and searchable depth, kernel and expansion ratio.

use serde::{Deserialize, Serialize};

use super::layer::{LayerDescriptor, LayerKind};
use crate::error::{Error, Result};

pub const STAGES: usize = 7;
pub const STAGE_WIDTHS: [u32; 9] = [16, 16, 24, 32, 64, 112, 192, 216, 1792];
pub const RESOLUTIONS: [u32; 4] = [192, 224, 256, 288];
pub const DEPTHS: [u8; 5] = [2, 3, 4, 5, 6];
pub const KERNELS: [u8; 3] = [3, 5, 7];
pub const EXPANSIONS: [u8; 3] = [3, 4, 6];

/// Fixed (depth, kernel, expansion) of the first and last stages.
pub const FIRST_STAGE: (u8, u8, u8) = (1, 3, 1);
pub const LAST_STAGE: (u8, u8, u8) = (1, 3, 6);

const STAGE_STRIDES: [u64; STAGES] = [1, 2, 2, 2, 1, 2, 1];
const INPUT_CHANNELS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MobileArchitecture {
    pub resolution: u32,
    pub stage_widths: [u32; 9],
    pub stage_depths: [u8; STAGES],
    pub stage_kernels: [u8; STAGES],
    pub stage_expansions: [u8; STAGES],
}

impl MobileArchitecture {
    /// Builds an architecture from the five searchable middle stages.
    pub fn new(resolution: u32, depths: [u8; 5], kernels: [u8; 5], expansions: [u8; 5]) -> Result<Self> {
        let frame = |first: u8, mid: [u8; 5], last: u8| {
            let mut v = [0u8; STAGES];
            v[0] = first;
            v[1..6].copy_from_slice(&mid);
            v[6] = last;
            v
        };
        let arch = MobileArchitecture {
            resolution,
            stage_widths: STAGE_WIDTHS,
            stage_depths: frame(FIRST_STAGE.0, depths, LAST_STAGE.0),
            stage_kernels: frame(FIRST_STAGE.1, kernels, LAST_STAGE.1),
            stage_expansions: frame(FIRST_STAGE.2, expansions, LAST_STAGE.2),
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !RESOLUTIONS.contains(&self.resolution) {
            problems.push(format!("resolution {} not in {RESOLUTIONS:?}", self.resolution));
        }
        if self.stage_widths != STAGE_WIDTHS {
            problems.push(format!("stage widths must be {STAGE_WIDTHS:?}"));
        }
        let ends = [(0, FIRST_STAGE), (STAGES - 1, LAST_STAGE)];
        for (i, (d, k, e)) in ends {
            if (self.stage_depths[i], self.stage_kernels[i], self.stage_expansions[i]) != (d, k, e) {
                problems.push(format!("stage {i} must be depth {d}, kernel {k}, expansion {e}"));
            }
        }
        for i in 1..STAGES - 1 {
            if !DEPTHS.contains(&self.stage_depths[i]) {
                problems.push(format!("stage {i} depth {} not in {DEPTHS:?}", self.stage_depths[i]));
            }
            if !KERNELS.contains(&self.stage_kernels[i]) {
                problems.push(format!("stage {i} kernel {} not in {KERNELS:?}", self.stage_kernels[i]));
            }
            if !EXPANSIONS.contains(&self.stage_expansions[i]) {
                problems.push(format!("stage {i} expansion {} not in {EXPANSIONS:?}", self.stage_expansions[i]));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// Stem conv, then an expand / depthwise / project triple per block, then
    /// the final 1x1 conv to the head width. A block with expansion 1 has no
    /// expand conv and lowers its first slot to an identity.
    pub fn layers(&self) -> Vec<LayerDescriptor> {
        use LayerKind::*;
        let widths = self.stage_widths.map(u64::from);
        let total_blocks: usize = self.stage_depths.iter().map(|&d| d as usize).sum();
        let mut layers = Vec::with_capacity(2 + 3 * total_blocks);

        let mut side = u64::from(self.resolution);
        let stem = LayerDescriptor::same(StandardConv, widths[0], INPUT_CHANNELS, 3, side, 2);
        side = stem.output_height();
        layers.push(stem);

        let mut in_c = widths[0];
        for stage in 0..STAGES {
            let out_c = widths[stage + 1];
            let k = u64::from(self.stage_kernels[stage]);
            let e = u64::from(self.stage_expansions[stage]);
            for block in 0..self.stage_depths[stage] {
                let stride = if block == 0 { STAGE_STRIDES[stage] } else { 1 };
                let hidden = in_c * e;
                if e == 1 {
                    layers.push(LayerDescriptor::identity(in_c, side));
                } else {
                    layers.push(LayerDescriptor::same(PointwiseConv, hidden, in_c, 1, side, 1));
                }
                let dw = LayerDescriptor::same(DepthwiseConv, hidden, hidden, k, side, stride);
                side = dw.output_height();
                layers.push(dw);
                layers.push(LayerDescriptor::same(PointwiseConv, out_c, hidden, 1, side, 1));
                in_c = out_c;
            }
        }
        layers.push(LayerDescriptor::same(PointwiseConv, widths[8], in_c, 1, side, 1));
        layers
    }
}

/// Number of distinct mobile architectures.
pub fn cardinality() -> u128 {
    let per_stage = (DEPTHS.len() * KERNELS.len() * EXPANSIONS.len()) as u128;
    RESOLUTIONS.len() as u128 * per_stage.pow(5)
}

pub(crate) fn sample<R: rand::Rng>(rng: &mut R) -> MobileArchitecture {
    let resolution = RESOLUTIONS[rng.gen_range(0..RESOLUTIONS.len())];
    let mut depths = [0u8; 5];
    let mut kernels = [0u8; 5];
    let mut expansions = [0u8; 5];
    for i in 0..5 {
        depths[i] = DEPTHS[rng.gen_range(0..DEPTHS.len())];
        kernels[i] = KERNELS[rng.gen_range(0..KERNELS.len())];
        expansions[i] = EXPANSIONS[rng.gen_range(0..EXPANSIONS.len())];
    }
    MobileArchitecture::new(resolution, depths, kernels, expansions).expect("sampled from candidate sets")
}

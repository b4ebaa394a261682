//! DARTS-like cell space: a stack of 20 identical cells, each with four
//! intermediate nodes fed by two operation slots apiece.

use serde::{Deserialize, Serialize};

use super::layer::{LayerDescriptor, LayerKind};
use crate::error::{Error, Result};

pub const STACK_DEPTH: usize = 20;
pub const OP_SLOTS: usize = 8;
pub const INTERMEDIATE_NODES: usize = 4;
pub const BASE_CHANNELS: u32 = 36;
/// Zero-based positions of the reduction cells (channels double, resolution halves).
pub const REDUCTION_CELLS: [usize; 2] = [6, 13];

const STEM_MULTIPLIER: u64 = 3;
const INPUT_SIDE: u64 = 32;
const INPUT_CHANNELS: u64 = 3;
const NUM_CLASSES: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellOp {
    #[serde(rename = "sep_conv_3x3")]
    SepConv3x3,
    #[serde(rename = "sep_conv_5x5")]
    SepConv5x5,
    #[serde(rename = "dil_conv_3x3")]
    DilConv3x3,
    #[serde(rename = "dil_conv_5x5")]
    DilConv5x5,
    #[serde(rename = "max_pool_3x3")]
    MaxPool3x3,
    #[serde(rename = "avg_pool_3x3")]
    AvgPool3x3,
    #[serde(rename = "skip_connect")]
    SkipConnect,
}

impl CellOp {
    pub const ALL: [CellOp; 7] = [
        CellOp::SepConv3x3,
        CellOp::SepConv5x5,
        CellOp::DilConv3x3,
        CellOp::DilConv5x5,
        CellOp::MaxPool3x3,
        CellOp::AvgPool3x3,
        CellOp::SkipConnect,
    ];

    /// Lowers one op applied to a `channels x side x side` node.
    fn lower(self, channels: u64, side: u64, stride: u64, out: &mut Vec<LayerDescriptor>) {
        use LayerKind::*;
        let reduced = side.div_ceil(stride);
        match self {
            CellOp::SepConv3x3 | CellOp::SepConv5x5 => {
                let k = if self == CellOp::SepConv3x3 { 3 } else { 5 };
                out.push(LayerDescriptor::same(DepthwiseConv, channels, channels, k, side, stride));
                out.push(LayerDescriptor::same(PointwiseConv, channels, channels, 1, reduced, 1));
                out.push(LayerDescriptor::same(DepthwiseConv, channels, channels, k, reduced, 1));
                out.push(LayerDescriptor::same(PointwiseConv, channels, channels, 1, reduced, 1));
            }
            CellOp::DilConv3x3 | CellOp::DilConv5x5 => {
                // Dilation widens the receptive field but leaves MACs and tensor sizes unchanged.
                let k = if self == CellOp::DilConv3x3 { 3 } else { 5 };
                out.push(LayerDescriptor::same(DepthwiseConv, channels, channels, k, side, stride));
                out.push(LayerDescriptor::same(PointwiseConv, channels, channels, 1, reduced, 1));
            }
            CellOp::MaxPool3x3 | CellOp::AvgPool3x3 => {
                out.push(LayerDescriptor::same(Pool, channels, channels, 3, side, stride));
            }
            CellOp::SkipConnect if stride == 1 => out.push(LayerDescriptor::identity(channels, side)),
            CellOp::SkipConnect => {
                // factorized reduce: two strided 1x1 convs, concatenated
                let half = (channels / 2).max(1);
                for _ in 0..2 {
                    out.push(LayerDescriptor::same(PointwiseConv, half, channels, 1, side, stride));
                }
            }
        }
    }
}

/// One operation slot: an op applied to an earlier node of the cell DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpSlot {
    pub op: CellOp,
    pub input: u8,
}

/// Node index feeding slot `slot`: nodes 0 and 1 are the cell inputs, so the
/// two slots of intermediate node `n` may read any of nodes `0..n + 2`.
pub fn slot_input_choices(slot: usize) -> u8 {
    (slot / 2 + 2) as u8
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellArchitecture {
    pub cell_ops: [OpSlot; OP_SLOTS],
    pub base_channels: u32,
}

impl CellArchitecture {
    pub fn new(cell_ops: [OpSlot; OP_SLOTS]) -> Result<Self> {
        let arch = CellArchitecture { cell_ops, base_channels: BASE_CHANNELS };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 {
            return Err(Error::InvalidInput("base_channels must be positive".into()));
        }
        for (slot, s) in self.cell_ops.iter().enumerate() {
            if s.input >= slot_input_choices(slot) {
                return Err(Error::InvalidInput(format!(
                    "slot {slot} reads node {} which is not an earlier node",
                    s.input
                )));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<LayerDescriptor> {
        use LayerKind::*;
        let base = u64::from(self.base_channels);
        let mut layers = Vec::with_capacity(1 + STACK_DEPTH * 20 + 2);

        let stem_c = STEM_MULTIPLIER * base;
        layers.push(LayerDescriptor::same(StandardConv, stem_c, INPUT_CHANNELS, 3, INPUT_SIDE, 1));

        let (mut c_prev_prev, mut c_prev, mut c_cur) = (stem_c, stem_c, base);
        let mut side = INPUT_SIDE;
        let mut reduction_prev = false;
        for cell in 0..STACK_DEPTH {
            let reduction = REDUCTION_CELLS.contains(&cell);
            if reduction {
                c_cur *= 2;
            }
            if reduction_prev {
                layers.push(LayerDescriptor::same(PointwiseConv, c_cur, c_prev_prev, 1, side * 2, 2));
            } else {
                layers.push(LayerDescriptor::same(PointwiseConv, c_cur, c_prev_prev, 1, side, 1));
            }
            layers.push(LayerDescriptor::same(PointwiseConv, c_cur, c_prev, 1, side, 1));

            let out_side = if reduction { side.div_ceil(2) } else { side };
            for slot in &self.cell_ops {
                let from_cell_input = slot.input < 2;
                let (in_side, stride) = match (reduction, from_cell_input) {
                    (true, true) => (side, 2),
                    _ => (out_side, 1),
                };
                slot.op.lower(c_cur, in_side, stride, &mut layers);
            }

            c_prev_prev = c_prev;
            c_prev = INTERMEDIATE_NODES as u64 * c_cur;
            reduction_prev = reduction;
            side = out_side;
        }

        // global average pool + linear classifier
        layers.push(
            LayerDescriptor::new(Pool, c_prev, c_prev, (side, side), (side, side), 1, 0)
                .expect("global pool dims are positive"),
        );
        layers.push(LayerDescriptor::same(StandardConv, NUM_CLASSES, c_prev, 1, 1, 1));
        layers
    }
}

/// Number of distinct cell genotypes.
pub fn cardinality() -> u128 {
    (0..OP_SLOTS).map(|slot| CellOp::ALL.len() as u128 * u128::from(slot_input_choices(slot))).product()
}

pub(crate) fn sample<R: rand::Rng>(rng: &mut R) -> CellArchitecture {
    let mut ops = [OpSlot { op: CellOp::SkipConnect, input: 0 }; OP_SLOTS];
    for (slot, s) in ops.iter_mut().enumerate() {
        s.op = CellOp::ALL[rng.gen_range(0..CellOp::ALL.len())];
        s.input = rng.gen_range(0..slot_input_choices(slot));
    }
    CellArchitecture { cell_ops: ops, base_channels: BASE_CHANNELS }
}

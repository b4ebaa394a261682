use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operator class of a lowered layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    StandardConv,
    DepthwiseConv,
    PointwiseConv,
    Pool,
    Identity,
}

/// Dimensions of one layer as consumed by the cost model.
///
/// `input_height`/`input_width` are the unpadded input extents; `padding` is
/// applied symmetrically on each side, so the output extent is
/// `ceil((input + 2*padding - kernel + 1) / stride)`. Depthwise layers carry
/// `in_channels == out_channels` and contribute one input channel per MAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerDescriptor {
    pub kind: LayerKind,
    pub out_channels: u64,
    pub in_channels: u64,
    pub kernel_height: u64,
    pub kernel_width: u64,
    pub input_height: u64,
    pub input_width: u64,
    pub stride: u64,
    pub padding: u64,
}

impl LayerDescriptor {
    /// Builds a layer and checks the dimension invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: LayerKind,
        out_channels: u64,
        in_channels: u64,
        kernel: (u64, u64),
        input: (u64, u64),
        stride: u64,
        padding: u64,
    ) -> Result<Self> {
        let layer = LayerDescriptor {
            kind,
            out_channels,
            in_channels,
            kernel_height: kernel.0,
            kernel_width: kernel.1,
            input_height: input.0,
            input_width: input.1,
            stride,
            padding,
        };
        layer.validate()?;
        Ok(layer)
    }

    /// Same-padded `k x k` layer (`padding = k / 2`).
    pub fn same(kind: LayerKind, out_c: u64, in_c: u64, k: u64, side: u64, stride: u64) -> Self {
        Self::new(kind, out_c, in_c, (k, k), (side, side), stride, k / 2)
            .expect("same-padded layer with positive dims is always valid")
    }

    /// Zero-cost pass-through.
    pub fn identity(channels: u64, side: u64) -> Self {
        Self::same(LayerKind::Identity, channels, channels, 1, side, 1)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.out_channels,
            self.in_channels,
            self.kernel_height,
            self.kernel_width,
            self.input_height,
            self.input_width,
            self.stride,
        ];
        if dims.contains(&0) {
            return Err(Error::InvalidInput(format!("layer has a zero dimension: {self:?}")));
        }
        if self.kind == LayerKind::DepthwiseConv && self.in_channels != self.out_channels {
            return Err(Error::InvalidInput(format!("depthwise layer must keep channel count: {self:?}")));
        }
        if self.input_height + 2 * self.padding < self.kernel_height
            || self.input_width + 2 * self.padding < self.kernel_width
        {
            return Err(Error::InvalidInput(format!("kernel larger than padded input: {self:?}")));
        }
        Ok(())
    }

    pub fn output_height(&self) -> u64 {
        out_extent(self.input_height, self.kernel_height, self.stride, self.padding)
    }

    pub fn output_width(&self) -> u64 {
        out_extent(self.input_width, self.kernel_width, self.stride, self.padding)
    }

    /// Input channels each output element reduces over.
    pub fn reduction_channels(&self) -> u64 {
        match self.kind {
            LayerKind::DepthwiseConv => 1,
            _ => self.in_channels,
        }
    }

    pub fn has_macs(&self) -> bool {
        matches!(self.kind, LayerKind::StandardConv | LayerKind::DepthwiseConv | LayerKind::PointwiseConv)
    }

    /// `K * C * R * S * Y' * X'`; zero for pool and identity layers.
    pub fn macs(&self) -> u64 {
        if !self.has_macs() {
            return 0;
        }
        self.out_channels
            * self.reduction_channels()
            * self.kernel_height
            * self.kernel_width
            * self.output_height()
            * self.output_width()
    }

    /// Input activation bytes (one byte per element).
    pub fn input_bytes(&self) -> u64 {
        match self.kind {
            LayerKind::Identity => 0,
            _ => self.in_channels * self.input_height * self.input_width,
        }
    }

    pub fn weight_bytes(&self) -> u64 {
        if !self.has_macs() {
            return 0;
        }
        self.out_channels * self.reduction_channels() * self.kernel_height * self.kernel_width
    }

    pub fn output_bytes(&self) -> u64 {
        match self.kind {
            LayerKind::Identity => 0,
            _ => self.out_channels * self.output_height() * self.output_width(),
        }
    }
}

fn out_extent(input: u64, kernel: u64, stride: u64, padding: u64) -> u64 {
    (input + 2 * padding + 1 - kernel).div_ceil(stride)
}

/// `2 * sum(MACs)` over a layer list.
pub fn flops_of(layers: &[LayerDescriptor]) -> u64 {
    2 * layers.iter().map(LayerDescriptor::macs).sum::<u64>()
}

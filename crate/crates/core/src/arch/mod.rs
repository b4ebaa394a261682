//! Synthetic architecture spaces, their lowering to layer lists, and the
//! hardware-independent accuracy oracle.

pub mod cell;
pub mod layer;
pub mod mobile;

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use cell::{CellArchitecture, CellOp, OpSlot};
pub use layer::{LayerDescriptor, LayerKind};
pub use mobile::MobileArchitecture;

use crate::error::{Error, Result};

/// Rejection-resampling budget, as a multiple of the requested count.
pub const RETRY_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Cell,
    Mobile,
}

impl SpaceKind {
    pub fn cardinality(self) -> u128 {
        match self {
            SpaceKind::Cell => cell::cardinality(),
            SpaceKind::Mobile => mobile::cardinality(),
        }
    }

    pub fn accuracy_band(self) -> AccuracyBand {
        match self {
            SpaceKind::Cell => AccuracyBand::CELL,
            SpaceKind::Mobile => AccuracyBand::MOBILE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Cell(CellArchitecture),
    Mobile(MobileArchitecture),
}

impl Architecture {
    pub fn space(&self) -> SpaceKind {
        match self {
            Architecture::Cell(_) => SpaceKind::Cell,
            Architecture::Mobile(_) => SpaceKind::Mobile,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Cell(a) => a.validate(),
            Architecture::Mobile(a) => a.validate(),
        }
    }

    pub fn layers(&self) -> Vec<LayerDescriptor> {
        match self {
            Architecture::Cell(a) => a.layers(),
            Architecture::Mobile(a) => a.layers(),
        }
    }

    /// `2 * sum(MACs)` over [`Architecture::layers`].
    pub fn flops(&self) -> u64 {
        layer::flops_of(&self.layers())
    }

    /// Compact JSON with recursively sorted keys and an explicit `kind` tag.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("architectures always serialize");
        sort_keys(value).to_string()
    }

    /// First 8 bytes (big-endian) of SHA-256 over the canonical JSON.
    pub fn stable_hash(&self) -> u64 {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    pub fn accuracy(&self) -> f64 {
        self.space().accuracy_band().accuracy(self.flops(), self.stable_hash())
    }
}

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Saturating FLOPs-to-accuracy curve with a bounded hash perturbation.
///
/// `accuracy = min + jitter + gain * (1 - exp(-flops / flops_scale)) + p`
/// where `gain = max - min - 2 * jitter` and `p` lies in `[-jitter, jitter]`,
/// so every value stays inside `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBand {
    pub min: f64,
    pub max: f64,
    pub flops_scale: f64,
    pub jitter: f64,
}

impl AccuracyBand {
    pub const CELL: AccuracyBand = AccuracyBand { min: 92.5, max: 94.8, flops_scale: 1.0e9, jitter: 0.3 };
    pub const MOBILE: AccuracyBand = AccuracyBand { min: 68.0, max: 72.5, flops_scale: 1.0e9, jitter: 0.3 };

    pub fn gain(&self) -> f64 {
        self.max - self.min - 2.0 * self.jitter
    }

    pub fn perturbation(&self, hash: u64) -> f64 {
        let unit = hash as f64 / u64::MAX as f64;
        (2.0 * unit - 1.0) * self.jitter
    }

    pub fn accuracy(&self, flops: u64, hash: u64) -> f64 {
        let saturation = 1.0 - (-(flops as f64) / self.flops_scale).exp();
        self.min + self.jitter + self.gain() * saturation + self.perturbation(hash)
    }
}

/// Seeded list of distinct architectures from one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpaceSample {
    pub kind: SpaceKind,
    pub seed: u64,
    pub architectures: Vec<Architecture>,
}

impl ArchSpaceSample {
    pub fn len(&self) -> usize {
        self.architectures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.architectures.is_empty()
    }
}

pub fn generate_cell_space(seed: u64, count: usize) -> Result<ArchSpaceSample> {
    generate(SpaceKind::Cell, seed, count, |rng| Architecture::Cell(cell::sample(rng)))
}

pub fn generate_mobile_space(seed: u64, count: usize) -> Result<ArchSpaceSample> {
    generate(SpaceKind::Mobile, seed, count, |rng| Architecture::Mobile(mobile::sample(rng)))
}

pub fn generate_space(kind: SpaceKind, seed: u64, count: usize) -> Result<ArchSpaceSample> {
    match kind {
        SpaceKind::Cell => generate_cell_space(seed, count),
        SpaceKind::Mobile => generate_mobile_space(seed, count),
    }
}

fn generate<F>(kind: SpaceKind, seed: u64, count: usize, mut draw: F) -> Result<ArchSpaceSample>
where
    F: FnMut(&mut ChaCha8Rng) -> Architecture,
{
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let available = kind.cardinality();
    if count as u128 > available {
        return Err(Error::SpaceExhausted { requested: count as u128, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut architectures = Vec::with_capacity(count);
    let attempts = RETRY_FACTOR.saturating_mul(count);
    for _ in 0..attempts {
        let arch = draw(&mut rng);
        if seen.insert(arch.clone()) {
            architectures.push(arch);
            if architectures.len() == count {
                return Ok(ArchSpaceSample { kind, seed, architectures });
            }
        }
    }
    Err(Error::RetryCapExceeded { requested: count, attempts })
}

//! Architecture/accelerator co-design engine.
//!
//! Seeded architecture and accelerator spaces, a roofline cost model, Spearman
//! monotonicity analysis, proxy optimal sets, and three co-design strategies
//! that share one cost oracle and one tie-break.

pub mod accel;
pub mod arch;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod monotonicity;
pub mod pareto;
pub mod search;

pub use accel::{Accelerator, Dataflow, HwSpaceSample, PerfEstimate};
pub use arch::{ArchSpaceSample, Architecture, SpaceKind};
pub use error::{Error, Result};
pub use evaluation::{AnalyticalOracle, ArchCatalog, CostOracle, CountingOracle, Metric, PerfTable};
pub use exec::Execution;

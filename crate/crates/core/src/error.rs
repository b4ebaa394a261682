use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space exhausted: requested {requested} designs but only {available} are available")]
    SpaceExhausted { requested: u128, available: u128 },

    #[error("could not draw {requested} distinct designs within {attempts} attempts")]
    RetryCapExceeded { requested: usize, attempts: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("cannot partition {layers} layers into {parts} parts")]
    PartitionInfeasible { layers: usize, parts: usize },

    #[error("no grid point admits a feasible architecture on the proxy")]
    EmptyOptimalSet,

    #[error("performance table is missing {} cell(s): {}", .0.len(), format_cells(.0))]
    MissingCells(Vec<(usize, usize)>),
}

fn format_cells(cells: &[(usize, usize)]) -> String {
    const SHOWN: usize = 16;
    let mut out: Vec<String> = cells.iter().take(SHOWN).map(|(a, h)| format!("(arch {a}, accel {h})")).collect();
    if cells.len() > SHOWN {
        out.push(format!("... and {} more", cells.len() - SHOWN));
    }
    out.join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

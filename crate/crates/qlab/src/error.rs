//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right} in {context}")]
    Dimension {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase function is flat (all harmonic amplitudes vanish): {0}")]
    FlatPhase(String),

    #[error("structurally degenerate stationary point at p = {p}: no derivative up to order {max_order} exceeds tolerance")]
    DegenerateStructure { p: f64, max_order: u32 },

    #[error("certificate window is empty (t0 = {t0:.6} >= t_r = {t_r:.6})")]
    EmptyWindow { t0: f64, t_r: f64 },

    #[error("time t = {t} outside certificate window [{t0:.6}, {t_r:.6}]")]
    OutsideWindow { t: f64, t0: f64, t_r: f64 },

    #[error("infeasible targets: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

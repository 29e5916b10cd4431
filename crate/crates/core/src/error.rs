use thiserror::Error;

/// Errors produced by parameter validation, system assembly and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its documented range (non-positive inductance,
    /// dead time exceeding the half period, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The integrator produced a non-finite state.
    #[error("non-finite state at t = {t} s ({what})")]
    NonFinite { what: &'static str, t: f64 },

    /// `locate_event` was called on a bracket without a strict sign change.
    #[error("event function has no sign change on [{t0}, {t1}] (f = {f0}, {f1})")]
    NoSignChange { t0: f64, t1: f64, f0: f64, f1: f64 },

    /// More discrete transitions fired inside one base step than the
    /// chattering guard allows.
    #[error("event chattering at t = {t} s: {count} transitions within one step")]
    Chattering { t: f64, count: usize },

    /// Dead time too small for the node swing to complete; the closed-form
    /// requirement is unbounded (zero magnetizing current).
    #[error("ZVS infeasible: zero magnetizing current, node swing time is unbounded")]
    ZvsInfeasible,

    /// A report was requested from a trace that lacks the required content.
    #[error("trace unusable for analysis: {0}")]
    TraceUnusable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

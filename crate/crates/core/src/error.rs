//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter validation failed (bad field value or combination).
    #[error("invalid parameter {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// A schedule could not be built under the requested constraints.
    #[error("schedule construction failed: {0}")]
    Schedule(String),

    /// Pulse supports overlap while the strict-overlap flag is set.
    #[error("pulse overlap at t={time}: width {width} >= gap {gap} (strict mode)")]
    PulseOverlap { time: f64, width: f64, gap: f64 },

    /// Population reached the edge of the momentum grid.
    #[error("aliasing guard tripped at t={time}: edge population {edge:.3e} (grid {grid_size})")]
    AliasingGuard { time: f64, edge: f64, grid_size: usize },

    /// Substep count below the configured floor for split-step pulses.
    #[error("substeps {got} below floor {floor}")]
    SubstepFloor { got: usize, floor: usize },

    /// An observable could not be computed from the given data.
    #[error("observable error: {0}")]
    Observable(String),

    /// Momentum window too narrow to resolve any ladder population.
    #[error("momentum window {window} below resolution {resolution}")]
    WindowTooNarrow { window: f64, resolution: f64 },

    /// No plateau found in a kinetic-energy series.
    #[error("not localized: late-time slope {late:.3e} exceeds 20% of early slope {early:.3e}")]
    NotLocalized { early: f64, late: f64 },

    /// FWHM extraction failed on a resonance curve.
    #[error("width extraction failed: {0}")]
    Fwhm(String),

    /// A failure at one scan grid point, tagged with the ratio it hit.
    #[error("at r = {r}: {source}")]
    AtRatio {
        r: f64,
        #[source]
        source: Box<Error>,
    },

    /// I/O or text-format problem.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Config file / manifest parse problem.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of numerical guards (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        match self {
            Error::AliasingGuard { .. }
            | Error::NotLocalized { .. }
            | Error::Fwhm(_)
            | Error::Observable(_)
            | Error::WindowTooNarrow { .. } => true,
            Error::AtRatio { source, .. } => source.is_numerical_guard(),
            _ => false,
        }
    }
}

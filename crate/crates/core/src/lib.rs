//! Simulation core for a periodically and quasi-periodically kicked quantum
//! rotor on a momentum ladder.
//!
//! The crate builds kick schedules (single, two-frequency, and
//! amplitude-modulated trains), evolves ladder wavefunctions through them with
//! a spectral split-operator propagator, extracts localization observables,
//! scans resonance curves p(0) vs the frequency ratio r, and evaluates
//! closed-form Fourier baselines of the kick trains. A classical standard-map
//! Monte Carlo serves as the diffusive contrast.
//!
//! All internal quantities are in reduced units: time in primary kick
//! periods, momentum on a ladder with spacing `hbar_eff`.

pub mod ensemble;
pub mod error;
pub mod exec;
pub mod dynamics;
pub mod observables;
pub mod scan;
pub mod schedule;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use schedule::{
    build_modulated_schedule, build_schedule, build_two_frequency_schedule, KickEvent,
    KickSchedule, Mode, SimParams,
};

//! Kick-sequence construction: the single train, the two-frequency double
//! train, and the amplitude-modulated variant, with coincidence merging and
//! square-pulse overlap handling.

use crate::error::{Error, Result};

/// Two delta events closer than this (in units of T1) merge into one.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Physical / numerical configuration of a run. All quantities are in
/// reduced units: times in units of the primary kick period T1, momenta in
/// units where the ladder spacing is `hbar_eff`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Stochasticity parameter (integrated strength of one kick).
    pub k: f64,
    /// Effective Planck constant; sets the momentum ladder spacing.
    pub hbar_eff: f64,
    /// Frequency ratio f2/f1 of the second train.
    pub r: f64,
    /// Relative phase of the second train, in [0, 2*pi).
    pub phi: f64,
    /// Pulse duration in units of T1; 0 selects ideal delta kicks.
    pub tau: f64,
    /// Number of kicks in the primary train.
    pub n1: u32,
    /// Kick count of the second train; `None` derives the largest integer
    /// strictly below r*n1.
    pub n2: Option<u32>,
    /// Modulation depth for the modulated mode.
    pub a: f64,
    pub mode: Mode,
    /// Momentum ladder length M (even, >= 64).
    pub grid_size: usize,
    /// Quasi-momentum ensemble size.
    pub beta_samples: usize,
    /// Initial momentum spread (standard deviation, reduced units).
    pub sigma_p: f64,
    /// RNG seed (classical Monte Carlo only; quantum runs are deterministic).
    pub seed: u64,
    /// Reject square-pulse schedules whose supports overlap.
    pub strict_overlap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TwoTrain,
    Modulated,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            k: 42.0,
            hbar_eff: 5.76,
            r: 1.0,
            phi: 0.0,
            tau: 0.0,
            n1: 10,
            n2: None,
            a: 0.0,
            mode: Mode::TwoTrain,
            grid_size: 2048,
            beta_samples: 32,
            sigma_p: 1.0,
            seed: 0,
            strict_overlap: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidParam { field, reason: reason.into() }
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(bad("k", format!("must be finite and >= 0, got {}", self.k)));
        }
        if !(self.hbar_eff > 0.0) || !self.hbar_eff.is_finite() {
            return Err(bad("hbar_eff", format!("must be > 0, got {}", self.hbar_eff)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(bad("r", format!("must be > 0, got {}", self.r)));
        }
        if !(0.0..std::f64::consts::TAU).contains(&self.phi) {
            return Err(bad("phi", format!("must lie in [0, 2*pi), got {}", self.phi)));
        }
        let tau_max = 1.0 / self.r.max(1.0);
        if !(self.tau >= 0.0 && self.tau < tau_max) {
            return Err(bad(
                "tau",
                format!("must satisfy 0 <= tau < 1/max(1, r) = {}, got {}", tau_max, self.tau),
            ));
        }
        if self.n1 < 1 {
            return Err(bad("n1", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return Err(bad("a", format!("must lie in [0, 1], got {}", self.a)));
        }
        if self.grid_size < 64 || self.grid_size % 2 != 0 {
            return Err(bad(
                "grid_size",
                format!("must be even and >= 64, got {}", self.grid_size),
            ));
        }
        if self.beta_samples == 0 {
            return Err(bad("beta_samples", "must be >= 1"));
        }
        if !(self.sigma_p >= 0.0) || !self.sigma_p.is_finite() {
            return Err(bad("sigma_p", format!("must be >= 0, got {}", self.sigma_p)));
        }
        Ok(())
    }

    /// Second-train kick count: the override if given, else the largest
    /// integer strictly below r*n1.
    pub fn n2_effective(&self) -> u32 {
        if let Some(n2) = self.n2 {
            return n2;
        }
        let x = self.r * self.n1 as f64;
        let c = x.ceil();
        let n2 = if c == x { x - 1.0 } else { c - 1.0 };
        n2.max(0.0) as u32
    }
}

/// One kick: a square potential pulse of the given integrated strength
/// centered at `time`, of duration `width` (0 = ideal delta kick).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickEvent {
    /// Center time, units of T1.
    pub time: f64,
    /// Integrated amplitude (a bare kick contributes K).
    pub strength: f64,
    /// Pulse duration, units of T1; 0 for a delta kick.
    pub width: f64,
}

/// Time-ordered kick sequence over the duration T = N1.
#[derive(Debug, Clone, PartialEq)]
pub struct KickSchedule {
    pub events: Vec<KickEvent>,
    /// Total duration T in units of T1 (equal to N1).
    pub total_duration: f64,
}

impl KickSchedule {
    pub fn total_strength(&self) -> f64 {
        self.events.iter().map(|e| e.strength).sum()
    }
}

/// Both trains of the two-frequency sequence: kicks of strength K at t = n
/// (n = 1..N1) and at t = (n + phi/2pi)/r (n = 1..N2). Coincident events
/// merge by strength addition; for finite `tau`, overlapping square pulses
/// are re-expressed as abutting piecewise-constant segments.
pub fn build_two_frequency_schedule(params: &SimParams) -> Result<KickSchedule> {
    params.validate()?;
    if params.mode != Mode::TwoTrain {
        return Err(Error::Schedule("two-frequency builder requires two-train mode".into()));
    }
    let n2 = params.n2_effective();
    let horizon = params.n1 as f64 + params.tau / 2.0 + COINCIDENCE_TOL;
    let mut raw: Vec<(f64, f64)> = Vec::with_capacity(params.n1 as usize + n2 as usize);
    for n in 1..=params.n1 {
        raw.push((n as f64, params.k));
    }
    let offset = params.phi / std::f64::consts::TAU;
    for n in 1..=n2 {
        let t = (n as f64 + offset) / params.r;
        // Second-train kicks landing past the end of the run are dropped:
        // the run stops at T = N1.
        if t <= horizon {
            raw.push((t, params.k));
        }
    }
    assemble(raw, params)
}

/// Single modulated train: strength K*(1 + A*cos(2*pi*r*n)) at t = n,
/// zero-strength events dropped.
pub fn build_modulated_schedule(params: &SimParams) -> Result<KickSchedule> {
    params.validate()?;
    if params.mode != Mode::Modulated {
        return Err(Error::Schedule("modulated builder requires modulated mode".into()));
    }
    let mut raw = Vec::with_capacity(params.n1 as usize);
    for n in 1..=params.n1 {
        let s = params.k * (1.0 + params.a * (std::f64::consts::TAU * params.r * n as f64).cos());
        if s > 1e-12 * params.k.max(1.0) {
            raw.push((n as f64, s));
        }
    }
    assemble(raw, params)
}

/// Dispatch on `params.mode`.
pub fn build_schedule(params: &SimParams) -> Result<KickSchedule> {
    match params.mode {
        Mode::TwoTrain => build_two_frequency_schedule(params),
        Mode::Modulated => build_modulated_schedule(params),
    }
}

/// Sort, merge coincidences, handle square-pulse overlap, validate.
fn assemble(mut raw: Vec<(f64, f64)>, params: &SimParams) -> Result<KickSchedule> {
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Coincidence merge: same-shape potentials commute, so summing
    // strengths at one time point is exact. The earlier time wins.
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for (t, s) in raw {
        match merged.last_mut() {
            Some(last) if t - last.0 <= COINCIDENCE_TOL => last.1 += s,
            _ => merged.push((t, s)),
        }
    }
    merged.retain(|&(_, s)| s > 0.0);

    let tau = params.tau;
    let events = if tau == 0.0 {
        merged
            .iter()
            .map(|&(time, strength)| KickEvent { time, strength, width: 0.0 })
            .collect()
    } else {
        segment_pulses(&merged, tau, params.strict_overlap)?
    };

    for pair in events.windows(2) {
        debug_assert!(pair[1].time - pair[0].time > COINCIDENCE_TOL);
    }
    Ok(KickSchedule { events, total_duration: params.n1 as f64 })
}

/// Expand (time, strength) centers into square pulses of duration `tau`.
/// Disjoint pulses pass through unchanged; pulses whose supports overlap
/// become piecewise-constant segments with summed amplitude on the overlap
/// (intensities add), preserving every pulse's integral.
fn segment_pulses(centers: &[(f64, f64)], tau: f64, strict: bool) -> Result<Vec<KickEvent>> {
    let mut events: Vec<KickEvent> = Vec::with_capacity(centers.len());
    let mut group: Vec<(f64, f64)> = Vec::new();
    let flush = |group: &mut Vec<(f64, f64)>, events: &mut Vec<KickEvent>| {
        if group.len() == 1 {
            let (time, strength) = group[0];
            events.push(KickEvent { time, strength, width: tau });
        } else if group.len() > 1 {
            emit_segments(group, tau, events);
        }
        group.clear();
    };
    for &(t, s) in centers {
        if let Some(&(prev, _)) = group.last() {
            if t - prev < tau {
                if strict {
                    return Err(Error::PulseOverlap { time: t, width: tau, gap: t - prev });
                }
                group.push((t, s));
                continue;
            }
            flush(&mut group, &mut events);
        }
        group.push((t, s));
    }
    flush(&mut group, &mut events);
    Ok(events)
}

/// Piecewise-constant decomposition of one connected overlap group.
fn emit_segments(group: &[(f64, f64)], tau: f64, events: &mut Vec<KickEvent>) {
    let mut edges: Vec<f64> = Vec::with_capacity(group.len() * 2);
    for &(t, _) in group {
        edges.push(t - tau / 2.0);
        edges.push(t + tau / 2.0);
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= COINCIDENCE_TOL);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        if len <= COINCIDENCE_TOL {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let amplitude: f64 = group
            .iter()
            .filter(|&&(t, _)| mid > t - tau / 2.0 && mid < t + tau / 2.0)
            .map(|&(_, s)| s / tau)
            .sum();
        if amplitude > 0.0 {
            events.push(KickEvent { time: mid, strength: amplitude * len, width: len });
        }
    }
}

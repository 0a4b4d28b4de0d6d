//! Spectral split-operator propagation of a momentum-ladder wavefunction
//! through a kick schedule, plus the classical standard-map Monte Carlo used
//! as the diffusive contrast.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::schedule::KickSchedule;

/// Edge fraction of the ladder watched by the aliasing guard (each side).
pub const EDGE_FRACTION: f64 = 0.05;
/// Maximum edge population tolerated at an observation time.
pub const EDGE_TOL: f64 = 1e-8;
/// Minimum number of split-operator substeps for a square pulse.
pub const SUBSTEP_FLOOR: usize = 20;

/// Wavefunction on the discrete momentum ladder P_m = (m - M/2 + beta) * hbar_eff
/// for one conserved quasi-momentum beta.
#[derive(Debug, Clone)]
pub struct MomentumLadderState {
    pub beta: f64,
    pub hbar_eff: f64,
    pub amps: Vec<Complex64>,
}

impl MomentumLadderState {
    /// Plane wave at ladder offset `m0` (0 = ladder center).
    pub fn plane_wave(grid_size: usize, beta: f64, hbar_eff: f64, m0: i64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); grid_size];
        let idx = (grid_size as i64 / 2 + m0).rem_euclid(grid_size as i64) as usize;
        amps[idx] = Complex64::new(1.0, 0.0);
        MomentumLadderState { beta, hbar_eff, amps }
    }

    pub fn grid_size(&self) -> usize {
        self.amps.len()
    }

    /// Momentum of ladder index `m` in reduced units.
    pub fn momentum(&self, m: usize) -> f64 {
        (m as f64 - (self.amps.len() / 2) as f64 + self.beta) * self.hbar_eff
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability in the outer `EDGE_FRACTION` of indices on each side.
    pub fn edge_population(&self) -> f64 {
        let m = self.amps.len();
        let k = ((m as f64 * EDGE_FRACTION) as usize).max(1);
        let lo: f64 = self.amps[..k].iter().map(|a| a.norm_sqr()).sum();
        let hi: f64 = self.amps[m - k..].iter().map(|a| a.norm_sqr()).sum();
        lo + hi
    }

    pub fn mean_p2(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(m, a)| {
                let p = self.momentum(m);
                p * p * a.norm_sqr()
            })
            .sum()
    }
}

/// Cached FFT plans plus scratch for one grid size; the propagation kernel.
pub struct Propagator {
    grid_size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    cos_theta: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid_size: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid_size);
        let inv = planner.plan_fft_inverse(grid_size);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let cos_theta = (0..grid_size)
            .map(|j| (std::f64::consts::TAU * j as f64 / grid_size as f64).cos())
            .collect();
        Propagator { grid_size, fwd, inv, cos_theta, scratch: vec![Complex64::default(); scratch_len] }
    }

    /// Free evolution: amps[m] *= exp(-i P_m^2 dt / (2 hbar)).
    pub fn free_propagate(&mut self, state: &mut MomentumLadderState, dt: f64) {
        debug_assert!(dt >= 0.0);
        if dt == 0.0 {
            return;
        }
        let half = (state.amps.len() / 2) as f64;
        let c = dt / (2.0 * state.hbar_eff);
        for (m, a) in state.amps.iter_mut().enumerate() {
            let p = (m as f64 - half + state.beta) * state.hbar_eff;
            let phase = -c * p * p;
            *a *= Complex64::from_polar(1.0, phase);
        }
    }

    /// Instantaneous kick: multiply by exp(-i s cos(theta) / hbar) in the
    /// angle representation.
    ///
    /// The angle-grid wavefunction is psi(theta_j) = sum_m c_m e^{i m theta_j}
    /// (an unnormalized inverse DFT); the constant index offset of the ladder
    /// commutes with any multiplication diagonal in theta, so plain DFT
    /// indexing is exact here.
    pub fn apply_delta_kick(&mut self, state: &mut MomentumLadderState, strength: f64) {
        debug_assert!(strength >= 0.0);
        debug_assert_eq!(state.amps.len(), self.grid_size);
        if strength == 0.0 {
            return;
        }
        let a = strength / state.hbar_eff;
        self.inv.process_with_scratch(&mut state.amps, &mut self.scratch);
        for (j, amp) in state.amps.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, -a * self.cos_theta[j]);
        }
        self.fwd.process_with_scratch(&mut state.amps, &mut self.scratch);
        let scale = 1.0 / self.grid_size as f64;
        for amp in state.amps.iter_mut() {
            *amp *= scale;
        }
    }

    /// Square pulse of duration `width` and integrated strength `strength`:
    /// symmetric (second-order) split-operator evolution of
    /// H = P^2/2 + (strength/width) cos(theta) over the pulse.
    pub fn apply_square_pulse(
        &mut self,
        state: &mut MomentumLadderState,
        strength: f64,
        width: f64,
        substeps: usize,
    ) -> Result<()> {
        debug_assert!(width > 0.0);
        let floor = substep_floor(strength, state.hbar_eff);
        if substeps < floor {
            return Err(Error::SubstepFloor { got: substeps, floor });
        }
        let dt = width / substeps as f64;
        let ds = strength / substeps as f64;
        self.free_propagate(state, dt / 2.0);
        for step in 0..substeps {
            self.apply_delta_kick(state, ds);
            let tail = if step + 1 == substeps { dt / 2.0 } else { dt };
            self.free_propagate(state, tail);
        }
        Ok(())
    }

    /// Walk a schedule, alternating free propagation with kicks/pulses, and
    /// snapshot the state at each requested time. A record time that falls
    /// inside a pulse support yields the state immediately after that pulse.
    /// Returns `(time, state)` pairs in record order.
    pub fn evolve_schedule(
        &mut self,
        state: &mut MomentumLadderState,
        schedule: &KickSchedule,
        substeps: usize,
        record: &[f64],
    ) -> Result<Vec<(f64, MomentumLadderState)>> {
        let mut times: Vec<f64> = record.to_vec();
        times.sort_by(f64::total_cmp);
        let mut out = Vec::with_capacity(times.len());
        let mut ri = 0;
        let mut t = 0.0;

        let mut snapshot = |state: &MomentumLadderState, at: f64| -> Result<()> {
            let edge = state.edge_population();
            if edge >= EDGE_TOL {
                return Err(Error::AliasingGuard {
                    time: at,
                    edge,
                    grid_size: state.amps.len(),
                });
            }
            out.push((at, state.clone()));
            Ok(())
        };

        for ev in &schedule.events {
            let start = ev.time - ev.width / 2.0;
            let end = ev.time + ev.width / 2.0;
            // records strictly before the pulse begins
            while ri < times.len() && times[ri] < start - 1e-12 {
                self.free_propagate(state, times[ri] - t);
                t = times[ri];
                snapshot(state, t)?;
                ri += 1;
            }
            self.free_propagate(state, (start - t).max(0.0));
            if ev.width == 0.0 {
                self.apply_delta_kick(state, ev.strength);
            } else {
                self.apply_square_pulse(state, ev.strength, ev.width, substeps)?;
            }
            t = end;
            // records inside the support (or exactly at its end)
            while ri < times.len() && times[ri] <= end + 1e-12 {
                snapshot(state, times[ri])?;
                ri += 1;
            }
        }
        while ri < times.len() {
            let target = times[ri].max(t);
            self.free_propagate(state, target - t);
            t = target;
            snapshot(state, times[ri])?;
            ri += 1;
        }
        Ok(out)
    }
}

/// Substep floor for a pulse of the given integrated strength.
pub fn substep_floor(strength: f64, hbar_eff: f64) -> usize {
    SUBSTEP_FLOOR.max((0.1 * strength / hbar_eff).ceil() as usize)
}

/// Ensemble mean squared momentum after each kick of the classical standard
/// map P <- P + K sin(theta), theta <- theta + P, starting from uniform
/// random angles at P = 0. Batched so the result is identical for any worker
/// count: batch `b` draws from its own counter-based stream.
pub fn classical_diffusion(
    k: f64,
    n_kicks: usize,
    ensemble: usize,
    seed: u64,
    policy: crate::exec::ExecPolicy,
) -> Vec<f64> {
    const BATCH: usize = 1024;
    let n_batches = ensemble.div_ceil(BATCH);
    let sums = policy.map_indexed(n_batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BATCH.min(ensemble - b * BATCH);
        let mut p2 = vec![0.0f64; n_kicks];
        for _ in 0..count {
            let mut theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut p: f64 = 0.0;
            for slot in p2.iter_mut() {
                p += k * theta.sin();
                theta = (theta + p).rem_euclid(std::f64::consts::TAU);
                *slot += p * p;
            }
        }
        p2
    });
    let mut total = vec![0.0f64; n_kicks];
    for batch in &sums {
        for (t, v) in total.iter_mut().zip(batch) {
            *t += v;
        }
    }
    for t in total.iter_mut() {
        *t /= ensemble as f64;
    }
    total
}

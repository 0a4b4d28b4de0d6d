//! Incoherent atom-cloud ensemble: stratified quasi-momentum samples crossed
//! with a Gaussian-weighted set of initial ladder sites, evolved
//! independently and reduced in fixed member order.

use num_complex::Complex64;

use crate::dynamics::{MomentumLadderState, Propagator, substep_floor};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::schedule::{KickSchedule, SimParams};

/// Relative weight below which an initial ladder site is dropped.
const WEIGHT_CUTOFF: f64 = 1e-6;
/// Hard ceiling for the aliasing-guard grid-doubling retry.
pub const MAX_GRID: usize = 1 << 16;

/// The incoherent ensemble: which (beta, initial site) members to run and
/// with what statistical weight.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    /// Stratified quasi-momenta in [0, 1).
    pub betas: Vec<f64>,
    /// Initial ladder offsets with normalized Gaussian weights.
    pub initial_sites: Vec<(i64, f64)>,
}

impl EnsembleSpec {
    /// Stratified betas (i + 1/2)/n and sites weighted by
    /// exp(-(m hbar)^2 / (2 sigma_P^2)), cut off at relative weight 1e-6.
    /// No randomness: two runs with equal params are identical.
    pub fn from_params(params: &SimParams) -> Self {
        let n = params.beta_samples;
        let betas = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let mut initial_sites = vec![(0i64, 1.0f64)];
        if params.sigma_p > 0.0 {
            let mut m = 1i64;
            loop {
                let p = m as f64 * params.hbar_eff;
                let w = (-p * p / (2.0 * params.sigma_p * params.sigma_p)).exp();
                if w < WEIGHT_CUTOFF {
                    break;
                }
                initial_sites.push((m, w));
                initial_sites.push((-m, w));
                m += 1;
            }
        }
        let total: f64 = initial_sites.iter().map(|s| s.1).sum();
        for s in initial_sites.iter_mut() {
            s.1 /= total;
        }
        initial_sites.sort_by_key(|s| s.0);
        EnsembleSpec { betas, initial_sites }
    }

    pub fn member_count(&self) -> usize {
        self.betas.len() * self.initial_sites.len()
    }

    /// (beta, site, weight) of member `i`; members are ordered beta-major.
    pub fn member(&self, i: usize) -> (f64, i64, f64) {
        let ns = self.initial_sites.len();
        let beta = self.betas[i / ns];
        let (site, w) = self.initial_sites[i % ns];
        (beta, site, w / self.betas.len() as f64)
    }
}

/// Weighted per-member payload produced by one evolution.
struct MemberResult {
    weight: f64,
    /// (mean P^2, window population) per record time.
    traj: Vec<(f64, f64)>,
    /// |amps|^2 of the final state.
    final_prob: Vec<f64>,
    beta: f64,
    /// window population of the final state (for scatter estimates)
    p0_final: f64,
}

/// Ensemble-reduced observables of one schedule run.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub record_times: Vec<f64>,
    /// Ensemble <P^2> at each record time.
    pub mean_p2: Vec<f64>,
    /// Ensemble window population at each record time.
    pub p0: Vec<f64>,
    /// Standard error of the final window population over members.
    pub p0_se: f64,
    /// Final probability per (member-shared) ladder grid, with the members'
    /// beta offsets retained for distribution building: (beta, weight, probs).
    pub final_probs: Vec<(f64, f64, Vec<f64>)>,
    pub hbar_eff: f64,
    /// Grid size actually used (after any aliasing-guard doubling).
    pub grid_size: usize,
}

/// Momentum window for the zero-momentum population; errors when the window
/// cannot resolve any ladder site of the ensemble.
pub fn window_check(params: &SimParams, delta_p: f64) -> Result<()> {
    let resolution = params.hbar_eff / params.beta_samples as f64;
    if delta_p <= 0.0 || delta_p < resolution {
        return Err(Error::WindowTooNarrow { window: delta_p, resolution });
    }
    Ok(())
}

/// Evolve every ensemble member through `schedule`, recording at
/// `record_times`, and reduce member observables in index order (the result
/// is bit-identical for any `policy`). Trips of the aliasing guard double the
/// grid and retry up to `MAX_GRID`.
pub fn run_ensemble(
    params: &SimParams,
    schedule: &KickSchedule,
    record_times: &[f64],
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<EnsembleRun> {
    params.validate()?;
    window_check(params, delta_p)?;
    let spec = EnsembleSpec::from_params(params);
    let mut grid = params.grid_size;
    loop {
        match run_with_grid(params, &spec, schedule, record_times, delta_p, policy, grid) {
            Err(Error::AliasingGuard { .. }) if grid < MAX_GRID => {
                grid *= 2;
            }
            other => return other,
        }
    }
}

fn run_with_grid(
    params: &SimParams,
    spec: &EnsembleSpec,
    schedule: &KickSchedule,
    record_times: &[f64],
    delta_p: f64,
    policy: ExecPolicy,
    grid: usize,
) -> Result<EnsembleRun> {
    let substeps = substep_floor(params.k.max(schedule.events.iter().fold(0.0, |m, e| e.strength.max(m))), params.hbar_eff);
    let n = spec.member_count();
    let results: Vec<Result<MemberResult>> = policy.map_indexed(n, |i| {
        let (beta, site, weight) = spec.member(i);
        let mut state = MomentumLadderState::plane_wave(grid, beta, params.hbar_eff, site);
        let mut prop = Propagator::new(grid);
        let snaps = prop.evolve_schedule(&mut state, schedule, substeps, record_times)?;
        let traj: Vec<(f64, f64)> = snaps
            .iter()
            .map(|(_, st)| (st.mean_p2(), window_population(st, delta_p)))
            .collect();
        let final_state = snaps
            .last()
            .map(|(_, st)| st.clone())
            .unwrap_or(state);
        let p0_final = window_population(&final_state, delta_p);
        Ok(MemberResult {
            weight,
            traj,
            final_prob: final_state.amps.iter().map(|a| a.norm_sqr()).collect(),
            beta,
            p0_final,
        })
    });

    let mut times: Vec<f64> = record_times.to_vec();
    times.sort_by(f64::total_cmp);
    let nt = times.len();
    let mut mean_p2 = vec![0.0; nt];
    let mut p0 = vec![0.0; nt];
    let mut final_probs = Vec::with_capacity(n);
    let mut acc_p0 = 0.0;
    let mut acc_p0sq = 0.0;
    let mut acc_w = 0.0;
    for res in results {
        let m = res?;
        for (k, &(p2, w0)) in m.traj.iter().enumerate() {
            mean_p2[k] += m.weight * p2;
            p0[k] += m.weight * w0;
        }
        acc_p0 += m.weight * m.p0_final;
        acc_p0sq += m.weight * m.p0_final * m.p0_final;
        acc_w += m.weight;
        final_probs.push((m.beta, m.weight, m.final_prob));
    }
    // weighted scatter of the final window population over members
    let mean = acc_p0 / acc_w;
    let var = (acc_p0sq / acc_w - mean * mean).max(0.0);
    let p0_se = (var / n as f64).sqrt();
    Ok(EnsembleRun {
        record_times: times,
        mean_p2,
        p0,
        p0_se,
        final_probs,
        hbar_eff: params.hbar_eff,
        grid_size: grid,
    })
}

/// Probability within |P| <= delta_p / 2 for one state.
pub fn window_population(state: &MomentumLadderState, delta_p: f64) -> f64 {
    match crate::observables::window_index_range(
        state.amps.len(),
        state.beta,
        state.hbar_eff,
        delta_p,
    ) {
        Some((lo, hi)) => state.amps[lo..=hi].iter().map(|a| a.norm_sqr()).sum(),
        None => 0.0,
    }
}

/// Convenience: p0 and <P^2> after the final kick only.
pub fn run_final(
    params: &SimParams,
    schedule: &KickSchedule,
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<(f64, f64, f64)> {
    let run = run_ensemble(params, schedule, &[schedule.total_duration], delta_p, policy)?;
    Ok((run.p0[run.p0.len() - 1], run.p0_se, run.mean_p2[run.mean_p2.len() - 1]))
}

/// Complex helper retained for tests that need raw final states.
pub fn amps_to_probs(amps: &[Complex64]) -> Vec<f64> {
    amps.iter().map(|a| a.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_two_frequency_schedule, Mode};
    use approx::assert_abs_diff_eq;

    fn params() -> SimParams {
        SimParams {
            k: 8.0,
            hbar_eff: 2.89,
            r: 1.0,
            n1: 10,
            n2: Some(0),
            grid_size: 256,
            beta_samples: 8,
            sigma_p: 0.0,
            mode: Mode::TwoTrain,
            ..Default::default()
        }
    }

    #[test]
    fn spec_is_deterministic_and_normalized() {
        let p = SimParams { sigma_p: 1.0, hbar_eff: 1.4, ..params() };
        let a = EnsembleSpec::from_params(&p);
        let b = EnsembleSpec::from_params(&p);
        assert_eq!(a.betas, b.betas);
        assert_eq!(a.initial_sites, b.initial_sites);
        let total: f64 = (0..a.member_count()).map(|i| a.member(i).2).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // sigma_p = 1, hbar = 1.4: sites out to |m| = 3 survive the cutoff
        assert_eq!(a.initial_sites.len(), 7);
    }

    #[test]
    fn sigma_zero_keeps_single_site() {
        let spec = EnsembleSpec::from_params(&params());
        assert_eq!(spec.initial_sites, vec![(0, 1.0)]);
        assert_eq!(spec.member_count(), 8);
    }

    #[test]
    fn window_population_counts_correct_sites() {
        // beta = 0.5, hbar = 2: P at sites = ..., -1, 1, 3 ... relative to
        // the window |P| <= 1 only the P = 1 and P = -1 sites fall inside.
        let mut st = MomentumLadderState::plane_wave(64, 0.5, 2.0, 0);
        st.amps[32] = Complex64::new(0.0, 0.0);
        st.amps[31] = Complex64::new(0.5f64.sqrt(), 0.0); // P = -1
        st.amps[33] = Complex64::new(0.5f64.sqrt(), 0.0); // P = +3? no: (1+0.5)*2 = 3
        let got = window_population(&st, 2.0);
        assert_abs_diff_eq!(got, 0.5, epsilon = 1e-12);
        // widen to |P| <= 3: both land inside
        let got = window_population(&st, 6.0);
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn run_reduction_is_policy_invariant() {
        let p = params();
        let sched = build_two_frequency_schedule(&p).unwrap();
        let a = run_ensemble(&p, &sched, &[5.0, 10.0], 1.0, ExecPolicy::Sequential).unwrap();
        let b = run_ensemble(&p, &sched, &[5.0, 10.0], 1.0, ExecPolicy::Parallel { threads: 3 })
            .unwrap();
        assert_eq!(a.mean_p2, b.mean_p2);
        assert_eq!(a.p0, b.p0);
        assert_eq!(a.p0_se, b.p0_se);
    }

    #[test]
    fn grid_doubles_when_guard_trips() {
        // Deliberately undersized grid: K = 8 over 10 kicks spreads far
        // beyond 64 sites at hbar = 2.89/4.
        let p = SimParams { grid_size: 64, hbar_eff: 0.7225, ..params() };
        let sched = build_two_frequency_schedule(&p).unwrap();
        let run = run_ensemble(&p, &sched, &[10.0], 1.0, ExecPolicy::Sequential).unwrap();
        assert!(run.grid_size > 64, "grid kept at {}", run.grid_size);
        let total: f64 = run.final_probs.iter().map(|(_, w, pr)| {
            w * pr.iter().sum::<f64>()
        }).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn window_narrower_than_resolution_errors() {
        let p = params(); // hbar 2.89, 8 betas -> resolution 0.36
        let sched = build_two_frequency_schedule(&p).unwrap();
        let res = run_ensemble(&p, &sched, &[10.0], 0.1, ExecPolicy::Sequential);
        assert!(matches!(res, Err(Error::WindowTooNarrow { .. })));
    }

    #[test]
    fn k_zero_population_stays_home() {
        let p = SimParams { k: 0.0, ..params() };
        let sched = build_two_frequency_schedule(&p).unwrap();
        let run = run_ensemble(&p, &sched, &[10.0], 2.89, ExecPolicy::Sequential).unwrap();
        // every member keeps its initial site at P = beta * hbar; the
        // half-spacing window |P| <= hbar/2 contains it only for beta <= 1/2,
        // i.e. for half of the stratified samples
        assert_abs_diff_eq!(run.p0[0], 0.5, epsilon = 1e-12);
        let expect: f64 = {
            let spec = EnsembleSpec::from_params(&p);
            (0..spec.member_count())
                .map(|i| {
                    let (beta, _, w) = spec.member(i);
                    let pm = beta * p.hbar_eff;
                    w * pm * pm
                })
                .sum()
        };
        assert_abs_diff_eq!(run.mean_p2[0], expect, epsilon = 1e-9);
    }
}

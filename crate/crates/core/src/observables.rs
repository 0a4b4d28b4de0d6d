//! Measured quantities: momentum distributions, zero-momentum population,
//! kinetic energy, localization length and localization time.

use crate::dynamics::MomentumLadderState;
use crate::ensemble::EnsembleRun;
use crate::error::{Error, Result};

/// Probability below which a bin is ignored by the exponential fit.
pub const PROB_FLOOR: f64 = 1e-8;

/// Ensemble-averaged momentum distribution on a uniform P grid.
#[derive(Debug, Clone)]
pub struct MomentumDistribution {
    pub bin_width: f64,
    /// Bin centers (integer multiples of `bin_width`).
    pub p: Vec<f64>,
    /// Probability mass per bin; sums to 1 within 1e-8 for normalized input.
    pub prob: Vec<f64>,
}

impl MomentumDistribution {
    pub fn normalization(&self) -> f64 {
        self.prob.iter().sum()
    }

    /// Second moment <P^2> of the binned distribution.
    pub fn second_moment(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.prob)
            .map(|(p, q)| p * p * q)
            .sum()
    }
}

/// Index range [lo, hi] of ladder sites with |(m - len/2 + beta) hbar| <=
/// delta_p / 2, or None when the window contains no site of this ladder.
pub fn window_index_range(len: usize, beta: f64, hbar: f64, delta_p: f64) -> Option<(usize, usize)> {
    let half = delta_p / 2.0;
    let center = (len / 2) as f64;
    let lo = (-half / hbar - beta + center).ceil().max(0.0) as usize;
    let hi = (half / hbar - beta + center).floor() as i64;
    let hi = hi.min(len as i64 - 1);
    if hi < lo as i64 {
        None
    } else {
        Some((lo, hi as usize))
    }
}

fn bin_samples<I>(samples: I, bin_width: f64) -> MomentumDistribution
where
    I: Iterator<Item = (f64, f64)>,
{
    use std::collections::BTreeMap;
    let mut mass: BTreeMap<i64, f64> = BTreeMap::new();
    for (p, w) in samples {
        if w == 0.0 {
            continue;
        }
        let idx = (p / bin_width).round() as i64;
        *mass.entry(idx).or_insert(0.0) += w;
    }
    let (lo, hi) = match (mass.keys().next(), mass.keys().next_back()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    };
    let mut p = Vec::with_capacity((hi - lo + 1) as usize);
    let mut prob = Vec::with_capacity((hi - lo + 1) as usize);
    for idx in lo..=hi {
        p.push(idx as f64 * bin_width);
        prob.push(mass.get(&idx).copied().unwrap_or(0.0));
    }
    MomentumDistribution { bin_width, p, prob }
}

fn check_bin_width(bin_width: f64, hbar: f64) -> Result<()> {
    if !(bin_width > 0.0) || bin_width < hbar / 2.0 {
        return Err(Error::InvalidParam {
            field: "bin_width",
            reason: format!("must be at least half the ladder spacing {hbar}, got {bin_width}"),
        });
    }
    Ok(())
}

/// Incoherent ensemble average of the final momentum distributions,
/// histogrammed with the given bin width (>= half the ladder spacing).
pub fn momentum_distribution(run: &EnsembleRun, bin_width: f64) -> Result<MomentumDistribution> {
    check_bin_width(bin_width, run.hbar_eff)?;
    if run.final_probs.is_empty() {
        return Err(Error::Observable("empty ensemble".into()));
    }
    let hbar = run.hbar_eff;
    let samples = run.final_probs.iter().flat_map(|(beta, weight, probs)| {
        let center = (probs.len() / 2) as f64;
        probs
            .iter()
            .enumerate()
            .map(move |(m, q)| ((m as f64 - center + beta) * hbar, weight * q))
    });
    Ok(bin_samples(samples, bin_width))
}

/// Same histogram built directly from weighted states (weights should sum
/// to 1); all states must share hbar_eff.
pub fn distribution_from_states(
    states: &[(f64, MomentumLadderState)],
    bin_width: f64,
) -> Result<MomentumDistribution> {
    let hbar = match states.first() {
        Some((_, st)) => st.hbar_eff,
        None => return Err(Error::Observable("empty ensemble".into())),
    };
    if states.iter().any(|(_, st)| st.hbar_eff != hbar) {
        return Err(Error::InvalidParam {
            field: "hbar_eff",
            reason: "states mix different ladder scales".into(),
        });
    }
    check_bin_width(bin_width, hbar)?;
    let samples = states.iter().flat_map(|(weight, st)| {
        (0..st.amps.len()).map(move |m| (st.momentum(m), weight * st.amps[m].norm_sqr()))
    });
    Ok(bin_samples(samples, bin_width))
}

/// Total probability within |P| <= delta_p / 2, ensemble-averaged over the
/// stored final states. Models a rectangular velocity-selective probe.
pub fn zero_momentum_population(run: &EnsembleRun, delta_p: f64) -> Result<f64> {
    let mut betas: Vec<f64> = run.final_probs.iter().map(|(b, _, _)| *b).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let n_beta = betas.len().max(1);
    let resolution = run.hbar_eff / n_beta as f64;
    if !(delta_p > 0.0) || delta_p < resolution {
        return Err(Error::WindowTooNarrow { window: delta_p, resolution });
    }
    let mut total = 0.0;
    for (beta, weight, probs) in &run.final_probs {
        if let Some((lo, hi)) = window_index_range(probs.len(), *beta, run.hbar_eff, delta_p) {
            total += weight * probs[lo..=hi].iter().sum::<f64>();
        }
    }
    Ok(total)
}

/// Ensemble <P^2>/2 at the last recorded time.
pub fn mean_kinetic_energy(run: &EnsembleRun) -> Result<f64> {
    match run.mean_p2.last() {
        Some(p2) => Ok(p2 / 2.0),
        None => Err(Error::Observable("run recorded no times".into())),
    }
}

/// <P^2>/2 of a single state.
pub fn state_kinetic_energy(state: &MomentumLadderState) -> f64 {
    state.mean_p2() / 2.0
}

/// Result of the exponential-profile fit p(P) ~ exp(-|P|/L).
#[derive(Debug, Clone, Copy)]
pub struct LocalizationFit {
    /// Localization length in reduced momentum units.
    pub length: f64,
    /// R^2 of the log-linear fit; near 1 for a true exponential profile.
    pub r_squared: f64,
    /// Number of bins used.
    pub points: usize,
}

/// Least-squares fit of log p vs |P| over bins above `PROB_FLOOR`. The
/// central bin is excluded: it often carries a coherent peak that biases L.
pub fn fit_localization_length(dist: &MomentumDistribution) -> Result<LocalizationFit> {
    let half_bin = dist.bin_width / 2.0;
    let pts: Vec<(f64, f64)> = dist
        .p
        .iter()
        .zip(&dist.prob)
        .filter(|(p, q)| **q > PROB_FLOOR && p.abs() > half_bin)
        .map(|(p, q)| (p.abs(), q.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Observable(format!(
            "exponential fit needs at least 10 usable bins, found {}",
            pts.len()
        )));
    }
    let (_, slope, r2) = linear_fit(&pts);
    if !(slope < 0.0) {
        return Err(Error::Observable(format!(
            "distribution is not localized: log-profile slope {slope:.3e} >= 0"
        )));
    }
    Ok(LocalizationFit { length: -1.0 / slope, r_squared: r2, points: pts.len() })
}

/// Kick count at which the early-time linear growth of <P^2> meets the
/// late-time plateau. `series` is (kick, <P^2>) sorted by kick; needs >= 20
/// samples. Errors when the late slope exceeds 20% of the early slope.
pub fn estimate_localization_time(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 20 {
        return Err(Error::Observable(format!(
            "localization-time estimate needs at least 20 samples, got {}",
            series.len()
        )));
    }
    let k = (series.len() / 5).max(2);
    let early = &series[..k];
    let late = &series[series.len() - k..];
    let (intercept, early_slope, _) = linear_fit(early);
    let (_, late_slope, _) = linear_fit(late);
    if !(early_slope > 0.0) {
        return Err(Error::Observable(format!(
            "no initial growth: early slope {early_slope:.3e}"
        )));
    }
    if late_slope > 0.2 * early_slope {
        return Err(Error::NotLocalized { early: early_slope, late: late_slope });
    }
    let plateau = late.iter().map(|(_, y)| y).sum::<f64>() / k as f64;
    let n_l = (plateau - intercept) / early_slope;
    if !n_l.is_finite() || n_l <= 0.0 {
        return Err(Error::Observable(format!("degenerate crossing at {n_l}")));
    }
    Ok(n_l)
}

/// Plain least squares y = a + b x; returns (a, b, R^2).
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - my) * (y - my)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (intercept, slope, r2)
}

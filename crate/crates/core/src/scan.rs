//! Resonance curves p(0) vs the frequency ratio r, FWHM extraction with
//! significance gating, adaptive two-pass scanning, width-vs-N scaling, the
//! phase-advance width prediction, and kick-strength inhomogeneity
//! averaging.

use crate::ensemble::run_final;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::observables::linear_fit;
use crate::schedule::{build_schedule, Mode, SimParams};
use crate::spectrum::f_half_curve;

/// p(0) vs r with per-point ensemble standard errors.
#[derive(Debug, Clone)]
pub struct ResonanceCurve {
    pub r: Vec<f64>,
    pub p0: Vec<f64>,
    pub se: Vec<f64>,
    /// Parameter snapshot the curve was produced with (r field is per-point).
    pub params: SimParams,
    /// Probe window the p0 values were measured with.
    pub delta_p: f64,
}

/// FWHM extraction result. `w` is the width in units of the Fourier limit
/// (w = delta_r * n1; a Fourier-limited line has w of order 1), and
/// `subfourier_factor` compares against the two-train spectral baseline
/// width for the same n1 and tau.
#[derive(Debug, Clone, Copy)]
pub struct WidthReport {
    pub delta_r: f64,
    /// Uncertainty on delta_r propagated from flank slopes and point errors.
    pub delta_r_err: f64,
    pub baseline: f64,
    pub peak: f64,
    pub peak_r: f64,
    pub w: f64,
    pub subfourier_factor: f64,
}

/// Evolve the ensemble once per grid ratio and collect the final
/// zero-momentum population. The quantum ensemble carries no randomness, so
/// curves are smooth in r by construction. Grid points are independent work
/// items dispatched through `policy` and reduced in grid order.
pub fn scan_resonance(
    params: &SimParams,
    r_grid: &[f64],
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<ResonanceCurve> {
    if r_grid.len() < 5 {
        return Err(Error::InvalidParam {
            field: "r_grid",
            reason: format!("need at least 5 scan points, got {}", r_grid.len()),
        });
    }
    if !r_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParam {
            field: "r_grid",
            reason: "scan grid must be strictly increasing".into(),
        });
    }
    let results: Vec<Result<(f64, f64)>> = policy.map_indexed(r_grid.len(), |i| {
        let p = SimParams { r: r_grid[i], ..params.clone() };
        p.validate().map_err(|e| with_r(e, r_grid[i]))?;
        let schedule = build_schedule(&p).map_err(|e| with_r(e, r_grid[i]))?;
        let (p0, se, _) = run_final(&p, &schedule, delta_p, policy).map_err(|e| with_r(e, r_grid[i]))?;
        Ok((p0, se))
    });
    let mut p0 = Vec::with_capacity(r_grid.len());
    let mut se = Vec::with_capacity(r_grid.len());
    for res in results {
        let (v, s) = res?;
        p0.push(v);
        se.push(s);
    }
    Ok(ResonanceCurve { r: r_grid.to_vec(), p0, se, params: params.clone(), delta_p })
}

/// Tag a propagated error with the grid ratio it occurred at.
fn with_r(e: Error, r: f64) -> Error {
    Error::AtRatio { r, source: Box::new(e) }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// FWHM of the curve's interior peak.
///
/// The baseline is the median of the outer 20% of points on each side; the
/// half level is (peak + baseline) / 2; each flank crossing is located by
/// linear interpolation between the first pair of samples straddling the
/// half level walking outward from the peak. `baseline_override` forces a
/// known baseline (used for the spectral curves, whose true floor is zero).
pub fn fwhm_with_baseline(curve: &ResonanceCurve, baseline_override: Option<f64>) -> Result<WidthReport> {
    let n = curve.r.len();
    if n < 5 || curve.p0.len() != n {
        return Err(Error::Fwhm(format!("curve has {n} points, need at least 5")));
    }
    let ipk = curve
        .p0
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let edge = (n / 5).max(1);
    if ipk < edge || ipk >= n - edge {
        return Err(Error::Fwhm(format!(
            "peak sits at the scan edge (index {ipk} of {n}); widen the range"
        )));
    }
    let peak = curve.p0[ipk];
    let baseline = match baseline_override {
        Some(b) => b,
        None => {
            let mut outer: Vec<f64> = curve.p0[..edge]
                .iter()
                .chain(&curve.p0[n - edge..])
                .cloned()
                .collect();
            median(&mut outer)
        }
    };
    let mut ses: Vec<f64> = curve.se.clone();
    let med_se = median(&mut ses);
    if med_se > 0.0 && peak - baseline < 5.0 * med_se {
        return Err(Error::Fwhm(format!(
            "peak contrast {:.3e} is below 5x the median standard error {:.3e}",
            peak - baseline,
            med_se
        )));
    }
    let half = 0.5 * (peak + baseline);
    let left = flank_crossing(curve, ipk, half, -1)?;
    let right = flank_crossing(curve, ipk, half, 1)?;
    let delta_r = right.0 - left.0;
    let delta_r_err = (left.1 * left.1 + right.1 * right.1).sqrt();
    let n1 = curve.params.n1;
    let subfourier_factor = f_half_width(n1, curve.params.tau)? / delta_r;
    Ok(WidthReport {
        delta_r,
        delta_r_err,
        baseline,
        peak,
        peak_r: curve.r[ipk],
        w: delta_r * n1 as f64,
        subfourier_factor,
    })
}

/// FWHM with the baseline estimated from the curve itself.
pub fn fwhm(curve: &ResonanceCurve) -> Result<WidthReport> {
    fwhm_with_baseline(curve, None)
}

/// Walk outward from the peak until the curve first drops through `half`;
/// return the interpolated crossing and its propagated uncertainty.
fn flank_crossing(curve: &ResonanceCurve, ipk: usize, half: f64, dir: i64) -> Result<(f64, f64)> {
    let n = curve.r.len() as i64;
    let mut i = ipk as i64;
    loop {
        let j = i + dir;
        if j < 0 || j >= n {
            let side = if dir < 0 { "left" } else { "right" };
            return Err(Error::Fwhm(format!(
                "{side} flank never crosses the half level; scan range too narrow"
            )));
        }
        let (yi, yj) = (curve.p0[i as usize], curve.p0[j as usize]);
        if yi >= half && yj < half {
            let (xi, xj) = (curve.r[i as usize], curve.r[j as usize]);
            let slope = (yj - yi) / (xj - xi);
            let x = xi + (half - yi) / slope;
            let se = 0.5 * (curve.se[i as usize] + curve.se[j as usize]);
            return Ok((x, se / slope.abs()));
        }
        i = j;
    }
}

/// FWHM of the spectral resolution baseline F_1/2(r) for a train of n1
/// kicks of width tau, with the true zero floor forced as baseline.
pub fn f_half_width(n1: u32, tau: f64) -> Result<f64> {
    let span = 2.5 / n1 as f64;
    let pts = 2000usize;
    let grid: Vec<f64> = (0..=pts)
        .map(|i| 1.0 - span + 2.0 * span * i as f64 / pts as f64)
        .collect();
    let params = SimParams { n1, tau, phi: 0.0, mode: Mode::TwoTrain, ..Default::default() };
    let curve = f_half_curve(&params, &grid)?;
    let shim = ResonanceCurve {
        r: curve.iter().map(|(r, _)| *r).collect(),
        p0: curve.iter().map(|(_, v)| *v).collect(),
        se: vec![0.0; curve.len()],
        params,
        delta_p: 0.0,
    };
    // the factor against itself is 1 by construction; avoid recursing
    let n = shim.r.len();
    let ipk = shim.p0.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
    if ipk == 0 || ipk == n - 1 {
        return Err(Error::Fwhm("baseline curve peaks at the grid edge".into()));
    }
    let half = 0.5 * shim.p0[ipk];
    let left = flank_crossing(&shim, ipk, half, -1)?;
    let right = flank_crossing(&shim, ipk, half, 1)?;
    Ok(right.0 - left.0)
}

/// Result of a two-pass adaptive scan.
#[derive(Debug, Clone)]
pub struct AdaptiveScan {
    pub coarse: ResonanceCurve,
    pub fine: ResonanceCurve,
    pub report: WidthReport,
}

/// Two-pass scan: a coarse pass over [center - span/2, center + span/2]
/// locates the peak, then a fine pass lays 40 points across 4x the coarse
/// FWHM. A coarse pass whose flanks never cross the half level is retried
/// with the span doubled, up to 4 attempts.
pub fn adaptive_scan(
    params: &SimParams,
    center: f64,
    span: f64,
    coarse_points: usize,
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<AdaptiveScan> {
    let coarse_points = coarse_points.max(9);
    let mut span = span;
    let mut last_err = None;
    for _attempt in 0..4 {
        let grid = positive_window(center, span, coarse_points);
        let coarse = scan_resonance(params, &grid, delta_p, policy)?;
        match fwhm(&coarse) {
            Ok(coarse_report) => {
                let fine_grid =
                    positive_window(coarse_report.peak_r, 4.0 * coarse_report.delta_r, 40);
                let fine = scan_resonance(params, &fine_grid, delta_p, policy)?;
                let report = fwhm(&fine)?;
                return Ok(AdaptiveScan { coarse, fine, report });
            }
            Err(e @ Error::Fwhm(_)) => {
                span *= 2.0;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Fwhm("adaptive scan failed".into())))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Phase-advance threshold prediction for the resolvable detuning.
///
/// Solves `p2 / (2 hbar) * n * (r-1)/r = 1`: returns the exact half-width
/// `q / (1 - q)` and its small-width approximation `q = 2 hbar / (p2 n)`.
/// Errors when the phase advance cannot reach 1 within the run (q >= 1).
pub fn phase_advance_width(p2: f64, n: u32, hbar_eff: f64) -> Result<(f64, f64)> {
    if !(p2 > 0.0) || n == 0 || !(hbar_eff > 0.0) {
        return Err(Error::InvalidParam {
            field: "phase_advance",
            reason: format!("need positive inputs, got p2 = {p2}, n = {n}, hbar = {hbar_eff}"),
        });
    }
    let q = 2.0 * hbar_eff / (p2 * n as f64);
    if q >= 1.0 {
        return Err(Error::Observable(format!(
            "phase advance stays below 1 over {n} kicks (<P^2> N = {:.3e} <= 2 hbar)",
            p2 * n as f64
        )));
    }
    Ok((q / (1.0 - q), q))
}

/// One resolved width in a width-vs-N series.
#[derive(Debug, Clone)]
pub struct WidthPoint {
    pub n1: u32,
    pub report: WidthReport,
    /// Local log-log slope of delta_r vs n1 (3-point least squares over the
    /// neighboring resolved points, one-sided at the ends).
    pub fit_slope_local: f64,
}

/// Width-vs-N series with skip-and-flag error policy.
#[derive(Debug, Clone)]
pub struct WidthVsN {
    pub points: Vec<WidthPoint>,
    /// (n1, reason) for scans that failed width extraction.
    pub skipped: Vec<(u32, String)>,
    /// Localization time of the r = 1 reference run, in kick periods.
    pub n_l: Option<f64>,
    /// <P^2> of the reference run at each requested n1 (the width seed).
    pub reference_p2: Vec<(u32, f64)>,
}

/// Scan the resonance width for each kick count in `n1_list`.
///
/// One r = 1 reference run at the largest n1 supplies (a) <P^2>(n) for the
/// phase-advance seed that sizes each coarse span and (b) the series the
/// localization time is estimated from. Each n1 then runs an adaptive
/// two-pass scan; failures are flagged and skipped.
pub fn width_vs_n(
    params: &SimParams,
    n1_list: &[u32],
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<WidthVsN> {
    if n1_list.is_empty() || !n1_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParam {
            field: "n1_list",
            reason: "kick counts must be non-empty and strictly increasing".into(),
        });
    }
    let n_max = *n1_list.last().unwrap();
    let reference = SimParams { r: 1.0, n1: n_max, ..params.clone() };
    let schedule = build_schedule(&reference)?;
    let times: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    let run = crate::ensemble::run_ensemble(&reference, &schedule, &times, delta_p, policy)?;
    let series: Vec<(f64, f64)> =
        run.record_times.iter().cloned().zip(run.mean_p2.iter().cloned()).collect();
    let n_l = crate::observables::estimate_localization_time(&series).ok();
    let p2_at = |n1: u32| series[(n1 - 1) as usize].1;

    let mut resolved: Vec<(u32, WidthReport)> = Vec::new();
    let mut skipped = Vec::new();
    let mut reference_p2 = Vec::new();
    for &n1 in n1_list {
        let p2 = p2_at(n1);
        reference_p2.push((n1, p2));
        let p = SimParams { n1, ..params.clone() };
        let span = match phase_advance_width(p2, n1, params.hbar_eff) {
            Ok((_, approx)) => (15.0 * approx).min(0.5),
            Err(_) => 0.5,
        };
        match adaptive_scan(&p, 1.0, span, 41, delta_p, policy) {
            Ok(scan) => resolved.push((n1, scan.report)),
            Err(e) if e.is_numerical_guard() => skipped.push((n1, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if resolved.is_empty() {
        return Err(Error::Fwhm("no width could be resolved at any kick count".into()));
    }
    // local log-log slopes over neighboring resolved points
    let logs: Vec<(f64, f64)> = resolved
        .iter()
        .map(|(n1, rep)| ((*n1 as f64).ln(), rep.delta_r.ln()))
        .collect();
    let points = resolved
        .iter()
        .enumerate()
        .map(|(i, (n1, report))| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(logs.len());
            let window = &logs[lo..hi];
            let slope = if window.len() >= 2 { linear_fit(window).1 } else { f64::NAN };
            WidthPoint { n1: *n1, report: *report, fit_slope_local: slope }
        })
        .collect();
    Ok(WidthVsN { points, skipped, n_l, reference_p2 })
}

/// Weighted kick-strength distribution across the atom cloud.
#[derive(Debug, Clone)]
pub struct KDistribution {
    /// (strength, weight) nodes; weights sum to 1.
    pub nodes: Vec<(f64, f64)>,
}

impl KDistribution {
    /// All weight at a single strength.
    pub fn degenerate(k: f64) -> Self {
        KDistribution { nodes: vec![(k, 1.0)] }
    }

    /// Strengths seen by a Gaussian cloud of transverse extent sigma inside
    /// a Gaussian beam of waist w = waist_ratio * sigma: K(rho) =
    /// k_peak exp(-2 rho^2 / w^2). In the squared-radius coordinate the
    /// cloud measure is exponential; the integral is discretized with
    /// 8-node Gauss-Legendre quadrature on [0, 6] mean lifetimes.
    pub fn gaussian_cloud(k_peak: f64, waist_ratio: f64) -> Self {
        // 8-point Gauss-Legendre abscissas/weights on [-1, 1]
        const GL: [(f64, f64); 8] = [
            (-0.9602898564975363, 0.1012285362903763),
            (-0.7966664774136267, 0.2223810344533745),
            (-0.5255324099163290, 0.3137066458778873),
            (-0.1834346424956498, 0.3626837833783620),
            (0.1834346424956498, 0.3626837833783620),
            (0.5255324099163290, 0.3137066458778873),
            (0.7966664774136267, 0.2223810344533745),
            (0.9602898564975363, 0.1012285362903763),
        ];
        let u_max = 6.0;
        let decay = 4.0 / (waist_ratio * waist_ratio);
        let mut nodes: Vec<(f64, f64)> = GL
            .iter()
            .map(|&(x, w)| {
                let u = 0.5 * u_max * (x + 1.0);
                let weight = w * 0.5 * u_max * (-u).exp();
                (k_peak * (-decay * u).exp(), weight)
            })
            .collect();
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        for node in nodes.iter_mut() {
            node.1 /= total;
        }
        nodes.reverse(); // ascending in strength
        KDistribution { nodes }
    }
}

/// Homogeneous and strength-averaged curves side by side.
#[derive(Debug, Clone)]
pub struct InhomogeneousScan {
    pub homogeneous: ResonanceCurve,
    pub broadened: ResonanceCurve,
}

/// Average per-strength resonance curves over a cloud-weighted strength
/// distribution. The homogeneous curve (params.k alone) is returned
/// alongside for comparison; the broadened curve cannot be narrower.
pub fn scan_with_k_inhomogeneity(
    params: &SimParams,
    dist: &KDistribution,
    r_grid: &[f64],
    delta_p: f64,
    policy: ExecPolicy,
) -> Result<InhomogeneousScan> {
    if dist.nodes.is_empty() {
        return Err(Error::InvalidParam {
            field: "k_distribution",
            reason: "needs at least one node".into(),
        });
    }
    let homogeneous = scan_resonance(params, r_grid, delta_p, policy)?;
    let mut p0 = vec![0.0; r_grid.len()];
    let mut var = vec![0.0; r_grid.len()];
    for &(k, weight) in &dist.nodes {
        let curve = if k == params.k {
            homogeneous.clone()
        } else {
            scan_resonance(&SimParams { k, ..params.clone() }, r_grid, delta_p, policy)?
        };
        for i in 0..r_grid.len() {
            p0[i] += weight * curve.p0[i];
            var[i] += weight * weight * curve.se[i] * curve.se[i];
        }
    }
    let broadened = ResonanceCurve {
        r: r_grid.to_vec(),
        p0,
        se: var.iter().map(|v| v.sqrt()).collect(),
        params: params.clone(),
        delta_p,
    };
    Ok(InhomogeneousScan { homogeneous, broadened })
}

//! Closed-form Fourier analysis of kick trains: comb power spectra with the
//! square-pulse envelope, the two-train resolution baseline F_1/2(r), and
//! harmonic weights of the pulse comb.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schedule::{KickEvent, KickSchedule, Mode, SimParams};

/// Power spectrum |FT|^2 of a kick train on an explicit frequency grid
/// (frequencies in units of the primary kick rate).
#[derive(Debug, Clone)]
pub struct SpectrumCurve {
    pub f: Vec<f64>,
    pub power: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Fourier amplitude of the train at frequency `f`:
/// sum_k s_k e^{2 pi i f t_k} sinc(pi f tau_k). Square pulses carry their
/// exact transform, so no sampling grid is involved; tau = 0 events have
/// envelope 1.
pub fn sequence_amplitude(schedule: &KickSchedule, f: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ev in &schedule.events {
        let phase = 2.0 * std::f64::consts::PI * f * ev.time;
        let env = sinc(std::f64::consts::PI * f * ev.width);
        acc += ev.strength * env * Complex64::from_polar(1.0, phase);
    }
    acc
}

/// |FT|^2 of the kick train over `f_grid`.
pub fn sequence_spectrum(schedule: &KickSchedule, f_grid: &[f64]) -> SpectrumCurve {
    let power = f_grid
        .iter()
        .map(|&f| sequence_amplitude(schedule, f).norm_sqr())
        .collect();
    SpectrumCurve { f: f_grid.to_vec(), power }
}

/// Resolution baseline: |FT|^2 of the two-frequency train evaluated at the
/// midpoint frequency (1+r)/2 for each r, peak-normalized. Requires the
/// two-train mode with zero relative phase — that is how the baseline is
/// defined.
///
/// Both trains carry the same number of unit kicks (N2 = N1) so the curve
/// is continuous with its global maximum exactly at r = 1; the dynamical
/// schedule's strictly-below-r*N1 count would add a kick just above r = 1
/// and shift the maximum off the coincidence point.
pub fn f_half_curve(params: &SimParams, r_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if params.mode != Mode::TwoTrain {
        return Err(Error::InvalidParam {
            field: "mode",
            reason: "the F_1/2 baseline is defined for the two-train mode".into(),
        });
    }
    if params.phi != 0.0 {
        return Err(Error::InvalidParam {
            field: "phi",
            reason: format!("the F_1/2 baseline is defined at phi = 0, got {}", params.phi),
        });
    }
    let n1 = params.n1;
    let tau = params.tau;
    let mut curve = Vec::with_capacity(r_grid.len());
    let mut peak = 0.0f64;
    for &r in r_grid {
        if !(r > 0.0) {
            return Err(Error::InvalidParam {
                field: "r",
                reason: format!("frequency ratio must be positive, got {r}"),
            });
        }
        let f = (1.0 + r) / 2.0;
        let mut events = Vec::with_capacity(2 * n1 as usize);
        for n in 1..=n1 {
            events.push(KickEvent { time: n as f64, strength: 1.0, width: tau });
            events.push(KickEvent { time: n as f64 / r, strength: 1.0, width: tau });
        }
        let train = KickSchedule { events, total_duration: n1 as f64 };
        let power = sequence_amplitude(&train, f).norm_sqr();
        peak = peak.max(power);
        curve.push((r, power));
    }
    if peak <= 0.0 {
        return Err(Error::Observable("baseline curve vanishes on the whole grid".into()));
    }
    for pt in curve.iter_mut() {
        pt.1 /= peak;
    }
    Ok(curve)
}

/// Power of the j-th comb harmonic relative to the first, for square pulses
/// of width `tau` (in units of the primary period): sinc^2(pi j tau) /
/// sinc^2(pi tau).
pub fn harmonic_weight(tau: f64, j: u32) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam {
            field: "tau",
            reason: format!("harmonic weights need a finite pulse width, got {tau}"),
        });
    }
    if j == 0 {
        return Err(Error::InvalidParam { field: "j", reason: "harmonic index starts at 1".into() });
    }
    let num = sinc(std::f64::consts::PI * j as f64 * tau);
    let den = sinc(std::f64::consts::PI * tau);
    Ok((num / den).powi(2))
}

/// Largest harmonic index inside the central lobe of the pulse envelope,
/// i.e. the largest j with j * tau < 1.
pub fn central_lobe_harmonics(tau: f64) -> Result<u32> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam {
            field: "tau",
            reason: format!("lobe count needs a finite pulse width, got {tau}"),
        });
    }
    let j = (1.0 / tau).ceil() - 1.0; // largest integer strictly below 1/tau
    Ok(j.max(0.0) as u32)
}

/// Analytic peak positions of the amplitude-modulated train's excitation
/// spectrum: carriers at every integer j = 1..j_max plus sidebands at
/// j +- (r-1). The carrier-sideband separation is |r-1| for every j.
pub fn modulated_spectrum_peaks(r: f64, j_max: u32) -> Vec<f64> {
    let offset = r - 1.0;
    let mut peaks = Vec::with_capacity(3 * j_max as usize);
    for j in 1..=j_max {
        let j = j as f64;
        peaks.push(j);
        peaks.push(j - offset);
        peaks.push(j + offset);
    }
    peaks.sort_by(f64::total_cmp);
    peaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::schedule::build_two_frequency_schedule;

    fn unit_train(n: u32, tau: f64) -> KickSchedule {
        let events = (1..=n)
            .map(|k| KickEvent { time: k as f64, strength: 1.0, width: tau })
            .collect();
        KickSchedule { events, total_duration: n as f64 }
    }

    #[test]
    fn single_kick_power_is_envelope() {
        let tau = 0.25;
        let sched = KickSchedule {
            events: vec![KickEvent { time: 1.0, strength: 2.0, width: tau }],
            total_duration: 1.0,
        };
        for f in [0.0, 0.3, 1.7, 3.9] {
            let got = sequence_spectrum(&sched, &[f]).power[0];
            let want = 4.0 * sinc(std::f64::consts::PI * f * tau).powi(2);
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        // first zero of the envelope sits at f = 1/tau
        let at_zero = sequence_spectrum(&sched, &[1.0 / tau]).power[0];
        assert_abs_diff_eq!(at_zero, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn coherent_sum_at_harmonic() {
        let n = 12;
        let sched = unit_train(n, 0.0);
        let got = sequence_spectrum(&sched, &[1.0]).power[0];
        assert_abs_diff_eq!(got, (n as f64).powi(2), epsilon = 1e-9);
    }

    #[test]
    fn dirichlet_zero_off_harmonic() {
        // N kicks: first spectral zero at f = 1 + 1/N, the 1/T comb width
        let n = 10;
        let sched = unit_train(n, 0.0);
        let got = sequence_spectrum(&sched, &[1.0 + 1.0 / n as f64]).power[0];
        assert_abs_diff_eq!(got, 0.0, epsilon = 1e-22);
    }

    #[test]
    fn zero_frequency_obeys_sum_rule() {
        let p = SimParams { k: 6.0, tau: 0.05, r: 0.731, ..Default::default() };
        let sched = build_two_frequency_schedule(&p).unwrap();
        let total: f64 = sched.events.iter().map(|e| e.strength).sum();
        let got = sequence_spectrum(&sched, &[0.0]).power[0];
        assert_abs_diff_eq!(got, total * total, epsilon = 1e-9 * total * total);
    }

    #[test]
    fn spectrum_symmetric_in_f() {
        let p = SimParams { k: 4.0, tau: 0.03, r: 0.8312, phi: 1.3, ..Default::default() };
        let sched = build_two_frequency_schedule(&p).unwrap();
        for f in [0.17, 0.5, 1.0, 2.31] {
            let plus = sequence_spectrum(&sched, &[f]).power[0];
            let minus = sequence_spectrum(&sched, &[-f]).power[0];
            assert_abs_diff_eq!(plus, minus, epsilon = 1e-12 * plus.max(1.0));
        }
    }

    #[test]
    fn baseline_peaks_at_unit_ratio() {
        let params = SimParams { k: 1.0, n1: 10, tau: 0.054, phi: 0.0, ..Default::default() };
        let grid: Vec<f64> = (800..=1200).map(|i| i as f64 / 1000.0).collect();
        let curve = f_half_curve(&params, &grid).unwrap();
        let (peak_r, peak_v) = curve
            .iter()
            .cloned()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_abs_diff_eq!(peak_v, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(peak_r, 1.0, epsilon = 1e-9);
        // resolved case far from the peak
        let at_08 = curve.iter().find(|(r, _)| (*r - 0.8).abs() < 1e-12).unwrap().1;
        assert!(at_08 < 0.01, "F(0.8) = {at_08}");
    }

    #[test]
    fn baseline_rejects_nonzero_phase() {
        let params = SimParams { phi: 0.5, tau: 0.054, ..Default::default() };
        assert!(matches!(
            f_half_curve(&params, &[0.9, 1.0, 1.1]),
            Err(Error::InvalidParam { field: "phi", .. })
        ));
    }

    #[test]
    fn harmonic_weights_match_pulse_envelope() {
        let tau = 0.054;
        assert_eq!(central_lobe_harmonics(tau).unwrap(), 18);
        assert!(18.0 * tau < 1.0 && 19.0 * tau > 1.0);
        let w35 = harmonic_weight(tau, 35).unwrap();
        let w1 = harmonic_weight(tau, 1).unwrap();
        assert_abs_diff_eq!(w1, 1.0, epsilon = 1e-15);
        assert!(w35 / w1 < 0.02, "w35 = {w35}");
        // delta-kick limit: all weights -> 1
        for j in [1u32, 7, 35] {
            let w = harmonic_weight(1e-9, j).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "w({j}) = {w}");
        }
    }

    #[test]
    fn modulated_peaks_carriers_and_sidebands() {
        let peaks = modulated_spectrum_peaks(1.01, 3);
        let want = [0.99, 1.0, 1.01, 1.99, 2.0, 2.01, 2.99, 3.0, 3.01];
        assert_eq!(peaks.len(), want.len());
        for (got, want) in peaks.iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        // coincident sidebands collapse at r = 1
        assert_eq!(modulated_spectrum_peaks(1.0, 3), vec![1.0, 2.0, 3.0]);
        // separation is independent of the harmonic index
        let peaks = modulated_spectrum_peaks(1.25, 10);
        for j in [1.0f64, 10.0] {
            assert!(peaks.iter().any(|p| (p - (j + 0.25)).abs() < 1e-12));
            assert!(peaks.iter().any(|p| (p - (j - 0.25)).abs() < 1e-12));
        }
    }

    #[test]
    fn brute_force_sampled_transform_agrees() {
        // midpoint-sampled numerical FT of the square-pulse train vs the
        // closed form, at 1e-4 period resolution
        let p = SimParams { k: 9.0, tau: 0.08, r: 0.87, phi: 2.1, n1: 7, ..Default::default() };
        let sched = build_two_frequency_schedule(&p).unwrap();
        let step = 1e-4;
        for f in [0.13, 0.694, 1.0, 1.77] {
            let mut acc = Complex64::new(0.0, 0.0);
            for ev in &sched.events {
                let nsub = (ev.width / step).ceil().max(1.0) as usize;
                let h = ev.width / nsub as f64;
                let rate = ev.strength / ev.width;
                for i in 0..nsub {
                    let t = ev.time - ev.width / 2.0 + (i as f64 + 0.5) * h;
                    acc += rate * h * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * t);
                }
            }
            let brute = acc.norm_sqr();
            let closed = sequence_spectrum(&sched, &[f]).power[0];
            let denom = brute.max(closed);
            assert!(
                (brute - closed).abs() / denom < 1e-6,
                "f = {f}: closed {closed} vs brute {brute}"
            );
        }
    }
}

//! Randomized invariants: schedule construction, unitarity of the
//! propagation, histogram mass conservation, window monotonicity, and
//! affine invariance of the width extraction.

use num_complex::Complex64;
use proptest::prelude::*;

use rotor_core::dynamics::{substep_floor, MomentumLadderState, Propagator};
use rotor_core::ensemble::window_population;
use rotor_core::observables::distribution_from_states;
use rotor_core::scan::{fwhm, ResonanceCurve};
use rotor_core::schedule::{build_two_frequency_schedule, SimParams, COINCIDENCE_TOL};

fn two_train(k: f64, r: f64, phi: f64, tau_frac: f64, n1: u32) -> SimParams {
    SimParams {
        k,
        r,
        phi,
        tau: tau_frac / r.max(1.0),
        n1,
        hbar_eff: 2.0,
        sigma_p: 0.0,
        grid_size: 512,
        beta_samples: 1,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_times_strictly_increase(
        r in 0.1f64..3.0,
        phi in 0.0f64..6.28,
        tau_frac in 0.0f64..0.5,
        n1 in 1u32..30,
    ) {
        let p = two_train(1.0, r, phi, tau_frac, n1);
        let s = build_two_frequency_schedule(&p).unwrap();
        for w in s.events.windows(2) {
            prop_assert!(w[1].time > w[0].time + COINCIDENCE_TOL);
        }
        for e in &s.events {
            prop_assert!(e.time > 0.0);
            // kick centers stay within the horizon; overlap segmentation can
            // push a segment center at most tau/2 past the last pulse center
            prop_assert!(e.time <= n1 as f64 + p.tau + COINCIDENCE_TOL);
            prop_assert!(e.strength > 0.0);
        }
    }

    #[test]
    fn schedule_total_strength_counts_kept_kicks(
        r in 0.1f64..3.0,
        phi in 0.0f64..6.28,
        tau_frac in 0.0f64..0.5,
        n1 in 1u32..30,
        k in 0.1f64..50.0,
    ) {
        let p = two_train(k, r, phi, tau_frac, n1);
        let s = build_two_frequency_schedule(&p).unwrap();
        // second-train kicks landing past the run end are dropped; merging
        // and pulse segmentation must preserve the kept total exactly
        let offset = phi / std::f64::consts::TAU;
        let kept = (1..=p.n2_effective())
            .filter(|&n| (n as f64 + offset) / r <= n1 as f64 + p.tau / 2.0 + COINCIDENCE_TOL)
            .count() as f64;
        let expect = k * (n1 as f64 + kept);
        prop_assert!((s.total_strength() - expect).abs() <= 1e-9 * expect.max(1.0));
    }

    #[test]
    fn n2_rule_is_largest_integer_strictly_below(r in 0.05f64..4.0, n1 in 1u32..200) {
        let p = SimParams { r, n1, ..Default::default() };
        let n2 = p.n2_effective() as f64;
        let x = r * n1 as f64;
        prop_assert!(n2 < x, "n2 = {n2} not strictly below r*n1 = {x}");
        prop_assert!(n2 + 1.0 >= x, "n2 = {n2} leaves room below r*n1 = {x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_unitary(
        k in 0.0f64..6.0,
        hbar in 1.0f64..6.0,
        r in 0.5f64..2.0,
        phi in 0.0f64..6.28,
        tau_frac in 0.0f64..0.4,
        n1 in 3u32..10,
        beta in 0.0f64..1.0,
    ) {
        let p = SimParams { hbar_eff: hbar, ..two_train(k, r, phi, tau_frac, n1) };
        let schedule = build_two_frequency_schedule(&p).unwrap();
        let mut state = MomentumLadderState::plane_wave(p.grid_size, beta, hbar, 0);
        let mut prop = Propagator::new(p.grid_size);
        let subs = substep_floor(2.0 * k, hbar);
        let snaps = prop
            .evolve_schedule(&mut state, &schedule, subs, &[n1 as f64])
            .unwrap();
        let (_, last) = snaps.last().unwrap();
        prop_assert!((last.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn histogram_preserves_mass(
        seeds in prop::collection::vec(0.0f64..1.0, 64),
        bin_scale in 0.5f64..3.0,
        beta in 0.0f64..1.0,
        w0 in 0.1f64..0.9,
    ) {
        let hbar = 2.0;
        let make = |lo: usize, beta: f64| {
            let mut st = MomentumLadderState::plane_wave(64, beta, hbar, 0);
            let norm: f64 = seeds[lo..lo + 32].iter().sum();
            for (i, s) in seeds[lo..lo + 32].iter().enumerate() {
                st.amps[16 + i] = Complex64::new((s / norm).sqrt(), 0.0);
            }
            for i in 0..16 {
                st.amps[i] = Complex64::new(0.0, 0.0);
                st.amps[48 + i] = Complex64::new(0.0, 0.0);
            }
            st
        };
        let states = vec![(w0, make(0, beta)), (1.0 - w0, make(32, 1.0 - beta))];
        let dist = distribution_from_states(&states, bin_scale * hbar).unwrap();
        prop_assert!((dist.normalization() - 1.0).abs() < 1e-9);
        prop_assert!(dist.prob.iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn window_population_is_monotone_in_the_window(
        seeds in prop::collection::vec(0.0f64..1.0, 32),
        beta in 0.0f64..1.0,
        dp_lo in 0.5f64..4.0,
        widen in 1.0f64..4.0,
    ) {
        let mut st = MomentumLadderState::plane_wave(32, beta, 1.5, 0);
        let norm: f64 = seeds.iter().sum();
        for (i, s) in seeds.iter().enumerate() {
            st.amps[i] = Complex64::new((s / norm).sqrt(), 0.0);
        }
        let narrow = window_population(&st, dp_lo);
        let wide = window_population(&st, dp_lo * widen);
        prop_assert!(wide >= narrow - 1e-12);
        prop_assert!(wide <= 1.0 + 1e-9);
    }

    #[test]
    fn width_extraction_is_affine_invariant(
        center in -0.5f64..0.5,
        width in 0.02f64..0.2,
        scale in 0.1f64..10.0,
        offset in 0.0f64..5.0,
    ) {
        let r: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
        let shape: Vec<f64> = r
            .iter()
            .map(|x| (1.0 - ((x - center) / width).abs()).max(0.0))
            .collect();
        let curve = |p0: Vec<f64>| ResonanceCurve {
            r: r.clone(),
            p0,
            se: vec![0.0; r.len()],
            params: SimParams::default(),
            delta_p: 1.0,
        };
        let base = fwhm(&curve(shape.clone())).unwrap();
        let mapped = fwhm(&curve(shape.iter().map(|&y| scale * y + offset).collect())).unwrap();
        // sampling widens a triangle by the apex-to-grid offset, at most
        // half the grid spacing
        prop_assert!(base.delta_r >= width - 1e-9);
        prop_assert!(base.delta_r <= width + 0.005 + 1e-9);
        prop_assert!((mapped.delta_r - base.delta_r).abs() < 1e-9 * width);
        prop_assert!((mapped.peak_r - base.peak_r).abs() < 1e-12);
    }
}

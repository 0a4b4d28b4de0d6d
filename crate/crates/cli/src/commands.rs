//! The six subcommands. Each creates the output directory, writes the
//! resolved manifest first, then its data files; small result summaries go
//! to standard output, progress notes to standard error.

use std::path::PathBuf;
use std::time::Instant;

use rotor_core::dynamics::classical_diffusion;
use rotor_core::ensemble::run_ensemble;
use rotor_core::observables::{
    estimate_localization_time, fit_localization_length, momentum_distribution,
};
use rotor_core::scan::{fwhm, fwhm_with_baseline, scan_resonance, width_vs_n, ResonanceCurve};
use rotor_core::schedule::{build_schedule, SimParams};
use rotor_core::spectrum::{central_lobe_harmonics, harmonic_weight, f_half_curve, sequence_spectrum};
use rotor_core::{Error, ExecPolicy, Result};

use crate::config::RunConfig;
use crate::output;

pub fn dispatch(command: &str, cfg: &RunConfig) -> Result<()> {
    match command {
        "evolve" => cmd_evolve(cfg),
        "scan" => cmd_scan(cfg),
        "width-vs-n" => cmd_width_vs_n(cfg),
        "spectrum" => cmd_spectrum(cfg),
        "f-half" => cmd_f_half(cfg),
        "classical" => cmd_classical(cfg),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

fn policy(cfg: &RunConfig) -> ExecPolicy {
    ExecPolicy::from_workers(cfg.workers)
}

fn linspace(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>> {
    if n < 2 || !(lo < hi) {
        return Err(Error::Config(format!(
            "{what}: need at least 2 steps over an increasing range, got [{lo}, {hi}] x {n}"
        )));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Create the output directory and drop the manifest into it.
fn prepare(cfg: &RunConfig, command: &str) -> Result<PathBuf> {
    let dir = cfg.out.clone();
    std::fs::create_dir_all(&dir)?;
    output::write_text(&dir.join("manifest.txt"), &cfg.manifest(command))?;
    Ok(dir)
}

fn done(what: &str, t0: Instant) {
    eprintln!("{what}: done in {:.1}s", t0.elapsed().as_secs_f64());
}

fn kick_counter(params: &SimParams) -> Result<usize> {
    Ok(build_schedule(params)?.events.len())
}

fn cmd_evolve(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "evolve")?;
    let params = &cfg.params;
    let schedule = build_schedule(params)?;
    let times: Vec<f64> = (1..=params.n1).map(|n| n as f64).collect();
    eprintln!(
        "evolve: {} events over {} periods, {} beta samples",
        schedule.events.len(),
        params.n1,
        params.beta_samples
    );
    let t0 = Instant::now();
    let run = run_ensemble(params, &schedule, &times, cfg.delta_p, policy(cfg))?;
    done("evolve", t0);

    output::write_csv(
        &dir.join("trajectory.csv"),
        "n,mean_p2,p0",
        run.record_times
            .iter()
            .zip(run.mean_p2.iter().zip(&run.p0))
            .map(|(&n, (&p2, &p0))| vec![n, p2, p0]),
    )?;

    let dist = momentum_distribution(&run, cfg.dist_bin)?;
    output::write_csv(
        &dir.join("distribution.csv"),
        "p,prob",
        dist.p.iter().zip(&dist.prob).map(|(&p, &w)| vec![p, w]),
    )?;

    let mut summary = String::new();
    summary.push_str(&format!("p0 = {}\n", run.p0.last().unwrap()));
    summary.push_str(&format!("mean_p2 = {}\n", run.mean_p2.last().unwrap()));
    match fit_localization_length(&dist) {
        Ok(fit) => {
            summary.push_str(&format!("localization_length = {}\n", fit.length));
            summary.push_str(&format!("fit_r_squared = {}\n", fit.r_squared));
        }
        Err(e) => summary.push_str(&format!("localization_length = none ({e})\n")),
    }
    let series: Vec<(f64, f64)> =
        run.record_times.iter().cloned().zip(run.mean_p2.iter().cloned()).collect();
    match estimate_localization_time(&series) {
        Ok(n_l) => summary.push_str(&format!("n_l = {n_l}\n")),
        Err(e) => summary.push_str(&format!("n_l = none ({e})\n")),
    }
    output::write_text(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_scan(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "scan")?;
    let grid = linspace(cfg.r_min, cfg.r_max, cfg.r_steps, "r grid")?;
    eprintln!(
        "scan: {} ratios x {} kicks each ({} beta samples)",
        grid.len(),
        kick_counter(&cfg.params)?,
        cfg.params.beta_samples
    );
    let t0 = Instant::now();
    let curve = scan_resonance(&cfg.params, &grid, cfg.delta_p, policy(cfg))?;
    done("scan", t0);
    output::write_csv(
        &dir.join("resonance.csv"),
        "r,p0,se",
        curve
            .r
            .iter()
            .zip(curve.p0.iter().zip(&curve.se))
            .map(|(&r, (&p0, &se))| vec![r, p0, se]),
    )?;
    let report = fwhm(&curve)?;
    let text = output::width_report_text(&report, cfg.params.n1, cfg.delta_p, cfg.f1_khz);
    output::write_text(&dir.join("width_report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_width_vs_n(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "width-vs-n")?;
    if cfg.n1_list.is_empty() {
        return Err(Error::Config("width-vs-n needs a non-empty n1_list".into()));
    }
    let ks: Vec<f64> = if cfg.k_list.is_empty() { vec![cfg.params.k] } else { cfg.k_list.clone() };
    let single = ks.len() == 1;
    for &k in &ks {
        let params = SimParams { k, ..cfg.params.clone() };
        eprintln!("width-vs-n: K = {k}, n1 = {:?}", cfg.n1_list);
        let t0 = Instant::now();
        let result = width_vs_n(&params, &cfg.n1_list, cfg.delta_p, policy(cfg))?;
        done("width-vs-n", t0);
        let csv = if single {
            "width_vs_n.csv".to_string()
        } else {
            format!("width_vs_n_k{k}.csv")
        };
        output::write_csv(
            &dir.join(csv),
            "n1,delta_r,delta_r_err,w,fit_slope_local",
            result.points.iter().map(|pt| {
                vec![
                    pt.n1 as f64,
                    pt.report.delta_r,
                    pt.report.delta_r_err,
                    pt.report.w,
                    pt.fit_slope_local,
                ]
            }),
        )?;
        let rep = if single {
            "width_vs_n_report.txt".to_string()
        } else {
            format!("width_vs_n_report_k{k}.txt")
        };
        let text = output::width_vs_n_report_text(&result);
        output::write_text(&dir.join(rep), &text)?;
        println!("k = {k}");
        print!("{text}");
    }
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "spectrum")?;
    let f_grid = linspace(cfg.f_min, cfg.f_max, cfg.f_steps, "f grid")?;
    let rs: Vec<f64> = if cfg.r_list.is_empty() { vec![cfg.params.r] } else { cfg.r_list.clone() };
    let single = rs.len() == 1;
    for &r in &rs {
        let params = SimParams { r, ..cfg.params.clone() };
        let schedule = build_schedule(&params)?;
        let spec = sequence_spectrum(&schedule, &f_grid);
        let name = if single { "spectrum.csv".to_string() } else { format!("spectrum_r{r}.csv") };
        output::write_csv(
            &dir.join(name),
            "f_over_f1,power",
            spec.f.iter().zip(&spec.power).map(|(&f, &p)| vec![f, p]),
        )?;
    }
    if cfg.params.tau > 0.0 {
        let lobe = central_lobe_harmonics(cfg.params.tau)?;
        let rows: Result<Vec<Vec<f64>>> = (1..=2 * lobe)
            .map(|j| Ok(vec![j as f64, harmonic_weight(cfg.params.tau, j)?]))
            .collect();
        output::write_csv(&dir.join("harmonics.csv"), "j,weight", rows?)?;
        println!("central_lobe_harmonics = {lobe}");
    } else {
        eprintln!("spectrum: delta kicks (tau = 0) carry a flat comb; no harmonics file");
    }
    Ok(())
}

fn cmd_f_half(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "f-half")?;
    let grid = linspace(cfg.r_min, cfg.r_max, cfg.r_steps, "r grid")?;
    let pts = f_half_curve(&cfg.params, &grid)?;
    output::write_csv(
        &dir.join("f_half.csv"),
        "r,f12_normalized",
        pts.iter().map(|&(r, v)| vec![r, v]),
    )?;
    let curve = ResonanceCurve {
        r: pts.iter().map(|&(r, _)| r).collect(),
        p0: pts.iter().map(|&(_, v)| v).collect(),
        se: vec![0.0; pts.len()],
        params: cfg.params.clone(),
        delta_p: cfg.delta_p,
    };
    // the spectral curve's true floor is zero by construction
    let report = fwhm_with_baseline(&curve, Some(0.0))?;
    let text = output::width_report_text(&report, cfg.params.n1, cfg.delta_p, cfg.f1_khz);
    output::write_text(&dir.join("f_half_report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_classical(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg, "classical")?;
    let n = cfg.params.n1 as usize;
    eprintln!("classical: {} trajectories x {n} kicks", cfg.cl_ensemble);
    let t0 = Instant::now();
    let series = classical_diffusion(cfg.params.k, n, cfg.cl_ensemble, cfg.params.seed, policy(cfg));
    done("classical", t0);
    output::write_csv(
        &dir.join("classical.csv"),
        "n,mean_p2",
        series.iter().enumerate().map(|(i, &p2)| vec![(i + 1) as f64, p2]),
    )?;
    println!("mean_p2 = {}", series.last().unwrap_or(&0.0));
    Ok(())
}

/// Used by the binary's usage text and the manifest echo.
pub const COMMANDS: &[&str] = &["evolve", "scan", "width-vs-n", "spectrum", "f-half", "classical"];

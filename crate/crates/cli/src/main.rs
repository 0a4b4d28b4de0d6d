//! `rotor` — kicked-rotor resonance toolkit.
//!
//! rotor <command> [options]
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped.

use std::process::ExitCode;

use rotor_cli::commands;
use rotor_cli::config::RunConfig;
use rotor_core::{Error, Result};

const USAGE: &str = "\
rotor - quasiperiodically kicked rotor: resonance scans and spectra

USAGE:
  rotor <COMMAND> [OPTIONS]

COMMANDS:
  evolve      one run; trajectory, final momentum distribution, summary
  scan        p(0) vs the ratio r over [r_min, r_max]; FWHM width report
  width-vs-n  resonance width vs kick count N1 (per strength in k_list)
  spectrum    |FT|^2 of the kick train over [f_min, f_max] (+ harmonics)
  f-half      closed-form two-train spectral baseline F_1/2(r) and width
  classical   standard-map Monte Carlo <P^2>(n)

OPTIONS:
  --config PATH     load key = value file (repeatable, later wins)
  --preset NAME     parameter bundle: fig1 | fig2 | fig3
  --set KEY=VALUE   override one config key (repeatable)
  --seed N          RNG seed (classical Monte Carlo only)
  --workers N       worker threads (0 = all cores, 1 = sequential)
  --out DIR         output directory (default runs/)
  --strict-overlap  reject schedules with overlapping pulses
  -h, --help        this text

Precedence: defaults < preset < config files < --set < dedicated flags.
Progress goes to standard error; data to files and standard output.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "-h" || args[0] == "--help" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical_guard() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(args: &[String]) -> Result<()> {
    let command = args[0].as_str();
    if !commands::COMMANDS.contains(&command) {
        return Err(Error::Config(format!(
            "unknown command `{command}`; expected one of {}",
            commands::COMMANDS.join(", ")
        )));
    }

    // collect flags first so precedence is position-independent
    let mut preset: Option<String> = None;
    let mut configs: Vec<String> = Vec::new();
    let mut sets: Vec<String> = Vec::new();
    let mut seed: Option<String> = None;
    let mut workers: Option<String> = None;
    let mut out: Option<String> = None;
    let mut strict = false;

    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let mut value_of = |flag: &str| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| Error::Config(format!("{flag} needs a value")))
        };
        match arg.as_str() {
            "--config" => configs.push(value_of("--config")?),
            "--preset" => preset = Some(value_of("--preset")?),
            "--set" => sets.push(value_of("--set")?),
            "--seed" => seed = Some(value_of("--seed")?),
            "--workers" => workers = Some(value_of("--workers")?),
            "--out" => out = Some(value_of("--out")?),
            "--strict-overlap" => strict = true,
            "-h" | "--help" => {
                print!("{USAGE}");
                return Ok(());
            }
            other => return Err(Error::Config(format!("unknown flag `{other}`"))),
        }
    }

    let mut cfg = RunConfig::default();
    if let Some(name) = &preset {
        cfg.apply_preset(name)?;
    }
    for path in &configs {
        cfg.load_file(std::path::Path::new(path))?;
    }
    for kv in &sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(key.trim(), value)?;
    }
    if let Some(s) = &seed {
        cfg.set("seed", s)?;
    }
    if let Some(w) = &workers {
        cfg.set("workers", w)?;
    }
    if let Some(o) = &out {
        cfg.set("out", o)?;
    }
    if strict {
        cfg.set("strict_overlap", "true")?;
    }

    for note in cfg.resolve()? {
        eprintln!("{note}");
    }
    commands::dispatch(command, &cfg)
}

//! Run configuration: defaults, figure recipes, flat key=value config files,
//! and the single lab-unit → reduced-unit conversion point.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rotor_core::schedule::{Mode, SimParams};
use rotor_core::{Error, Result};

/// Planck constant over 2*pi, J*s.
const HBAR_SI: f64 = 1.054571817e-34;
/// Atomic mass unit, kg.
const AMU_KG: f64 = 1.66053906660e-27;

/// Everything a command needs: physics parameters plus command-specific
/// ranges and artifact plumbing. Every run echoes the resolved form of this
/// struct into `manifest.txt`; feeding that file back via `--config`
/// reproduces the run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: SimParams,
    /// Scan grid for `scan` and `f-half`.
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    /// Ratios for `spectrum` (empty = just `params.r`).
    pub r_list: Vec<f64>,
    /// Kick counts for `width-vs-n`.
    pub n1_list: Vec<u32>,
    /// Strengths for `width-vs-n` (empty = just `params.k`).
    pub k_list: Vec<f64>,
    /// Frequency grid for `spectrum`, units of f1.
    pub f_min: f64,
    pub f_max: f64,
    pub f_steps: usize,
    /// Zero-momentum probe window; 0 = one ladder spacing (hbar_eff).
    pub delta_p: f64,
    /// Momentum-distribution bin width; 0 = one ladder spacing.
    pub dist_bin: f64,
    /// Trajectory count for the classical Monte Carlo.
    pub cl_ensemble: usize,
    /// Worker threads; 0 = all available cores.
    pub workers: usize,
    pub out: PathBuf,
    /// Lab units (optional): primary kick frequency.
    pub f1_khz: Option<f64>,
    /// Lab units (optional): pulse duration; needs `f1_khz`.
    pub tau_us: Option<f64>,
    /// Lab units (optional): standing-wave wavelength; needs `mass_amu` and
    /// `f1_khz` to fix hbar_eff.
    pub lambda_nm: Option<f64>,
    /// Lab units (optional): atomic mass.
    pub mass_amu: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: SimParams::default(),
            r_min: 0.95,
            r_max: 1.05,
            r_steps: 41,
            r_list: Vec::new(),
            n1_list: vec![5, 10, 20, 40, 80, 160],
            k_list: Vec::new(),
            f_min: 0.0,
            f_max: 3.0,
            f_steps: 3001,
            delta_p: 0.0,
            dist_bin: 0.0,
            cl_ensemble: 100_000,
            workers: 0,
            out: PathBuf::from("runs"),
            f1_khz: None,
            tau_us: None,
            lambda_nm: None,
            mass_amu: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| cfg_err(format!("key `{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let v = value.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| parse_num(key, item)).collect()
}

impl RunConfig {
    /// Set one key. Unknown keys are errors so that a typo in a config file
    /// cannot silently fall back to a default.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "k" => self.params.k = parse_num(key, v)?,
            "hbar_eff" => self.params.hbar_eff = parse_num(key, v)?,
            "r" => self.params.r = parse_num(key, v)?,
            "phi" => self.params.phi = parse_num(key, v)?,
            "tau" => self.params.tau = parse_num(key, v)?,
            "n1" => self.params.n1 = parse_num(key, v)?,
            "n2" => {
                self.params.n2 = if v == "auto" { None } else { Some(parse_num(key, v)?) }
            }
            "a" => self.params.a = parse_num(key, v)?,
            "mode" => {
                self.params.mode = match v {
                    "two_train" => Mode::TwoTrain,
                    "modulated" => Mode::Modulated,
                    other => {
                        return Err(cfg_err(format!(
                            "key `mode`: expected two_train or modulated, got `{other}`"
                        )))
                    }
                }
            }
            "grid_size" => self.params.grid_size = parse_num(key, v)?,
            "beta_samples" => self.params.beta_samples = parse_num(key, v)?,
            "sigma_p" => self.params.sigma_p = parse_num(key, v)?,
            "seed" => self.params.seed = parse_num(key, v)?,
            "strict_overlap" => self.params.strict_overlap = parse_num(key, v)?,
            "r_min" => self.r_min = parse_num(key, v)?,
            "r_max" => self.r_max = parse_num(key, v)?,
            "r_steps" => self.r_steps = parse_num(key, v)?,
            "r_list" => self.r_list = parse_list(key, v)?,
            "n1_list" => self.n1_list = parse_list(key, v)?,
            "k_list" => self.k_list = parse_list(key, v)?,
            "f_min" => self.f_min = parse_num(key, v)?,
            "f_max" => self.f_max = parse_num(key, v)?,
            "f_steps" => self.f_steps = parse_num(key, v)?,
            "delta_p" => self.delta_p = parse_num(key, v)?,
            "dist_bin" => self.dist_bin = parse_num(key, v)?,
            "cl_ensemble" => self.cl_ensemble = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "f1_khz" => self.f1_khz = Some(parse_num(key, v)?),
            "tau_us" => self.tau_us = Some(parse_num(key, v)?),
            "lambda_nm" => self.lambda_nm = Some(parse_num(key, v)?),
            "mass_amu" => self.mass_amu = Some(parse_num(key, v)?),
            // manifests echo the command they came from; harmless on re-read
            "command" => {}
            other => return Err(cfg_err(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Load `key = value` lines; `#` starts a comment, blank lines skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                cfg_err(format!("{}:{}: expected key = value", path.display(), ln + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| cfg_err(format!("{}:{}: {e}", path.display(), ln + 1)))?;
        }
        Ok(())
    }

    /// Named parameter bundles for the standard experiment recipes.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            // narrow resonance scan around r = 1 with square pulses
            "fig1" => {
                self.params.k = 42.0;
                self.params.hbar_eff = 5.76;
                self.params.phi = std::f64::consts::PI;
                self.params.n1 = 10;
                self.params.grid_size = 1024;
                self.params.beta_samples = 64;
                self.params.sigma_p = 1.0;
                self.f1_khz = Some(18.0);
                self.tau_us = Some(3.0);
                self.r_min = 0.98;
                self.r_max = 1.02;
                self.r_steps = 41;
            }
            // kick-train spectra at three detuned ratios
            "fig2" => {
                self.params.k = 42.0;
                self.params.hbar_eff = 5.76;
                self.params.phi = std::f64::consts::PI;
                self.params.n1 = 10;
                self.f1_khz = Some(18.0);
                self.tau_us = Some(3.0);
                self.r_list = vec![0.98, 0.93, 0.80];
                self.f_min = 0.5;
                self.f_max = 1.5;
                self.f_steps = 2001;
            }
            // width scaling vs kick count at three strengths
            "fig3" => {
                self.params.k = 42.0;
                self.params.hbar_eff = 2.89;
                self.params.phi = std::f64::consts::PI;
                self.params.tau = 0.0;
                self.params.grid_size = 512;
                self.params.beta_samples = 64;
                self.params.sigma_p = 1.0;
                self.k_list = vec![20.0, 42.0, 80.0];
                self.n1_list = vec![5, 10, 20, 40, 80, 160];
            }
            other => return Err(cfg_err(format!("unknown preset `{other}`"))),
        }
        Ok(())
    }

    /// Convert lab units into reduced units (once), fill the auto windows,
    /// and validate. Returns human-readable notes about what was derived.
    pub fn resolve(&mut self) -> Result<Vec<String>> {
        let mut notes = Vec::new();
        if let Some(tau_us) = self.tau_us {
            let f1 = self.f1_khz.ok_or_else(|| cfg_err("tau_us requires f1_khz"))?;
            self.params.tau = tau_us * 1e-6 * f1 * 1e3;
            notes.push(format!("lab units: tau*f1 = {}", self.params.tau));
        }
        match (self.lambda_nm, self.mass_amu) {
            (Some(lambda), Some(mass)) => {
                let f1 = self.f1_khz.ok_or_else(|| cfg_err("lambda_nm requires f1_khz"))?;
                let k_l = std::f64::consts::TAU / (lambda * 1e-9);
                // hbar_eff = 8 * recoil frequency * kick period
                self.params.hbar_eff = 4.0 * HBAR_SI * k_l * k_l / (mass * AMU_KG * f1 * 1e3);
                notes.push(format!("lab units: hbar_eff = {}", self.params.hbar_eff));
            }
            (None, None) => {}
            _ => return Err(cfg_err("lambda_nm and mass_amu must be given together")),
        }
        if self.delta_p == 0.0 {
            self.delta_p = self.params.hbar_eff;
        }
        if self.dist_bin == 0.0 {
            self.dist_bin = self.params.hbar_eff;
        }
        self.params.validate()?;
        if !(self.delta_p > 0.0) {
            return Err(cfg_err(format!("delta_p must be > 0, got {}", self.delta_p)));
        }
        if !(self.dist_bin > 0.0) {
            return Err(cfg_err(format!("dist_bin must be > 0, got {}", self.dist_bin)));
        }
        Ok(notes)
    }

    /// The resolved configuration as sorted `key = value` lines. The output
    /// parses back through [`RunConfig::load_file`].
    pub fn manifest(&self, command: &str) -> String {
        let p = &self.params;
        let mut rows: Vec<(&str, String)> = vec![
            ("command", command.to_string()),
            ("k", p.k.to_string()),
            ("hbar_eff", p.hbar_eff.to_string()),
            ("r", p.r.to_string()),
            ("phi", p.phi.to_string()),
            ("tau", p.tau.to_string()),
            ("n1", p.n1.to_string()),
            ("n2", p.n2.map_or("auto".into(), |n| n.to_string())),
            ("a", p.a.to_string()),
            (
                "mode",
                match p.mode {
                    Mode::TwoTrain => "two_train".into(),
                    Mode::Modulated => "modulated".into(),
                },
            ),
            ("grid_size", p.grid_size.to_string()),
            ("beta_samples", p.beta_samples.to_string()),
            ("sigma_p", p.sigma_p.to_string()),
            ("seed", p.seed.to_string()),
            ("strict_overlap", p.strict_overlap.to_string()),
            ("r_min", self.r_min.to_string()),
            ("r_max", self.r_max.to_string()),
            ("r_steps", self.r_steps.to_string()),
            ("f_min", self.f_min.to_string()),
            ("f_max", self.f_max.to_string()),
            ("f_steps", self.f_steps.to_string()),
            ("delta_p", self.delta_p.to_string()),
            ("dist_bin", self.dist_bin.to_string()),
            ("cl_ensemble", self.cl_ensemble.to_string()),
            ("workers", self.workers.to_string()),
            ("out", self.out.display().to_string()),
        ];
        let join = |xs: &[String]| xs.join(",");
        if !self.r_list.is_empty() {
            rows.push(("r_list", join(&self.r_list.iter().map(f64::to_string).collect::<Vec<_>>())));
        }
        if !self.n1_list.is_empty() {
            rows.push(("n1_list", join(&self.n1_list.iter().map(u32::to_string).collect::<Vec<_>>())));
        }
        if !self.k_list.is_empty() {
            rows.push(("k_list", join(&self.k_list.iter().map(f64::to_string).collect::<Vec<_>>())));
        }
        for (key, opt) in [
            ("f1_khz", self.f1_khz),
            ("tau_us", self.tau_us),
            ("lambda_nm", self.lambda_nm),
            ("mass_amu", self.mass_amu),
        ] {
            if let Some(v) = opt {
                rows.push((key, v.to_string()));
            }
        }
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut text = String::new();
        for (k, v) in rows {
            let _ = writeln!(text, "{k} = {v}");
        }
        text
    }
}

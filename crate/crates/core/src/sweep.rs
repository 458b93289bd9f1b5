//! `(eta, nu)` region map of the lossy two-mode squeezed state.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::born::OptimizerOptions;
use crate::certify::{classify_point, RegionVerdict};
use crate::error::{invalid, Error, Result};

/// Flat JSON sweep configuration; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_steps: usize,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_steps: usize,
    pub epsilon: f64,
    pub optimizer_budget: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eta_min: 0.0,
            eta_max: 1.0,
            eta_steps: 50,
            nu_min: 1.0,
            nu_max: 1.5,
            nu_steps: 50,
            epsilon: 0.02,
            optimizer_budget: 200,
            output_path: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta_steps < 2 || self.nu_steps < 2 {
            return Err(invalid("eta_steps and nu_steps must be at least 2"));
        }
        if !(0.0 <= self.eta_min && self.eta_min <= self.eta_max && self.eta_max <= 1.0) {
            return Err(invalid(format!("eta range [{}, {}] must lie in [0, 1]", self.eta_min, self.eta_max)));
        }
        if !(1.0 <= self.nu_min && self.nu_min <= self.nu_max && self.nu_max.is_finite()) {
            return Err(invalid(format!("nu range [{}, {}] must lie in [1, inf)", self.nu_min, self.nu_max)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn eta_values(&self) -> Vec<f64> {
        linspace(self.eta_min, self.eta_max, self.eta_steps)
    }

    pub fn nu_values(&self) -> Vec<f64> {
        linspace(self.nu_min, self.nu_max, self.nu_steps)
    }

    pub fn optimizer(&self) -> OptimizerOptions {
        OptimizerOptions { budget: self.optimizer_budget, ..OptimizerOptions::default() }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Evaluates every cell, `eta` major and `nu` minor.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<RegionVerdict>> {
    config.validate()?;
    let etas = config.eta_values();
    let nus = config.nu_values();
    let opts = config.optimizer();
    let cells: Vec<(f64, f64)> = etas.iter().flat_map(|&e| nus.iter().map(move |&n| (e, n))).collect();
    cells.par_iter().map(|&(eta, nu)| classify_point(eta, nu, config.epsilon, &opts)).collect()
}

/// CSV with header `eta,nu,status,value`.
pub fn write_csv<W: Write>(verdicts: &[RegionVerdict], mut out: W) -> std::io::Result<()> {
    writeln!(out, "eta,nu,status,value")?;
    for v in verdicts {
        writeln!(out, "{},{},{},{}", v.eta, v.nu, v.status.as_str(), v.value)?;
    }
    out.flush()
}

pub fn write_csv_file(verdicts: &[RegionVerdict], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_csv(verdicts, std::io::BufWriter::new(file)).map_err(io_err)
}

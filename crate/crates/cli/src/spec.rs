use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use serde_json::{json, Value};

use baryopt::bench::{self, preset};
use baryopt::oracles::{CanoeVariant, NoiseModel, Objective, ObjectiveKind};
use baryopt::{CovarianceMode, SearchConfig, VarianceSchedule, WeightExponent};

use crate::error::CliError;

pub const SEED_ENV: &str = "BARYOPT_SEED";
const DEFAULT_SEED: u64 = 1;

/// Run settings shared by `run` and `bench`. Every field may also come from
/// a JSON spec file; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Flat JSON document with any of the fields below (snake_case keys).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// rosenbrock, perturbed_quadratic, canoe or quadratic.
    #[arg(long)]
    pub objective: Option<String>,
    /// Real part of the weight exponent.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Imaginary part of the weight exponent; nonzero selects the complex barycenter.
    #[arg(long, allow_hyphen_values = true)]
    pub nu_imag: Option<f64>,
    /// Origin of the nonnegative orthant for the complex barycenter, e.g. -5,-5.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain_shift: Option<Vec<f64>>,
    /// Momentum factor in [0, 1).
    #[arg(long)]
    pub xi: Option<f64>,
    /// constant:S, linear:START:END:N or geometric:START:RATIO.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Number of oracle queries.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Base seed; defaults to $BARYOPT_SEED, then 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial guess, e.g. -1.5,1.5.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// isotropic or diag:D1,D2,...
    #[arg(long)]
    pub covariance: Option<String>,
    /// Standard deviation of additive Gaussian noise on every query.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Seed of the noise stream; derived from the run seed when absent.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    /// Number of runs, with seeds seed, seed+1, ...
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the canoe objective with the radial factor exactly as printed.
    #[arg(long)]
    pub canoe_as_printed: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    objective: Option<String>,
    nu: Option<f64>,
    nu_imag: Option<f64>,
    domain_shift: Option<Vec<f64>>,
    xi: Option<f64>,
    schedule: Option<String>,
    budget: Option<usize>,
    seed: Option<u64>,
    x0: Option<Vec<f64>>,
    covariance: Option<String>,
    noise: Option<f64>,
    noise_seed: Option<u64>,
    repeat: Option<usize>,
    out: Option<PathBuf>,
    canoe_as_printed: Option<bool>,
}

fn load(path: &Path) -> Result<SpecFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::SpecFile { path: path.to_path_buf(), source })
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub kind: ObjectiveKind,
    pub canoe: CanoeVariant,
    pub config: SearchConfig,
    pub noise: f64,
    pub noise_seed: Option<u64>,
    pub repeat: usize,
    pub out: Option<PathBuf>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let file = match &self.spec {
            Some(p) => load(p)?,
            None => SpecFile::default(),
        };
        let name = self
            .objective
            .clone()
            .or(file.objective)
            .ok_or_else(|| CliError::Usage("no objective given (use --objective or a spec file)".into()))?;
        let kind: ObjectiveKind = name.parse()?;
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a seed")))?),
            Err(_) => None,
        };
        let seed = self.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
        let mut config = preset(kind, seed);

        let nu_re = self.nu.or(file.nu).unwrap_or(config.nu.re());
        let nu_im = self.nu_imag.or(file.nu_imag).unwrap_or(0.0);
        config.nu = if nu_im == 0.0 { WeightExponent::real(nu_re)? } else { WeightExponent::complex(nu_re, nu_im)? };
        config.domain_shift = self.domain_shift.clone().or(file.domain_shift);
        if let Some(xi) = self.xi.or(file.xi) {
            config.xi = xi;
        }
        if let Some(s) = self.schedule.as_ref().or(file.schedule.as_ref()) {
            config.schedule = s.parse::<VarianceSchedule>()?;
        }
        if let Some(b) = self.budget.or(file.budget) {
            config.budget = b;
        }
        if let Some(x0) = self.x0.clone().or(file.x0) {
            config.initial_guess = x0;
        }
        if let Some(c) = self.covariance.as_ref().or(file.covariance.as_ref()) {
            config.covariance = c.parse::<CovarianceMode>()?;
        }
        let dim = kind.build(CanoeVariant::Corrected).dim();
        if config.initial_guess.len() != dim {
            return Err(baryopt::Error::DimensionMismatch { expected: dim, found: config.initial_guess.len() }.into());
        }
        config.validate()?;

        let noise = self.noise.or(file.noise).unwrap_or(0.0);
        if !(noise >= 0.0) || !noise.is_finite() {
            return Err(CliError::Usage(format!("noise must be >= 0, got {noise}")));
        }
        let repeat = self.repeat.or(file.repeat).unwrap_or(1);
        if repeat == 0 {
            return Err(CliError::Usage("repeat must be at least 1".into()));
        }
        let canoe = if self.canoe_as_printed || file.canoe_as_printed.unwrap_or(false) {
            CanoeVariant::AsPrinted
        } else {
            CanoeVariant::Corrected
        };
        Ok(RunSpec {
            kind,
            canoe,
            config,
            noise,
            noise_seed: self.noise_seed.or(file.noise_seed),
            repeat,
            out: self.out.clone().or(file.out),
        })
    }
}

impl RunSpec {
    pub fn objective(&self) -> Box<dyn Objective> {
        self.kind.build(self.canoe)
    }

    /// Seeds of the `repeat` runs.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeat as u64).map(|k| self.config.seed.wrapping_add(k)).collect()
    }

    pub fn config_for(&self, seed: u64) -> SearchConfig {
        SearchConfig { seed, ..self.config.clone() }
    }

    /// Noise model of the run with `seed`, `k`-th in the repeat sequence.
    pub fn noise_for(&self, seed: u64, k: usize) -> Option<NoiseModel> {
        (self.noise > 0.0).then(|| NoiseModel {
            sigma_w: self.noise,
            seed: self.noise_seed.map_or_else(|| bench::noise_seed(seed), |s| s.wrapping_add(k as u64)),
        })
    }

    pub fn to_json(&self) -> Value {
        let c = &self.config;
        json!({
            "objective": self.kind.as_str(),
            "canoe_as_printed": self.canoe == CanoeVariant::AsPrinted,
            "nu": c.nu.re(),
            "nu_imag": c.nu.im(),
            "domain_shift": c.domain_shift,
            "xi": c.xi,
            "schedule": c.schedule.to_string(),
            "budget": c.budget,
            "seed": c.seed,
            "x0": c.initial_guess,
            "covariance": c.covariance.to_string(),
            "noise": self.noise,
            "noise_seed": self.noise_seed,
            "repeat": self.repeat,
            "out": self.out,
        })
    }
}

//! Randomized recursive barycenter search.
//!
//! Each step draws a curiosity `z_n ~ N(xi * Δx̂_{n-1}, σ_n² D)`, queries the
//! oracle at `x_n = x̂_{n-1} + z_n` and absorbs the answer into the
//! barycenter. With a real exponent the update is `Δx̂_n = F_n z_n` with gain
//! `F_n ∈ (0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::barycenter::{BarycenterState, ComplexAccumulator, TestPoint, WeightExponent};
use crate::error::{Error, Result};
use crate::oracles::Oracle;
use crate::rng::{self, ChaCha8Rng};

/// Standard deviation of the curiosity as a function of the 1-based step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceSchedule {
    Constant { sigma: f64 },
    /// Linear from `start` at step 1 to `end` at step `steps`, then flat.
    Linear { start: f64, end: f64, steps: usize },
    /// `start * ratio^(n-1)`.
    Geometric { start: f64, ratio: f64 },
}

impl VarianceSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ok = match *self {
            Self::Constant { sigma } => positive(sigma),
            Self::Linear { start, end, steps } => positive(start) && positive(end) && steps >= 1,
            Self::Geometric { start, ratio } => positive(start) && ratio > 0.0 && ratio <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid variance schedule {self}")))
        }
    }

    pub fn sigma(&self, step: usize) -> f64 {
        let k = step.saturating_sub(1);
        match *self {
            Self::Constant { sigma } => sigma,
            Self::Linear { start, end, steps } => {
                if k + 1 >= steps {
                    end
                } else {
                    start + (end - start) * k as f64 / (steps - 1) as f64
                }
            }
            Self::Geometric { start, ratio } => start * ratio.powi(k as i32),
        }
    }
}

impl fmt::Display for VarianceSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { sigma } => write!(f, "constant:{sigma}"),
            Self::Linear { start, end, steps } => write!(f, "linear:{start}:{end}:{steps}"),
            Self::Geometric { start, ratio } => write!(f, "geometric:{start}:{ratio}"),
        }
    }
}

/// Parses `constant:S`, `linear:START:END:N` or `geometric:START:RATIO`.
impl FromStr for VarianceSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse schedule {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.trim().parse::<f64>().ok()).ok_or_else(bad);
        let schedule = match (parts[0], parts.len()) {
            ("constant", 2) => Self::Constant { sigma: num(1)? },
            ("linear", 4) => Self::Linear {
                start: num(1)?,
                end: num(2)?,
                steps: parts[3].trim().parse().map_err(|_| bad())?,
            },
            ("geometric", 3) => Self::Geometric { start: num(1)?, ratio: num(2)? },
            _ => return Err(bad()),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

/// Shape of the curiosity covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceMode {
    /// `σ_n² I`.
    Isotropic,
    /// `σ_n² diag(d)²`: component `α` has standard deviation `σ_n d_α`.
    Diagonal(Vec<f64>),
}

impl fmt::Display for CovarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Isotropic => f.write_str("isotropic"),
            Self::Diagonal(d) => {
                let parts: Vec<String> = d.iter().map(f64::to_string).collect();
                write!(f, "diag:{}", parts.join(","))
            }
        }
    }
}

/// Parses `isotropic` or `diag:D1,D2,...`.
impl FromStr for CovarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "isotropic" {
            return Ok(Self::Isotropic);
        }
        let bad = || Error::InvalidConfig(format!("cannot parse covariance {s:?}; expected isotropic or diag:D1,D2,..."));
        let rest = s.strip_prefix("diag:").ok_or_else(bad)?;
        let d = rest.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        Ok(Self::Diagonal(d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub nu: WeightExponent,
    pub xi: f64,
    pub schedule: VarianceSchedule,
    pub budget: usize,
    pub seed: u64,
    pub initial_guess: Vec<f64>,
    pub covariance: CovarianceMode,
    /// Origin of the nonnegative orthant for the complex barycenter. Required
    /// when `nu` has a nonzero imaginary part, ignored otherwise.
    pub domain_shift: Option<Vec<f64>>,
}

impl SearchConfig {
    pub fn new(
        initial_guess: Vec<f64>,
        nu: WeightExponent,
        xi: f64,
        schedule: VarianceSchedule,
        budget: usize,
        seed: u64,
    ) -> Self {
        Self {
            nu,
            xi,
            schedule,
            budget,
            seed,
            initial_guess,
            covariance: CovarianceMode::Isotropic,
            domain_shift: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial_guess.len()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.xi) {
            return invalid(format!("xi must lie in [0, 1), got {}", self.xi));
        }
        if self.budget == 0 {
            return invalid("budget must be at least 1".into());
        }
        self.schedule.validate()?;
        BarycenterState::new(self.initial_guess.clone())?;
        if let CovarianceMode::Diagonal(d) = &self.covariance {
            if d.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: d.len() });
            }
            if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return invalid("diagonal covariance scales must be positive".into());
            }
        }
        if !self.nu.is_real() {
            match &self.domain_shift {
                None => return invalid("a complex exponent requires a domain shift".into()),
                Some(s) if s.len() != self.dim() => {
                    return Err(Error::DimensionMismatch { expected: self.dim(), found: s.len() })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Draws the curiosity `z ~ N(xi * prev_delta, σ² D)` and returns `(z, center + z)`.
pub fn propose<R: Rng + ?Sized>(
    center: &[f64],
    prev_delta: &[f64],
    sigma: f64,
    xi: f64,
    covariance: &CovarianceMode,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let z: Vec<f64> = prev_delta
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let scale = match covariance {
                CovarianceMode::Isotropic => sigma,
                CovarianceMode::Diagonal(diag) => sigma * diag[i],
            };
            let n: f64 = rng.sample(StandardNormal);
            xi * d + scale * n
        })
        .collect();
    let x = center.iter().zip(&z).map(|(c, z)| c + z).collect();
    (z, x)
}

/// One oracle query of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based query index.
    pub n: usize,
    pub x: Vec<f64>,
    pub f_value: f64,
    /// Barycenter after absorbing this query.
    pub estimate: Vec<f64>,
    pub sigma: f64,
    pub z: Vec<f64>,
    /// `F_n`; `None` for the complex barycenter, whose update is not a
    /// scalar contraction of `z`.
    pub gain: Option<f64>,
    pub best_f: f64,
}

/// Why a run stopped before its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub generator: &'static str,
    pub stream_rule: &'static str,
    /// Set when the oracle or the estimator failed; `records` then holds the
    /// steps completed before the failure and the trace is not valid.
    pub aborted: Option<Abort>,
}

impl RunTrace {
    pub fn is_valid(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn final_estimate(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.estimate.as_slice())
    }
}

enum Estimator {
    Real(BarycenterState),
    Complex { acc: ComplexAccumulator, estimate: Vec<f64> },
}

impl Estimator {
    fn estimate(&self) -> &[f64] {
        match self {
            Self::Real(s) => s.estimate(),
            Self::Complex { estimate, .. } => estimate,
        }
    }
}

/// A run in progress. [`run`] drives it to completion; stepping manually is
/// useful for inspecting intermediate state.
pub struct Search {
    config: SearchConfig,
    estimator: Estimator,
    prev_delta: Vec<f64>,
    rng: ChaCha8Rng,
    step: usize,
    best_f: f64,
    best_x: Vec<f64>,
}

impl Search {
    pub fn new(config: SearchConfig) -> Result<Self> {
        config.validate()?;
        let estimator = if config.nu.is_real() {
            Estimator::Real(BarycenterState::new(config.initial_guess.clone())?)
        } else {
            let origin = config.domain_shift.clone().expect("validated");
            Estimator::Complex {
                acc: ComplexAccumulator::with_translation(origin, config.nu)?,
                estimate: config.initial_guess.clone(),
            }
        };
        Ok(Self {
            prev_delta: vec![0.0; config.dim()],
            rng: rng::stream(config.seed, rng::PROPOSAL_STREAM),
            step: 0,
            best_f: f64::INFINITY,
            best_x: config.initial_guess.clone(),
            estimator,
            config,
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn estimate(&self) -> &[f64] {
        self.estimator.estimate()
    }

    /// The recursive state; `None` for complex-exponent runs.
    pub fn state(&self) -> Option<&BarycenterState> {
        match &self.estimator {
            Estimator::Real(s) => Some(s),
            Estimator::Complex { .. } => None,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.budget
    }

    /// Proposes, queries once and updates. On error the search state is left
    /// as it was before the call.
    pub fn step<O: Oracle + ?Sized>(&mut self, oracle: &mut O) -> Result<StepRecord> {
        if self.is_finished() {
            return Err(Error::InvalidConfig(format!("budget of {} queries exhausted", self.config.budget)));
        }
        let n = self.step + 1;
        let sigma = self.config.schedule.sigma(n);
        let (z, x) = propose(
            self.estimator.estimate(),
            &self.prev_delta,
            sigma,
            self.config.xi,
            &self.config.covariance,
            &mut self.rng,
        );
        let f_value = oracle.query(&x)?;
        let point = TestPoint::new(x, f_value)?;
        let before = self.estimator.estimate().to_vec();
        let gain = match &mut self.estimator {
            Estimator::Real(state) => Some(state.update(&point, self.config.nu)?),
            Estimator::Complex { acc, estimate } => {
                let mut next = acc.clone();
                next.accumulate(&point)?;
                *estimate = next.estimate()?;
                *acc = next;
                None
            }
        };
        let after = self.estimator.estimate();
        self.prev_delta = after.iter().zip(&before).map(|(a, b)| a - b).collect();
        if f_value < self.best_f {
            self.best_f = f_value;
            self.best_x = point.x().to_vec();
        }
        self.step = n;
        let (x, f_value) = (point.x().to_vec(), point.f_value());
        Ok(StepRecord { n, x, f_value, estimate: after.to_vec(), sigma, z, gain, best_f: self.best_f })
    }
}

/// Executes `config.budget` steps. Configuration errors are returned as
/// `Err`; oracle or estimator failures end the run early with
/// [`RunTrace::aborted`] set.
pub fn run<O: Oracle + ?Sized>(config: &SearchConfig, oracle: &mut O) -> Result<RunTrace> {
    let mut search = Search::new(config.clone())?;
    if oracle.dimension() != config.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dimension(), found: config.dim() });
    }
    let mut records = Vec::with_capacity(config.budget);
    let mut aborted = None;
    while !search.is_finished() {
        match search.step(oracle) {
            Ok(r) => records.push(r),
            Err(e) => {
                aborted = Some(Abort { step: search.steps_taken() + 1, reason: e.to_string() });
                break;
            }
        }
    }
    Ok(RunTrace {
        records,
        best_f: search.best_f,
        best_x: search.best_x,
        generator: rng::GENERATOR,
        stream_rule: rng::STREAM_RULE,
        aborted,
    })
}

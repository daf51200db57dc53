//! Benchmark presets and multi-seed runs.

use rayon::prelude::*;

use crate::barycenter::WeightExponent;
use crate::error::{Error, Result};
use crate::oracles::{with_noise, NoiseModel, Objective, ObjectiveKind};
use crate::rng::derive_seed;
use crate::search::{run, RunTrace, SearchConfig, VarianceSchedule};

/// Label mixed into a run seed to obtain its noise seed.
const NOISE_SEED_LABEL: u64 = 0x006e_6f69_7365;

/// Standard search settings for each benchmark objective.
pub fn preset(kind: ObjectiveKind, seed: u64) -> SearchConfig {
    let real = |nu| WeightExponent::real(nu).expect("positive");
    match kind {
        ObjectiveKind::Rosenbrock => SearchConfig::new(
            vec![-1.5, 1.5],
            real(4.0),
            0.6,
            VarianceSchedule::Linear { start: 2.0, end: 0.4, steps: 80 },
            80,
            seed,
        ),
        ObjectiveKind::PerturbedQuadratic => SearchConfig::new(
            vec![2.0, 2.0],
            real(1.0),
            0.8,
            VarianceSchedule::Geometric { start: 2.4, ratio: 0.966 },
            100,
            seed,
        ),
        ObjectiveKind::Canoe => SearchConfig::new(
            vec![40.0, 30.0],
            real(0.8),
            0.9,
            VarianceSchedule::Geometric { start: 1.0, ratio: 0.982 },
            300,
            seed,
        ),
        ObjectiveKind::Quadratic => SearchConfig::new(
            vec![2.0, 2.0],
            real(1.0),
            0.6,
            VarianceSchedule::Geometric { start: 1.0, ratio: 0.95 },
            100,
            seed,
        ),
    }
}

/// Outcome of one seeded run, scored on the noise-free objective.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    /// Lowest value the oracle reported.
    pub best_observed: f64,
    /// True objective at the point that produced `best_observed`.
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub final_estimate: Vec<f64>,
    /// True objective at the final barycenter.
    pub final_f: f64,
}

/// Seed of the noise stream used for a run with seed `run_seed`.
pub fn noise_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, NOISE_SEED_LABEL)
}

/// One run of `cfg`, optionally through a noisy oracle.
pub fn run_one(objective: &dyn Objective, cfg: &SearchConfig, noise: Option<NoiseModel>) -> Result<RunTrace> {
    match noise {
        Some(model) if model.sigma_w > 0.0 => run(cfg, &mut with_noise(objective, model)?),
        _ => {
            let mut oracle = objective;
            run(cfg, &mut oracle)
        }
    }
}

/// Scores a completed trace on the noise-free objective.
pub fn summarize(objective: &dyn Objective, seed: u64, trace: &RunTrace) -> Result<RunSummary> {
    if let Some(abort) = &trace.aborted {
        return Err(Error::InvalidConfig(format!("run with seed {seed} aborted at step {}: {}", abort.step, abort.reason)));
    }
    let final_estimate = trace.final_estimate().expect("budget >= 1").to_vec();
    Ok(RunSummary {
        seed,
        best_observed: trace.best_f,
        best_f: objective.value(&trace.best_x),
        final_f: objective.value(&final_estimate),
        best_x: trace.best_x.clone(),
        final_estimate,
    })
}

/// Runs `base` once per seed with the seed substituted, in parallel. With
/// `sigma_w > 0` every query is corrupted by Gaussian noise drawn from
/// [`noise_seed`] of the run seed.
pub fn run_seeds(objective: &dyn Objective, base: &SearchConfig, seeds: &[u64], sigma_w: f64) -> Result<Vec<RunSummary>> {
    base.validate()?;
    seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = base.clone();
            cfg.seed = seed;
            let trace = run_one(objective, &cfg, Some(NoiseModel { sigma_w, seed: noise_seed(seed) }))?;
            summarize(objective, seed, &trace)
        })
        .collect()
}

/// Lower quartile, median and upper quartile (linear interpolation between
/// order statistics).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("no values to summarize".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite { what: "summary value", value: f64::NAN });
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Quartiles { q1: quantile(&s, 0.25), median: quantile(&s, 0.5), q3: quantile(&s, 0.75) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::CanoeVariant;

    #[test]
    fn quartiles_of_small_sets() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        assert_eq!(quartiles(&[1.0, 2.0]).unwrap().median, 1.5);
        assert!(quartiles(&[]).is_err());
        assert!(quartiles(&[f64::NAN]).is_err());
    }

    #[test]
    fn presets_validate() {
        for k in ObjectiveKind::ALL {
            let cfg = preset(k, 1);
            cfg.validate().unwrap();
            assert_eq!(cfg.dim(), k.build(CanoeVariant::Corrected).dim());
        }
    }

    #[test]
    fn seeded_runs_are_reproducible_and_noise_is_scored_clean() {
        let obj = ObjectiveKind::Quadratic.build(CanoeVariant::Corrected);
        let cfg = preset(ObjectiveKind::Quadratic, 0);
        let a = run_seeds(obj.as_ref(), &cfg, &[1, 2, 3], 0.0).unwrap();
        let b = run_seeds(obj.as_ref(), &cfg, &[1, 2, 3], 0.0).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.best_f == r.best_observed));
        let noisy = run_seeds(obj.as_ref(), &cfg, &[1, 2, 3], 0.1).unwrap();
        for r in &noisy {
            assert_eq!(r.best_f, obj.value(&r.best_x));
            assert_ne!(r.best_f, r.best_observed);
        }
    }
}

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, ChaCha8Rng, TRIAL_BLOCK};

/// Gaussian curiosity with mean `mean` and covariance `diag(std)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ProposalDistribution {
    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Self {
        let std = vec![sigma; mean.len()];
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Diagonal of `Σ`.
    pub fn variances(&self) -> Vec<f64> {
        self.std.iter().map(|s| s * s).collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.std.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: self.std.len() });
        }
        if self.std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("proposal standard deviations must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std) {
            let n: f64 = rng.sample(StandardNormal);
            *o = m + s * n;
        }
    }
}

/// Vector-valued Monte Carlo mean with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: usize,
}

/// Matrix-valued Monte Carlo estimate with entrywise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub value: Matrix,
    pub stderr: Matrix,
    pub trials: usize,
}

/// Running mean and sum of squared deviations (Welford), mergeable.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, y: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(y) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.n += other.n;
        self
    }

    fn finish(self) -> Estimate {
        let n = self.n as f64;
        let stderr = self.m2.iter().map(|s| (s / (n - 1.0)).max(0.0).sqrt() / n.sqrt()).collect();
        Estimate { mean: self.mean, stderr, trials: self.n }
    }
}

pub(crate) fn check_trials(trials: usize) -> Result<()> {
    if trials < super::MIN_TRIALS {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo needs at least {} trials, got {trials}",
            super::MIN_TRIALS
        )));
    }
    Ok(())
}

/// Mean of `sample` over `trials` draws. Trial `t` belongs to block
/// `t / TRIAL_BLOCK`, whose stream is fixed by `seed`; blocks run in
/// parallel and are folded in order, so the result is deterministic.
pub(crate) fn mc_mean<F>(trials: usize, seed: u64, dim: usize, sample: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let parts: Vec<Welford> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::trial_block(seed, b);
            let count = TRIAL_BLOCK.min(trials - b * TRIAL_BLOCK);
            let mut acc = Welford::new(dim);
            let mut buf = vec![0.0; dim];
            for _ in 0..count {
                sample(&mut rng, &mut buf);
                acc.push(&buf);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(Welford::new(dim), Welford::merge).finish()
}

/// Mean and covariance of `sample`. The second pass replays the same streams
/// to average centered outer products, which also yields their standard
/// errors.
pub(crate) fn mc_covariance<F>(trials: usize, seed: u64, dim: usize, sample: F) -> (Estimate, MatrixEstimate)
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let mean = mc_mean(trials, seed, dim, &sample);
    let centered = mc_mean(trials, seed, dim * dim, |rng, out| {
        let mut y = vec![0.0; dim];
        sample(rng, &mut y);
        for (yi, mi) in y.iter_mut().zip(&mean.mean) {
            *yi -= mi;
        }
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = y[i] * y[j];
            }
        }
    });
    let n = trials as f64;
    let unbias = n / (n - 1.0);
    let rows = |v: &[f64], scale: f64| -> Matrix {
        let r: Vec<Vec<f64>> = v.chunks(dim).map(|c| c.iter().map(|x| x * scale).collect()).collect();
        Matrix::from_rows(&r).expect("square")
    };
    let cov = MatrixEstimate {
        value: rows(&centered.mean, unbias),
        stderr: rows(&centered.stderr, unbias),
        trials,
    };
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let dist = ProposalDistribution { mean: vec![1.0, -2.0], std: vec![0.5, 2.0] };
        let (mean, cov) = mc_covariance(200_000, 3, 2, |rng, out| dist.draw(rng, out));
        for i in 0..2 {
            assert!((mean.mean[i] - dist.mean[i]).abs() < 4.0 * mean.stderr[i]);
            let var = cov.value[(i, i)];
            assert!((var - dist.std[i].powi(2)).abs() < 4.0 * cov.stderr[(i, i)], "{var}");
        }
        assert!(cov.value[(0, 1)].abs() < 4.0 * cov.stderr[(0, 1)]);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let dist = ProposalDistribution::isotropic(vec![0.0; 3], 1.0);
        let run = || mc_mean(50_000, 8, 3, |rng, out| dist.draw(rng, out));
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Welford::new(1);
        data.iter().for_each(|v| whole.push(&[*v]));
        let (mut a, mut b) = (Welford::new(1), Welford::new(1));
        data[..313].iter().for_each(|v| a.push(&[*v]));
        data[313..].iter().for_each(|v| b.push(&[*v]));
        let merged = a.merge(b);
        assert!((merged.mean[0] - whole.mean[0]).abs() < 1e-12);
        assert!((merged.m2[0] - whole.m2[0]).abs() < 1e-9);
    }
}

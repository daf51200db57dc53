use rand::Rng;
use rand_distr::StandardNormal;

use crate::barycenter::TestPoint;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::derive_seed;

use super::montecarlo::{check_trials, mc_covariance, Estimate, MatrixEstimate};
use super::report::{Component, Criterion, McReport};

/// Largest `nu * sigma_w` the first-order noise predictions are checked at.
pub const NOISE_VALIDITY_LIMIT: f64 = 0.1;

/// Noise-free aggregates of a fixed point sequence:
/// `m̄ = Σ e^{-νf}`, `m̿ = Σ e^{-2νf}`, `η̄ = Σ x e^{-νf} / m̄`,
/// `η̿ = Σ x e^{-2νf} / m̿`, `η̆ = Σ x xᵀ e^{-2νf} / m̿`.
///
/// The masses may underflow for large `f`; their logarithms and the ratio
/// `m̿ / m̄²` are computed from shifted sums and stay accurate.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMoments {
    pub m_bar: f64,
    pub m_bbar: f64,
    pub log_m_bar: f64,
    pub log_m_bbar: f64,
    pub eta_bar: Vec<f64>,
    pub eta_bbar: Vec<f64>,
    pub eta_breve: Matrix,
    mass_ratio: f64,
}

impl NoiseMoments {
    /// `m̿ / m̄²`.
    pub fn mass_ratio(&self) -> f64 {
        self.mass_ratio
    }

    /// `η̄ + (m̿/m̄²)(η̄ - η̿) ν² σ²`.
    pub fn predicted_mean(&self, nu: f64, sigma_w: f64) -> Vec<f64> {
        let k = self.mass_ratio * (nu * sigma_w).powi(2);
        self.eta_bar.iter().zip(&self.eta_bbar).map(|(a, b)| a + k * (a - b)).collect()
    }

    /// `(m̿/m̄²)(η̄η̄ᵀ - η̄η̿ᵀ - η̿η̄ᵀ + η̆) ν² σ²`.
    pub fn predicted_covariance(&self, nu: f64, sigma_w: f64) -> Matrix {
        let k = self.mass_ratio * (nu * sigma_w).powi(2);
        let (a, b) = (&self.eta_bar, &self.eta_bbar);
        Matrix::outer(a, a)
            .sub(&Matrix::outer(a, b))
            .sub(&Matrix::outer(b, a))
            .add(&self.eta_breve)
            .scale(k)
    }
}

fn check_points(points: &[TestPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyPoints)?;
    let dim = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
    }
    Ok(dim)
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidExponent { re: nu, im: 0.0 });
    }
    Ok(())
}

/// Barycenter of `xs` under values `fs`, written into `out`.
fn weighted_mean(xs: &[&[f64]], fs: &[f64], nu: f64, out: &mut [f64]) {
    let fmin = fs.iter().copied().fold(f64::INFINITY, f64::min);
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut den = 0.0;
    for (x, f) in xs.iter().zip(fs) {
        let w = (-nu * (f - fmin)).exp();
        den += w;
        for (o, xi) in out.iter_mut().zip(x.iter()) {
            *o += w * xi;
        }
    }
    out.iter_mut().for_each(|o| *o /= den);
}

pub fn noise_moments(points: &[TestPoint], nu: f64) -> Result<NoiseMoments> {
    let dim = check_points(points)?;
    check_nu(nu)?;
    let xs: Vec<&[f64]> = points.iter().map(TestPoint::x).collect();
    let fs: Vec<f64> = points.iter().map(TestPoint::f_value).collect();
    let fmin = fs.iter().copied().fold(f64::INFINITY, f64::min);

    let mut eta_bar = vec![0.0; dim];
    weighted_mean(&xs, &fs, nu, &mut eta_bar);
    let mut eta_bbar = vec![0.0; dim];
    weighted_mean(&xs, &fs, 2.0 * nu, &mut eta_bbar);

    let (mut s1, mut s2) = (0.0, 0.0);
    let mut breve = Matrix::zeros(dim, dim);
    for (x, f) in xs.iter().zip(&fs) {
        let a = (-nu * (f - fmin)).exp();
        s1 += a;
        s2 += a * a;
        breve = breve.add(&Matrix::outer(x, x).scale(a * a));
    }
    let log_m_bar = s1.ln() - nu * fmin;
    let log_m_bbar = s2.ln() - 2.0 * nu * fmin;
    Ok(NoiseMoments {
        m_bar: log_m_bar.exp(),
        m_bbar: log_m_bbar.exp(),
        log_m_bar,
        log_m_bbar,
        eta_bar,
        eta_bbar,
        eta_breve: breve.scale(1.0 / s2),
        mass_ratio: s2 / (s1 * s1),
    })
}

/// Monte Carlo mean and covariance of the barycenter when each value is
/// observed as `f_i + sigma_w w_i`, `w_i ~ N(0, 1)` i.i.d., points fixed.
pub fn noisy_barycenter_statistics(
    points: &[TestPoint],
    nu: f64,
    sigma_w: f64,
    trials: usize,
    seed: u64,
) -> Result<(Estimate, MatrixEstimate)> {
    let dim = check_points(points)?;
    check_nu(nu)?;
    check_trials(trials)?;
    if !(sigma_w >= 0.0) || !sigma_w.is_finite() {
        return Err(Error::InvalidConfig(format!("noise level must be >= 0, got {sigma_w}")));
    }
    let xs: Vec<&[f64]> = points.iter().map(TestPoint::x).collect();
    let fs: Vec<f64> = points.iter().map(TestPoint::f_value).collect();
    Ok(mc_covariance(trials, seed, dim, |rng, out| {
        let noisy: Vec<f64> = fs
            .iter()
            .map(|f| {
                let w: f64 = rng.sample(StandardNormal);
                f + sigma_w * w
            })
            .collect();
        weighted_mean(&xs, &noisy, nu, out);
    }))
}

fn check_regime(nu: f64, sigma_w: f64) -> Result<()> {
    if nu * sigma_w > NOISE_VALIDITY_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "nu * sigma_w = {} exceeds the first-order validity limit {NOISE_VALIDITY_LIMIT}",
            nu * sigma_w
        )));
    }
    Ok(())
}

/// Five points in the plane with one clear winner; `η̄ ≠ η̿` and a bias of
/// roughly 0.035 per-trial standard deviations at `ν = 1`, `σ = 0.05`.
pub fn theorem4_fixture() -> Vec<TestPoint> {
    [([3.0, 3.0], 0.0), ([0.0, 1.0], 3.0), ([2.0, 1.0], 3.0), ([2.0, 2.0], 3.0), ([2.0, 0.0], 3.0)]
        .into_iter()
        .map(|(x, f)| TestPoint::new(x.to_vec(), f).expect("finite fixture"))
        .collect()
}

/// Noisy barycenter mean against `η̄ + (m̿/m̄²)(η̄ - η̿)ν²σ²` (3 standard
/// errors per component) and covariance against its first-order form
/// (relative Frobenius error at most 15%).
pub fn check_theorem4(points: &[TestPoint], nu: f64, sigma_w: f64, trials: usize, seed: u64) -> Result<(McReport, McReport)> {
    check_regime(nu, sigma_w)?;
    let moments = noise_moments(points, nu)?;
    let (mean, cov) = noisy_barycenter_statistics(points, nu, sigma_w, trials, seed)?;
    let pred_mean = moments.predicted_mean(nu, sigma_w);
    let pred_cov = moments.predicted_covariance(nu, sigma_w);

    let label = format!("nu={nu} sigma_w={sigma_w}");
    let mut mean_rep = McReport::new(format!("noisy mean [{label}]"), trials, vec![seed]);
    for (k, ((m, se), p)) in mean.mean.iter().zip(&mean.stderr).zip(&pred_mean).enumerate() {
        mean_rep.push(Component::z_score(format!("x{}", k + 1), *m, *se, *p, 3.0));
    }

    let mut cov_rep = McReport::new(format!("noisy covariance [{label}]"), trials, vec![seed]);
    let n = cov.value.rows();
    for a in 0..n {
        for b in a..n {
            let mut c = Component::z_score(format!("cov[{}{}]", a + 1, b + 1), cov.value[(a, b)], cov.stderr[(a, b)], pred_cov[(a, b)], 0.0);
            c.criterion = Criterion::Info;
            cov_rep.push(c);
        }
    }
    let (emp_norm, pred_norm) = (cov.value.frobenius_norm(), pred_cov.frobenius_norm());
    let diff = cov.value.sub(&pred_cov).frobenius_norm();
    if pred_norm > 0.0 {
        cov_rep.push(Component::new("relative frobenius error", emp_norm, 0.0, pred_norm, diff / pred_norm, Criterion::AbsAtMost(0.15)));
    } else {
        cov_rep.push(Component::new("frobenius error", emp_norm, 0.0, 0.0, diff, Criterion::AbsAtMost(0.0)));
    }
    Ok((mean_rep, cov_rep))
}

/// Projection of the empirical bias onto `η̄ - η̿`, in standard errors;
/// positive beyond 3.
pub fn check_bias_direction(points: &[TestPoint], nu: f64, sigma_w: f64, trials: usize, seed: u64) -> Result<McReport> {
    check_regime(nu, sigma_w)?;
    let moments = noise_moments(points, nu)?;
    let (mean, cov) = noisy_barycenter_statistics(points, nu, sigma_w, trials, seed)?;
    let u: Vec<f64> = moments.eta_bar.iter().zip(&moments.eta_bbar).map(|(a, b)| a - b).collect();
    if u.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidConfig("bias direction is undefined when the two noise-free barycenters coincide".into()));
    }
    let bias: Vec<f64> = mean.mean.iter().zip(&moments.eta_bar).map(|(m, e)| m - e).collect();
    let proj = dot(&bias, &u);
    let se = (cov.value.quadratic_form(&u) / trials as f64).sqrt();
    let pred: Vec<f64> = moments.predicted_mean(nu, sigma_w).iter().zip(&moments.eta_bar).map(|(p, e)| p - e).collect();
    let mut rep = McReport::new(format!("noise bias direction [nu={nu} sigma_w={sigma_w}]"), trials, vec![seed]);
    rep.push(Component::new("bias . (eta_bar - eta_bbar)", proj, se, dot(&pred, &u), proj / se, Criterion::Exceeds(3.0)));
    Ok(rep)
}

fn ratio_se(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    (a / b) * ((sa / a).powi(2) + (sb / b).powi(2)).sqrt()
}

/// Bias and covariance measured at `sigma_w` and `sigma_w / 2` on
/// independent seeds. Both should shrink by about 4; each ratio must lie
/// in [3, 5].
pub fn check_noise_scaling(points: &[TestPoint], nu: f64, sigma_w: f64, trials: usize, seed: u64) -> Result<McReport> {
    check_regime(nu, sigma_w)?;
    let moments = noise_moments(points, nu)?;
    let u: Vec<f64> = moments.eta_bar.iter().zip(&moments.eta_bbar).map(|(a, b)| a - b).collect();
    let seeds = [derive_seed(seed, 0), derive_seed(seed, 1)];
    let mut levels = Vec::new();
    for (s, sig) in seeds.iter().zip([sigma_w, sigma_w / 2.0]) {
        let (mean, cov) = noisy_barycenter_statistics(points, nu, sig, trials, *s)?;
        let bias: Vec<f64> = mean.mean.iter().zip(&moments.eta_bar).map(|(m, e)| m - e).collect();
        let proj = dot(&bias, &u);
        let proj_se = (cov.value.quadratic_form(&u) / trials as f64).sqrt();
        let norm = cov.value.frobenius_norm();
        let norm_se = cov.stderr.frobenius_norm();
        levels.push((proj, proj_se, norm, norm_se));
    }
    let (hi, lo) = (levels[0], levels[1]);
    let mut rep = McReport::new(format!("noise scaling [nu={nu} sigma_w={sigma_w} vs {}]", sigma_w / 2.0), trials, seeds.to_vec());
    let bias_ratio = hi.0 / lo.0;
    rep.push(Component::new("bias ratio", bias_ratio, ratio_se(hi.0, hi.1, lo.0, lo.1), 4.0, bias_ratio, Criterion::Between(3.0, 5.0)));
    let cov_ratio = hi.2 / lo.2;
    rep.push(Component::new("covariance ratio", cov_ratio, ratio_se(hi.2, hi.3, lo.2, lo.3), 4.0, cov_ratio, Criterion::Between(3.0, 5.0)));
    Ok(rep)
}

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::oracles::{finite_difference_gradient, Quadratic};
use crate::rng::derive_seed;

use super::gain::GainContext;
use super::montecarlo::{check_trials, mc_covariance, mc_mean, Estimate, MatrixEstimate, ProposalDistribution};
use super::report::{Component, Criterion, McReport};

/// Prior mass as a multiple of `exp(-nu f(x̂))` used by the built-in
/// scenarios. With ratio 4 a test at the prior estimate gets gain 1/5.
pub const DEFAULT_PRIOR_MASS_RATIO: f64 = 4.0;

/// Where `∇f` comes from in the predicted mean step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientSource {
    Analytic,
    /// Central differences with the given step; used only when no analytic
    /// gradient exists.
    FiniteDifference { step: f64 },
}

fn check_dims(ctx: &GainContext<'_>, dist: &ProposalDistribution) -> Result<()> {
    dist.validate()?;
    if dist.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch { expected: ctx.dim(), found: dist.dim() });
    }
    Ok(())
}

/// Brute-force `E[F(z) z]`.
pub fn empirical_mean_step(ctx: &GainContext<'_>, dist: &ProposalDistribution, trials: usize, seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    check_dims(ctx, dist)?;
    Ok(mc_mean(trials, seed, ctx.dim(), |rng, out| {
        dist.draw(rng, out);
        let f = ctx.gain(out);
        out.iter_mut().for_each(|v| *v *= f);
    }))
}

/// `E[F] z̄ - nu Σ E[F̄ ∇f(x̂ + z)]`, both expectations by Monte Carlo.
pub fn predicted_mean_step(
    ctx: &GainContext<'_>,
    dist: &ProposalDistribution,
    trials: usize,
    seed: u64,
    gradient: GradientSource,
) -> Result<Estimate> {
    check_trials(trials)?;
    check_dims(ctx, dist)?;
    let obj = ctx.objective();
    let grad = |x: &[f64]| -> Vec<f64> {
        match gradient {
            GradientSource::Analytic => obj.gradient(x).expect("checked above"),
            GradientSource::FiniteDifference { step } => {
                obj.gradient(x).unwrap_or_else(|| finite_difference_gradient(obj, x, step))
            }
        }
    };
    if gradient == GradientSource::Analytic && obj.gradient(ctx.prior_estimate()).is_none() {
        return Err(Error::GradientUnavailable(obj.name().to_string()));
    }
    if let GradientSource::FiniteDifference { step } = gradient {
        if !(step > 0.0) {
            return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {step}")));
        }
    }
    let var = dist.variances();
    let nu = ctx.nu();
    Ok(mc_mean(trials, seed, ctx.dim(), |rng, out| {
        dist.draw(rng, out);
        let (f, fbar) = ctx.gains(out);
        let g = grad(&ctx.test_point(out));
        for i in 0..out.len() {
            out[i] = f * dist.mean[i] - nu * var[i] * fbar * g[i];
        }
    }))
}

/// Brute-force covariance of `F(z) z`.
pub fn empirical_variance_step(ctx: &GainContext<'_>, dist: &ProposalDistribution, trials: usize, seed: u64) -> Result<MatrixEstimate> {
    check_trials(trials)?;
    check_dims(ctx, dist)?;
    Ok(mc_covariance(trials, seed, ctx.dim(), |rng, out| {
        dist.draw(rng, out);
        let f = ctx.gain(out);
        out.iter_mut().for_each(|v| *v *= f);
    })
    .1)
}

/// `Σ E[F²] - 2 nu Σ E[F F̄ ∇²f(x̂ + z)] Σ` for a centered proposal.
pub fn predicted_variance_step(ctx: &GainContext<'_>, dist: &ProposalDistribution, trials: usize, seed: u64) -> Result<MatrixEstimate> {
    check_trials(trials)?;
    check_dims(ctx, dist)?;
    if dist.mean.iter().any(|m| *m != 0.0) {
        return Err(Error::InvalidConfig("predicted variance step needs a zero-mean proposal".into()));
    }
    let obj = ctx.objective();
    if obj.hessian(ctx.prior_estimate()).is_none() {
        return Err(Error::HessianUnavailable(obj.name().to_string()));
    }
    let n = ctx.dim();
    let var = dist.variances();
    let nu = ctx.nu();
    let est = mc_mean(trials, seed, n * n, |rng, out| {
        let mut z = vec![0.0; n];
        dist.draw(rng, &mut z);
        let (f, fbar) = ctx.gains(&z);
        let h = obj.hessian(&ctx.test_point(&z)).expect("checked above");
        for a in 0..n {
            for b in 0..n {
                let diag = if a == b { var[a] * f * f } else { 0.0 };
                out[a * n + b] = diag - 2.0 * nu * var[a] * var[b] * f * fbar * h[(a, b)];
            }
        }
    });
    let to_matrix = |v: &[f64]| Matrix::from_rows(&v.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>()).expect("square");
    Ok(MatrixEstimate { value: to_matrix(&est.mean), stderr: to_matrix(&est.stderr), trials })
}

/// One quadratic setting for the mean-step comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanStepScenario {
    pub label: String,
    pub hessian: Matrix,
    pub center: Vec<f64>,
    pub estimate: Vec<f64>,
    pub nu: f64,
    pub sigma: f64,
    pub z_mean: Vec<f64>,
    pub prior_mass_ratio: f64,
}

impl MeanStepScenario {
    fn objective(&self) -> Result<Quadratic> {
        Quadratic::new(self.hessian.clone(), self.center.clone())
    }
}

/// H ∈ {I, diag(4,1)}, x̂ ∈ {(1,1), (2,0)}, ν ∈ {0.5, 1}, σ ∈ {0.05, 0.1},
/// z̄ ∈ {0, (0.06, 0)}.
pub fn theorem1_grid() -> Vec<MeanStepScenario> {
    let mut out = Vec::new();
    for (hname, h) in [("I", Matrix::identity(2)), ("diag(4,1)", Matrix::diagonal(&[4.0, 1.0]))] {
        for xhat in [[1.0, 1.0], [2.0, 0.0]] {
            for nu in [0.5, 1.0] {
                for sigma in [0.05, 0.1] {
                    for zbar in [[0.0, 0.0], [0.06, 0.0]] {
                        out.push(MeanStepScenario {
                            label: format!("H={hname} xhat={xhat:?} nu={nu} sigma={sigma} zbar={zbar:?}"),
                            hessian: h.clone(),
                            center: vec![0.0, 0.0],
                            estimate: xhat.to_vec(),
                            nu,
                            sigma,
                            z_mean: zbar.to_vec(),
                            prior_mass_ratio: DEFAULT_PRIOR_MASS_RATIO,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Empirical against predicted mean step, per component within 3 combined
/// standard errors. The two estimators draw from independent seeds.
pub fn check_theorem1(scenarios: &[MeanStepScenario], trials: usize, seed: u64) -> Result<Vec<McReport>> {
    scenarios
        .iter()
        .enumerate()
        .map(|(i, sc)| {
            let obj = sc.objective()?;
            let ctx = GainContext::with_prior_mass_ratio(&obj, sc.estimate.clone(), sc.prior_mass_ratio, sc.nu)?;
            let dist = ProposalDistribution::isotropic(sc.z_mean.clone(), sc.sigma);
            let (s_emp, s_pred) = (derive_seed(seed, 2 * i as u64), derive_seed(seed, 2 * i as u64 + 1));
            let emp = empirical_mean_step(&ctx, &dist, trials, s_emp)?;
            let pred = predicted_mean_step(&ctx, &dist, trials, s_pred, GradientSource::Analytic)?;
            let mut report = McReport::new(format!("mean step [{}]", sc.label), trials, vec![s_emp, s_pred]);
            for k in 0..emp.mean.len() {
                let se = emp.stderr[k].hypot(pred.stderr[k]);
                report.push(Component::z_score(format!("x{}", k + 1), emp.mean[k], se, pred.mean[k], 3.0));
            }
            Ok(report)
        })
        .collect()
}

/// A quadratic evaluated at its own minimum with a centered proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScenario {
    pub label: String,
    pub hessian: Matrix,
    pub nu: f64,
    pub sigma: f64,
    pub prior_mass_ratio: f64,
}

impl VarianceScenario {
    pub fn scalar(h: f64, nu: f64, sigma: f64) -> Self {
        Self {
            label: format!("h={h} nu={nu} sigma={sigma}"),
            hessian: Matrix::diagonal(&[h]),
            nu,
            sigma,
            prior_mass_ratio: DEFAULT_PRIOR_MASS_RATIO,
        }
    }

    fn run<T>(&self, op: impl FnOnce(&GainContext<'_>, &ProposalDistribution) -> Result<T>) -> Result<T> {
        let n = self.hessian.rows();
        let obj = Quadratic::new(self.hessian.clone(), vec![0.0; n])?;
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0; n], self.prior_mass_ratio, self.nu)?;
        op(&ctx, &ProposalDistribution::isotropic(vec![0.0; n], self.sigma))
    }

    pub fn empirical(&self, trials: usize, seed: u64) -> Result<MatrixEstimate> {
        self.run(|ctx, dist| empirical_variance_step(ctx, dist, trials, seed))
    }

    pub fn predicted(&self, trials: usize, seed: u64) -> Result<MatrixEstimate> {
        self.run(|ctx, dist| predicted_variance_step(ctx, dist, trials, seed))
    }
}

/// Minimum-point scenarios for the variance comparison: h = 4 at
/// σ ∈ {0.05, 0.1} and a 2-D anisotropic case.
pub fn theorem2_scenarios() -> Vec<VarianceScenario> {
    let mut aniso = VarianceScenario::scalar(0.0, 1.0, 0.05);
    aniso.hessian = Matrix::diagonal(&[4.0, 1.0]);
    aniso.label = "H=diag(4,1) nu=1 sigma=0.05".into();
    vec![VarianceScenario::scalar(4.0, 1.0, 0.05), VarianceScenario::scalar(4.0, 1.0, 0.1), aniso]
}

/// h ∈ (1, 4, 16) at ν = 1, σ = 0.05.
pub fn theorem2_h_ladder() -> Vec<VarianceScenario> {
    [1.0, 4.0, 16.0].iter().map(|&h| VarianceScenario::scalar(h, 1.0, 0.05)).collect()
}

/// ν ∈ (0.5, 1, 2) at h = 4, σ = 0.05.
pub fn theorem2_nu_ladder() -> Vec<VarianceScenario> {
    [0.5, 1.0, 2.0].iter().map(|&nu| VarianceScenario::scalar(4.0, nu, 0.05)).collect()
}

fn relative_frobenius(emp: &Matrix, pred: &Matrix) -> f64 {
    emp.sub(pred).frobenius_norm() / pred.frobenius_norm()
}

/// Empirical against predicted step covariance: Frobenius relative error at
/// most 10%, with entrywise z-scores reported for context.
pub fn check_theorem2(scenarios: &[VarianceScenario], trials: usize, seed: u64) -> Result<Vec<McReport>> {
    scenarios
        .iter()
        .enumerate()
        .map(|(i, sc)| {
            let (s_emp, s_pred) = (derive_seed(seed, 2 * i as u64), derive_seed(seed, 2 * i as u64 + 1));
            let emp = sc.empirical(trials, s_emp)?;
            let pred = sc.predicted(trials, s_pred)?;
            let mut report = McReport::new(format!("step variance [{}]", sc.label), trials, vec![s_emp, s_pred]);
            let n = emp.value.rows();
            for a in 0..n {
                for b in a..n {
                    let se = emp.stderr[(a, b)].hypot(pred.stderr[(a, b)]);
                    let mut c = Component::z_score(format!("cov[{}{}]", a + 1, b + 1), emp.value[(a, b)], se, pred.value[(a, b)], 0.0);
                    c.criterion = Criterion::Info;
                    report.push(c);
                }
            }
            let rel = relative_frobenius(&emp.value, &pred.value);
            report.push(Component::new(
                "relative frobenius error",
                emp.value.frobenius_norm(),
                0.0,
                pred.value.frobenius_norm(),
                rel,
                Criterion::AbsAtMost(0.10),
            ));
            Ok(report)
        })
        .collect()
}

fn trace_estimate(m: &MatrixEstimate) -> (f64, f64) {
    let n = m.value.rows();
    let t = (0..n).map(|i| m.value[(i, i)]).sum();
    let se = (0..n).map(|i| m.stderr[(i, i)].powi(2)).sum::<f64>().sqrt();
    (t, se)
}

/// Empirical variance (trace of the step covariance) must decrease along
/// the ladder. Each consecutive pair passes when
/// `(v_k - k·se_k) - (v_{k+1} + k·se_{k+1}) > 0` with `k = separation`;
/// `separation = 0` is a plain strict decrease, `3` demands
/// non-overlapping 3-standard-error intervals.
pub fn check_variance_ladder(ladder: &[VarianceScenario], trials: usize, seed: u64, separation: f64) -> Result<McReport> {
    let seeds: Vec<u64> = (0..ladder.len()).map(|i| derive_seed(seed, i as u64)).collect();
    let vars = ladder
        .iter()
        .zip(&seeds)
        .map(|(sc, &s)| sc.empirical(trials, s).map(|m| trace_estimate(&m)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = McReport::new(format!("variance ladder ({separation} se separation)"), trials, seeds);
    for (sc, &(v, se)) in ladder.iter().zip(&vars) {
        report.push(Component::new(format!("var [{}]", sc.label), v, se, f64::NAN, v, Criterion::Info));
    }
    for k in 1..ladder.len() {
        let ((a, sa), (b, sb)) = (vars[k - 1], vars[k]);
        report.push(Component::new(
            format!("decrease [{}] -> [{}]", ladder[k - 1].label, ladder[k].label),
            b,
            sb,
            a,
            (a - separation * sa) - (b + separation * sb),
            Criterion::Exceeds(0.0),
        ));
    }
    Ok(report)
}

/// On a flat objective the gain is the constant `1/(1+r)` and the step
/// variance is exactly `F² σ²`: no reduction.
pub fn check_flat_baseline(nu: f64, sigma: f64, prior_mass_ratio: f64, trials: usize, seed: u64) -> Result<McReport> {
    let obj = crate::oracles::Constant { dim: 1, value: 0.0 };
    let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0], prior_mass_ratio, nu)?;
    let dist = ProposalDistribution::isotropic(vec![0.0], sigma);
    let emp = empirical_variance_step(&ctx, &dist, trials, seed)?;
    let f = 1.0 / (1.0 + prior_mass_ratio);
    let mut report = McReport::new(format!("flat baseline variance [nu={nu} sigma={sigma}]"), trials, vec![seed]);
    report.push(Component::z_score("var", emp.value[(0, 0)], emp.stderr[(0, 0)], f * f * sigma * sigma, 3.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{Constant, Objective, PerturbedQuadratic};

    const N: usize = 100_000;

    #[test]
    fn constant_objective_centered_step_is_zero() {
        let obj = Constant { dim: 2, value: 3.0 };
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![1.0, 2.0], 2.0, 1.0).unwrap();
        let est = empirical_mean_step(&ctx, &ProposalDistribution::isotropic(vec![0.0, 0.0], 0.1), N, 1).unwrap();
        for k in 0..2 {
            assert!(est.mean[k].abs() <= 3.0 * est.stderr[k]);
        }
    }

    #[test]
    fn constant_objective_step_is_gain_times_mean() {
        let obj = Constant { dim: 2, value: -1.0 };
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0, 0.0], 3.0, 2.0).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.3, -0.2], 0.1);
        let est = empirical_mean_step(&ctx, &dist, N, 2).unwrap();
        let pred = predicted_mean_step(&ctx, &dist, N, 3, GradientSource::Analytic).unwrap();
        for k in 0..2 {
            let exact = 0.25 * dist.mean[k];
            assert!((est.mean[k] - exact).abs() <= 3.0 * est.stderr[k]);
            assert!((pred.mean[k] - exact).abs() < 1e-15);
            assert!(pred.stderr[k] < 1e-15);
        }
    }

    #[test]
    fn quadratic_step_points_downhill() {
        let obj = Quadratic::scalar(2.0, 0.0);
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![1.0], 4.0, 1.0).unwrap();
        let est = empirical_mean_step(&ctx, &ProposalDistribution::isotropic(vec![0.0], 0.1), N, 4).unwrap();
        let z = est.mean[0] / est.stderr[0];
        assert!(z < -5.0, "z = {z}");
    }

    #[test]
    fn symmetric_minimum_prediction_vanishes() {
        let obj = Quadratic::scalar(4.0, 0.0);
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0], 4.0, 1.0).unwrap();
        let pred = predicted_mean_step(&ctx, &ProposalDistribution::isotropic(vec![0.0], 0.1), N, 5, GradientSource::Analytic).unwrap();
        assert!(pred.mean[0].abs() <= 3.0 * pred.stderr[0]);
    }

    #[test]
    fn anisotropic_prediction_matches_brute_force() {
        let obj = Quadratic::new(Matrix::diagonal(&[4.0, 1.0]), vec![0.0, 0.0]).unwrap();
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![1.0, 1.0], 4.0, 1.0).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.0, 0.0], 0.1);
        let emp = empirical_mean_step(&ctx, &dist, N, 6).unwrap();
        let pred = predicted_mean_step(&ctx, &dist, N, 7, GradientSource::Analytic).unwrap();
        for k in 0..2 {
            let se = emp.stderr[k].hypot(pred.stderr[k]);
            assert!((emp.mean[k] - pred.mean[k]).abs() <= 3.0 * se, "{k}: {emp:?} {pred:?}");
        }
    }

    #[test]
    fn gradient_sources() {
        let ctx = GainContext::with_prior_mass_ratio(&PerturbedQuadratic, vec![0.5, 0.5], 4.0, 1.0).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.0, 0.0], 0.05);
        assert!(matches!(
            predicted_mean_step(&ctx, &dist, 2000, 1, GradientSource::Analytic),
            Err(Error::GradientUnavailable(_))
        ));
        assert!(predicted_mean_step(&ctx, &dist, 2000, 1, GradientSource::FiniteDifference { step: 1e-6 }).is_ok());
        assert!(matches!(
            predicted_mean_step(&ctx, &dist, 2000, 1, GradientSource::FiniteDifference { step: 0.0 }),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(empirical_mean_step(&ctx, &dist, 999, 1), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn finite_difference_prediction_agrees_with_analytic() {
        let obj = Quadratic::new(Matrix::diagonal(&[4.0, 1.0]), vec![0.0, 0.0]).unwrap();
        struct NoGrad<'a>(&'a Quadratic);
        impl Objective for NoGrad<'_> {
            fn name(&self) -> &str {
                "no-grad"
            }
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &[f64]) -> f64 {
                self.0.value(x)
            }
        }
        let wrapped = NoGrad(&obj);
        let dist = ProposalDistribution::isotropic(vec![0.0, 0.0], 0.1);
        let a = GainContext::with_prior_mass_ratio(&obj, vec![1.0, 1.0], 4.0, 1.0).unwrap();
        let b = GainContext::with_prior_mass_ratio(&wrapped, vec![1.0, 1.0], 4.0, 1.0).unwrap();
        let pa = predicted_mean_step(&a, &dist, 5000, 9, GradientSource::Analytic).unwrap();
        let pb = predicted_mean_step(&b, &dist, 5000, 9, GradientSource::FiniteDifference { step: 1e-5 }).unwrap();
        for k in 0..2 {
            assert!((pa.mean[k] - pb.mean[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn flat_prediction_is_exact_variance() {
        let obj = Constant { dim: 2, value: 0.0 };
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0, 0.0], 1.0, 1e-9).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.0, 0.0], 0.1);
        let pred = predicted_variance_step(&ctx, &dist, 2000, 1).unwrap();
        assert!((pred.value[(0, 0)] - 0.25 * 0.01).abs() < 1e-15);
        assert!((pred.value[(1, 1)] - 0.25 * 0.01).abs() < 1e-15);
        assert_eq!(pred.value[(0, 1)], 0.0);
        assert!(check_flat_baseline(1.0, 0.1, 4.0, N, 3).unwrap().pass());
    }

    #[test]
    fn variance_reduction_at_minimum() {
        for sigma in [0.05, 0.1] {
            let sc = VarianceScenario::scalar(4.0, 1.0, sigma);
            let pred = sc.predicted(N, 11).unwrap();
            let obj = Quadratic::scalar(4.0, 0.0);
            let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0], 4.0, 1.0).unwrap();
            let dist = ProposalDistribution::isotropic(vec![0.0], sigma);
            let ef2 = mc_mean(N, 11, 1, |rng, out| {
                dist.draw(rng, out);
                out[0] = ctx.gain(out).powi(2);
            });
            assert!(pred.value[(0, 0)] < sigma * sigma * ef2.mean[0]);
        }
    }

    #[test]
    fn variance_prediction_rejects_offset_proposal_and_missing_hessian() {
        let obj = Quadratic::scalar(1.0, 0.0);
        let ctx = GainContext::with_prior_mass_ratio(&obj, vec![0.0], 4.0, 1.0).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.1], 0.1);
        assert!(matches!(predicted_variance_step(&ctx, &dist, 2000, 1), Err(Error::InvalidConfig(_))));
        let ctx = GainContext::with_prior_mass_ratio(&PerturbedQuadratic, vec![0.0, 0.0], 4.0, 1.0).unwrap();
        let dist = ProposalDistribution::isotropic(vec![0.0, 0.0], 0.1);
        assert!(matches!(predicted_variance_step(&ctx, &dist, 2000, 1), Err(Error::HessianUnavailable(_))));
    }

    #[test]
    fn grid_shape() {
        let grid = theorem1_grid();
        assert_eq!(grid.len(), 32);
        assert!(grid.iter().any(|s| s.z_mean == [0.06, 0.0]));
    }
}

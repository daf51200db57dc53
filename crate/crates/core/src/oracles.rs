//! Objective functions and the oracle interface the search queries.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, OracleError, Result};
use crate::linalg::Matrix;
use crate::rng::{self, ChaCha8Rng};

/// A deterministic objective `x -> f(x)` with optional derivative and
/// optimum metadata.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Raw function value. Callers should go through
    /// [`evaluate`](Self::evaluate), which validates input and output.
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    fn minimum(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, OracleError> {
        if x.len() != self.dim() {
            return Err(OracleError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let value = self.value(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(OracleError::NonFinite { value, x: x.to_vec() })
        }
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        (**self).hessian(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        (**self).minimizer()
    }
    fn minimum(&self) -> Option<f64> {
        (**self).minimum()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        (**self).hessian(x)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        (**self).minimizer()
    }
    fn minimum(&self) -> Option<f64> {
        (**self).minimum()
    }
}

/// Zeroth-order oracle: answers one query at a time and may carry state
/// (a noise stream, a simulation, a Python callback).
pub trait Oracle {
    fn dimension(&self) -> usize;

    fn query(&mut self, x: &[f64]) -> Result<f64, OracleError>;
}

impl<T: Objective + ?Sized> Oracle for T {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn query(&mut self, x: &[f64]) -> Result<f64, OracleError> {
        self.evaluate(x)
    }
}

/// `100 (x^2 - y)^2 + (1 - x)^2`, minimum 0 at (1, 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        100.0 * (a * a - b).powi(2) + (1.0 - a).powi(2)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (a, b) = (x[0], x[1]);
        let r = a * a - b;
        Some(vec![400.0 * r * a - 2.0 * (1.0 - a), -200.0 * r])
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![1.0, 1.0])
    }
    fn minimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Quadratic `10x^2 + 2y^2 + 4xy` with high-frequency cosine ripples.
///
/// The quadratic part stays positive definite under the ripple, so the
/// function is nonnegative everywhere; its exact minimizer is not known in
/// closed form, only that it lies close to the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerturbedQuadratic;

impl PerturbedQuadratic {
    fn ripple(t: f64) -> f64 {
        1.0 + (75.0 / 100.0) * (70.0 * t).cos() / 12.0
    }
}

impl Objective for PerturbedQuadratic {
    fn name(&self) -> &str {
        "perturbed_quadratic"
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        10.0 * a * a * Self::ripple(a)
            + (100.0 * a).cos().powi(2) / 24.0
            + 2.0 * b * b * Self::ripple(b)
            + (100.0 * b).cos().powi(2) / 24.0
            + 4.0 * a * b
    }
}

/// Which form of the canoe function's radial factor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CanoeVariant {
    /// `1 - exp(-|x|^2)`: bounded below, minimum 0 at the origin.
    #[default]
    Corrected,
    /// `1 - exp(|x|^2)` exactly as it is usually printed; unbounded below and
    /// non-finite beyond `|x|^2 ≈ 709`.
    AsPrinted,
}

/// Nonsmooth "canoe" function `(1 - e^{-|x|^2}) max(|x - c|^2, |x - d|^2)`
/// with `c = -d = (30, 40)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Canoe {
    pub variant: CanoeVariant,
}

impl Canoe {
    pub const C: [f64; 2] = [30.0, 40.0];

    pub fn as_printed() -> Self {
        Self { variant: CanoeVariant::AsPrinted }
    }
}

impl Objective for Canoe {
    fn name(&self) -> &str {
        match self.variant {
            CanoeVariant::Corrected => "canoe",
            CanoeVariant::AsPrinted => "canoe_as_printed",
        }
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let to_c = (x[0] - Self::C[0]).powi(2) + (x[1] - Self::C[1]).powi(2);
        let to_d = (x[0] + Self::C[0]).powi(2) + (x[1] + Self::C[1]).powi(2);
        let radial = match self.variant {
            CanoeVariant::Corrected => -(-r2).exp_m1(),
            CanoeVariant::AsPrinted => -r2.exp_m1(),
        };
        radial * to_c.max(to_d)
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        match self.variant {
            CanoeVariant::Corrected => Some(vec![0.0, 0.0]),
            CanoeVariant::AsPrinted => None,
        }
    }
    fn minimum(&self) -> Option<f64> {
        self.minimizer().map(|_| 0.0)
    }
}

/// `½ (x - x0)ᵀ H (x - x0)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: Matrix,
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(hessian: Matrix, center: Vec<f64>) -> Result<Self> {
        if !hessian.is_square() || hessian.rows() != center.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), found: hessian.rows() });
        }
        if !hessian.is_symmetric(1e-12 * hessian.frobenius_norm().max(1.0)) {
            return Err(Error::InvalidConfig("quadratic Hessian must be symmetric".into()));
        }
        Ok(Self { hessian, center })
    }

    /// One-dimensional `½ h (x - x0)^2`.
    pub fn scalar(h: f64, center: f64) -> Self {
        Self { hessian: Matrix::diagonal(&[h]), center: vec![center] }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| a - b).collect()
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.hessian.quadratic_form(&self.offset(x))
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.hessian.mul_vec(&self.offset(x)))
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.hessian.clone())
    }
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.hessian.is_positive_definite().then(|| self.center.clone())
    }
    fn minimum(&self) -> Option<f64> {
        self.minimizer().map(|_| 0.0)
    }
}

/// `f ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl Objective for Constant {
    fn name(&self) -> &str {
        "constant"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(self.dim, self.dim))
    }
}

/// Objectives selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Rosenbrock,
    PerturbedQuadratic,
    Canoe,
    /// Two-dimensional `½ |x|^2`.
    Quadratic,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] =
        [Self::Rosenbrock, Self::PerturbedQuadratic, Self::Canoe, Self::Quadratic];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rosenbrock => "rosenbrock",
            Self::PerturbedQuadratic => "perturbed_quadratic",
            Self::Canoe => "canoe",
            Self::Quadratic => "quadratic",
        }
    }

    pub fn build(self, canoe: CanoeVariant) -> Box<dyn Objective> {
        match self {
            Self::Rosenbrock => Box::new(Rosenbrock),
            Self::PerturbedQuadratic => Box::new(PerturbedQuadratic),
            Self::Canoe => Box::new(Canoe { variant: canoe }),
            Self::Quadratic => Box::new(Quadratic::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap()),
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownObjective(s.to_string()))
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Additive Gaussian noise `w ~ N(0, sigma_w^2)` on every query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_w: f64,
    pub seed: u64,
}

/// An objective whose answers are corrupted by i.i.d. noise. Each query
/// consumes one draw from the model's stream, in query order.
#[derive(Debug, Clone)]
pub struct Noisy<O> {
    inner: O,
    model: NoiseModel,
    rng: ChaCha8Rng,
}

pub fn with_noise<O: Objective>(inner: O, model: NoiseModel) -> Result<Noisy<O>> {
    if !(model.sigma_w >= 0.0) || !model.sigma_w.is_finite() {
        return Err(Error::InvalidConfig(format!("noise sigma_w must be >= 0, got {}", model.sigma_w)));
    }
    Ok(Noisy { inner, model, rng: rng::stream(model.seed, rng::NOISE_STREAM) })
}

impl<O: Objective> Noisy<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }
}

impl<O: Objective> Oracle for Noisy<O> {
    fn dimension(&self) -> usize {
        self.inner.dim()
    }

    fn query(&mut self, x: &[f64]) -> Result<f64, OracleError> {
        let value = self.inner.evaluate(x)?;
        let draw: f64 = StandardNormal.sample(&mut self.rng);
        if self.model.sigma_w == 0.0 {
            Ok(value)
        } else {
            Ok(value + self.model.sigma_w * draw)
        }
    }
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> Result<f64, OracleError>> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64]) -> Result<f64, OracleError>> Oracle for FnOracle<F> {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn query(&mut self, x: &[f64]) -> Result<f64, OracleError> {
        if x.len() != self.dim {
            return Err(OracleError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        (self.f)(x)
    }
}

/// Evaluates a noiseless objective at many points concurrently. Results are
/// in input order; on failure the lowest failing index is reported.
pub fn batch_evaluate<O: Objective + ?Sized>(obj: &O, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let results: Vec<Result<f64, OracleError>> = points.par_iter().map(|x| obj.evaluate(x)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|source| Error::Evaluation { index, source }))
        .collect()
}

/// Central finite-difference gradient with step `h`.
pub fn finite_difference_gradient<O: Objective + ?Sized>(obj: &O, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = obj.value(&probe);
            probe[i] = x[i] - h;
            let down = obj.value(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rosenbrock_values() {
        assert_eq!(Rosenbrock.value(&[1.0, 1.0]), 0.0);
        assert_eq!(Rosenbrock.value(&[0.0, 0.0]), 1.0);
        assert_eq!(Rosenbrock.value(&[-1.0, 1.0]), 4.0);
    }

    #[test]
    fn perturbed_quadratic_at_origin() {
        assert!((PerturbedQuadratic.value(&[0.0, 0.0]) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_quadratic_matches_term_by_term_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x: f64 = rng.random_range(-2.0..2.0);
            let y: f64 = rng.random_range(-2.0..2.0);
            // Written out independently with the constants pre-reduced.
            let expected = 10.0 * x * x + 0.625 * x * x * (70.0 * x).cos()
                + (1.0 + (200.0 * x).cos()) / 48.0
                + 2.0 * y * y + 0.125 * y * y * (70.0 * y).cos()
                + (1.0 + (200.0 * y).cos()) / 48.0
                + 4.0 * x * y;
            let got = PerturbedQuadratic.value(&[x, y]);
            assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0), "{got} vs {expected}");
        }
    }

    #[test]
    fn perturbed_quadratic_is_nonnegative_near_origin() {
        // 9.375x^2 + 1.875y^2 + 4xy is positive definite, so the displayed
        // formula cannot go negative.
        let mut min = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let x = -0.2 + 0.4 * i as f64 / 400.0;
                let y = -0.2 + 0.4 * j as f64 / 400.0;
                min = min.min(PerturbedQuadratic.value(&[x, y]));
            }
        }
        assert!((0.0..1.0 / 12.0).contains(&min), "{min}");
    }

    #[test]
    fn canoe_values() {
        let canoe = Canoe::default();
        assert_eq!(canoe.value(&[0.0, 0.0]), 0.0);
        let v = canoe.value(&[30.0, 40.0]);
        assert!((v - 10000.0).abs() < 1e-9, "{v}");
        let printed = Canoe::as_printed();
        assert_eq!(printed.value(&[0.0, 0.0]), 0.0);
        assert!(printed.value(&[0.5, 0.5]) < 0.0);
        assert!(printed.evaluate(&[30.0, 40.0]).is_err());
        assert_eq!(printed.minimizer(), None);
    }

    #[test]
    fn canoe_is_even() {
        let canoe = Canoe::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
            let a = canoe.value(&x);
            let b = canoe.value(&[-x[0], -x[1]]);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn quadratic_values_and_gradient() {
        let q = Quadratic::new(Matrix::identity(2), vec![1.0, -1.0]).unwrap();
        assert_eq!(q.value(&[1.0, -1.0]), 0.0);
        assert_eq!(q.value(&[4.0, 3.0]), 12.5);
        assert_eq!(q.minimizer(), Some(vec![1.0, -1.0]));

        let h = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let q = Quadratic::new(h, vec![0.5, 0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let g = q.gradient(&x).unwrap();
            let fd = finite_difference_gradient(&q, &x, 1e-5);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn quadratic_rejects_bad_shapes() {
        assert!(Quadratic::new(Matrix::identity(3), vec![0.0, 0.0]).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(Quadratic::new(asym, vec![0.0, 0.0]).is_err());
        let q = Quadratic::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert!(matches!(q.evaluate(&[1.0]), Err(OracleError::DimensionMismatch { .. })));
    }

    #[test]
    fn known_minimizers_beat_their_grids() {
        let cases: [(&dyn Objective, [f64; 4]); 3] = [
            (&Rosenbrock, [-2.0, 2.0, -1.0, 3.0]),
            (&Canoe::default(), [-50.0, 50.0, -50.0, 50.0]),
            (&Quadratic::new(Matrix::diagonal(&[4.0, 1.0]), vec![0.3, -0.2]).unwrap(), [-2.0, 2.0, -2.0, 2.0]),
        ];
        for (obj, [x0, x1, y0, y1]) in cases {
            let best = obj.value(&obj.minimizer().unwrap());
            assert_eq!(Some(best), obj.minimum());
            for i in 0..=100 {
                for j in 0..=100 {
                    let p = [x0 + (x1 - x0) * i as f64 / 100.0, y0 + (y1 - y0) * j as f64 / 100.0];
                    assert!(best <= obj.value(&p), "{} at {p:?}", obj.name());
                }
            }
        }
    }

    #[test]
    fn names_resolve() {
        for kind in ObjectiveKind::ALL {
            assert_eq!(kind.as_str().parse::<ObjectiveKind>().unwrap(), kind);
            assert_eq!(kind.build(CanoeVariant::Corrected).dim(), 2);
        }
        assert!(matches!("banana".parse::<ObjectiveKind>(), Err(Error::UnknownObjective(_))));
    }

    #[test]
    fn zero_noise_is_transparent() {
        let mut noisy = with_noise(Rosenbrock, NoiseModel { sigma_w: 0.0, seed: 1 }).unwrap();
        for x in [[0.0, 0.0], [1.5, -0.3], [-2.0, 4.0]] {
            assert_eq!(noisy.query(&x).unwrap(), Rosenbrock.value(&x));
        }
        assert!(with_noise(Rosenbrock, NoiseModel { sigma_w: -1.0, seed: 1 }).is_err());
    }

    #[test]
    fn noise_is_reproducible_and_unbiased() {
        let model = NoiseModel { sigma_w: 0.5, seed: 42 };
        let mut a = with_noise(Rosenbrock, model).unwrap();
        let mut b = with_noise(Rosenbrock, model).unwrap();
        let x = [0.5, 0.5];
        let fx = Rosenbrock.value(&x);
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let va = a.query(&x).unwrap();
            assert_eq!(va, b.query(&x).unwrap());
            sum += va - fx;
            sq += (va - fx).powi(2);
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{mean}");
        assert!((var / 0.25 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn batch_evaluation_is_order_independent() {
        assert!(batch_evaluate(&Rosenbrock, &[]).unwrap().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> =
            (0..10_000).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..3.0)]).collect();
        let par = batch_evaluate(&Rosenbrock, &pts).unwrap();
        let seq: Vec<f64> = pts.iter().map(|p| Rosenbrock.value(p)).collect();
        assert_eq!(par, seq);
    }

    #[test]
    fn batch_evaluation_reports_first_failure() {
        let pts = vec![vec![0.0, 0.0], vec![30.0, 40.0], vec![0.1], vec![40.0, 30.0]];
        let err = batch_evaluate(&Canoe::as_printed(), &pts).unwrap_err();
        assert!(matches!(err, Error::Evaluation { index: 1, .. }), "{err}");
    }
}

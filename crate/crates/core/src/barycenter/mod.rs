//! Exponentially weighted barycenters.
//!
//! All weights `exp(-nu * f)` are formed relative to the smallest exponent
//! seen, so the best point always carries weight exactly 1 and nothing
//! overflows. The barycenter is a ratio of weight sums, so a uniform rescale
//! leaves it unchanged.

mod complex;

pub use complex::ComplexAccumulator;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A query location together with the objective value the oracle reported.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPoint {
    x: Vec<f64>,
    f_value: f64,
}

impl TestPoint {
    pub fn new(x: Vec<f64>, f_value: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(&bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "test point coordinate", value: bad });
        }
        if !f_value.is_finite() {
            return Err(Error::NonFinite { what: "objective value", value: f_value });
        }
        Ok(Self { x, f_value })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Weighting sharpness `nu`. The real part must be positive; a nonzero
/// imaginary part selects the complex barycenter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightExponent(Complex64);

impl WeightExponent {
    pub fn real(nu: f64) -> Result<Self> {
        Self::complex(nu, 0.0)
    }

    pub fn complex(re: f64, im: f64) -> Result<Self> {
        if !(re > 0.0) || !re.is_finite() || !im.is_finite() {
            return Err(Error::InvalidExponent { re, im });
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn is_real(self) -> bool {
        self.0.im == 0.0
    }

    pub fn as_complex(self) -> Complex64 {
        self.0
    }

    /// `|nu| / Re(nu)`, the interference strength of a complex exponent.
    pub fn phase_ratio(self) -> f64 {
        self.0.norm() / self.0.re
    }

    pub(crate) fn require_real(self) -> Result<f64> {
        if self.is_real() {
            Ok(self.0.re)
        } else {
            Err(Error::ComplexExponent(self.0.im))
        }
    }
}

fn check_dims(points: &[TestPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyPoints)?;
    let dim = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
    }
    Ok(dim)
}

/// Normalized convex-combination weights `exp(-nu f_i) / sum_j exp(-nu f_j)`.
pub fn barycentric_weights(points: &[TestPoint], nu: WeightExponent) -> Result<Vec<f64>> {
    let nu = nu.require_real()?;
    check_dims(points)?;
    let f_min = points.iter().map(TestPoint::f_value).fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> =
        points.iter().map(|p| (-nu * (p.f_value - f_min)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Center of mass of `points` with weights `exp(-nu f_i)`.
pub fn batch_barycenter(points: &[TestPoint], nu: WeightExponent) -> Result<Vec<f64>> {
    let weights = barycentric_weights(points, nu)?;
    let mut out = vec![0.0; points[0].dim()];
    for (p, w) in points.iter().zip(&weights) {
        for (o, x) in out.iter_mut().zip(&p.x) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// `ln(e^a + e^b)` without overflow; `-inf` inputs are absorbed.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Running mass and estimate of the recursive barycenter.
///
/// The true mass is `m_n = exp(log_mass - shift)`, where `shift` is `nu`
/// times the smallest objective value absorbed so far. `log_mass` is
/// therefore always `>= 0` once a point has been absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterState {
    n: usize,
    log_mass: f64,
    shift: f64,
    estimate: Vec<f64>,
}

impl BarycenterState {
    /// Zero-mass state; `initial_guess` is returned by [`estimate`](Self::estimate)
    /// until the first point arrives.
    pub fn new(initial_guess: Vec<f64>) -> Result<Self> {
        if initial_guess.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(&bad) = initial_guess.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "initial guess", value: bad });
        }
        Ok(Self { n: 0, log_mass: f64::NEG_INFINITY, shift: f64::INFINITY, estimate: initial_guess })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.estimate.len()
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    /// Shifted log mass (`-inf` when empty).
    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    /// Current exponent shift, `nu * min f` (`+inf` when empty).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `ln m_n`; `-inf` for the empty state.
    pub fn log_total_mass(&self) -> f64 {
        if self.n == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_mass - self.shift
        }
    }

    /// `m_n`. Underflows to zero for large `nu * f`; prefer
    /// [`log_total_mass`](Self::log_total_mass).
    pub fn mass(&self) -> f64 {
        self.log_total_mass().exp()
    }

    /// Absorbs one point. Returns the gain `F_n = w_n / m_n`, the fraction of
    /// the way the estimate moves toward `point.x`.
    pub fn update(&mut self, point: &TestPoint, nu: WeightExponent) -> Result<f64> {
        let nu = nu.require_real()?;
        if point.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: point.dim() });
        }
        let exponent = nu * point.f_value;
        if self.n == 0 {
            self.n = 1;
            self.shift = exponent;
            self.log_mass = 0.0;
            self.estimate.copy_from_slice(&point.x);
            return Ok(1.0);
        }
        if exponent < self.shift {
            self.log_mass -= self.shift - exponent;
            self.shift = exponent;
        }
        let log_weight = self.shift - exponent;
        let log_mass = log_add_exp(self.log_mass, log_weight);
        let gain = (log_weight - log_mass).exp();
        for (e, x) in self.estimate.iter_mut().zip(&point.x) {
            *e += gain * (x - *e);
        }
        self.log_mass = log_mass;
        self.n += 1;
        Ok(gain)
    }

    /// Mass-weighted combination of two partial accumulations over disjoint
    /// point sets. An empty side contributes nothing.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if other.n == 0 {
            return Ok(self.clone());
        }
        if self.n == 0 {
            return Ok(other.clone());
        }
        let shift = self.shift.min(other.shift);
        let la = self.log_mass - (self.shift - shift);
        let lb = other.log_mass - (other.shift - shift);
        let log_mass = log_add_exp(la, lb);
        let frac = (lb - log_mass).exp();
        let estimate =
            self.estimate.iter().zip(&other.estimate).map(|(a, b)| a + frac * (b - a)).collect();
        Ok(Self { n: self.n + other.n, log_mass, shift, estimate })
    }
}

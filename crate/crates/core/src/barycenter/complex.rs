use num_complex::Complex64;

use super::{TestPoint, WeightExponent};
use crate::error::{Error, Result};

/// Smallest `|denominator|` (in shifted units) accepted by
/// [`ComplexAccumulator::estimate`].
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// Running sums of the complex barycenter.
///
/// Each point contributes the weight `exp(-nu f)` with complex `nu`; the
/// estimate is the componentwise modulus of `sum x w / sum w`. The modulus
/// only makes sense for nonnegative coordinates, so an optional translation
/// fixed at construction moves points into the nonnegative orthant before
/// accumulation and is added back to the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAccumulator {
    nu: WeightExponent,
    translation: Option<Vec<f64>>,
    numerator: Vec<Complex64>,
    denominator: Complex64,
    /// `Re(nu) * min f`: all stored sums are scaled by `exp(shift)`.
    shift: f64,
    n: usize,
}

impl ComplexAccumulator {
    pub fn new(dim: usize, nu: WeightExponent) -> Self {
        Self {
            nu,
            translation: None,
            numerator: vec![Complex64::new(0.0, 0.0); dim],
            denominator: Complex64::new(0.0, 0.0),
            shift: f64::INFINITY,
            n: 0,
        }
    }

    /// Accumulator whose points are taken relative to `origin`, typically
    /// the lower corner of the search box.
    pub fn with_translation(origin: Vec<f64>, nu: WeightExponent) -> Result<Self> {
        if let Some(&bad) = origin.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "domain shift", value: bad });
        }
        let mut acc = Self::new(origin.len(), nu);
        acc.translation = Some(origin);
        Ok(acc)
    }

    pub fn nu(&self) -> WeightExponent {
        self.nu
    }

    pub fn translation(&self) -> Option<&[f64]> {
        self.translation.as_deref()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.numerator.len()
    }

    /// Numerator sums, scaled by `exp(shift)`.
    pub fn numerator(&self) -> &[Complex64] {
        &self.numerator
    }

    /// Denominator sum, scaled by `exp(shift)`.
    pub fn denominator(&self) -> Complex64 {
        self.denominator
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn accumulate(&mut self, point: &TestPoint) -> Result<()> {
        if point.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: point.dim() });
        }
        let local: Vec<f64> = match &self.translation {
            Some(origin) => point.x().iter().zip(origin).map(|(x, o)| x - o).collect(),
            None => point.x().to_vec(),
        };
        if let Some((index, &value)) = local.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeCoordinate { index, value });
        }

        let f = point.f_value();
        let exponent = self.nu.re() * f;
        if exponent < self.shift {
            if self.n > 0 {
                let scale = (exponent - self.shift).exp();
                self.denominator *= scale;
                self.numerator.iter_mut().for_each(|c| *c *= scale);
            }
            self.shift = exponent;
        }
        let weight = Complex64::from_polar((self.shift - exponent).exp(), -self.nu.im() * f);
        self.denominator += weight;
        for (c, x) in self.numerator.iter_mut().zip(&local) {
            *c += weight * x;
        }
        self.n += 1;
        Ok(())
    }

    /// Per-component `|eta|`, translated back to the original coordinates.
    pub fn estimate(&self) -> Result<Vec<f64>> {
        let magnitude = self.denominator.norm();
        if !(magnitude >= DEGENERATE_DENOMINATOR) {
            return Err(Error::DegenerateInterference { magnitude });
        }
        let mut out: Vec<f64> = self.numerator.iter().map(|c| (c / self.denominator).norm()).collect();
        if let Some(origin) = &self.translation {
            out.iter_mut().zip(origin).for_each(|(v, o)| *v += o);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenter::batch_barycenter;

    fn tp(x: &[f64], f: f64) -> TestPoint {
        TestPoint::new(x.to_vec(), f).unwrap()
    }

    #[test]
    fn single_point_is_recovered() {
        for (re, im) in [(1.0, 0.0), (0.5, 3.0), (2.0, -7.0)] {
            let mut acc = ComplexAccumulator::new(2, WeightExponent::complex(re, im).unwrap());
            acc.accumulate(&tp(&[3.0, 4.0], 1.3)).unwrap();
            let e = acc.estimate().unwrap();
            assert!((e[0] - 3.0).abs() < 1e-14 && (e[1] - 4.0).abs() < 1e-14, "{e:?}");
        }
    }

    #[test]
    fn real_exponent_reproduces_real_barycenter() {
        let pts = [tp(&[0.5, 2.0], 0.3), tp(&[1.5, 0.0], 1.1), tp(&[4.0, 3.0], -0.4)];
        let nu = WeightExponent::real(2.0).unwrap();
        let mut acc = ComplexAccumulator::new(2, nu);
        for p in &pts {
            acc.accumulate(p).unwrap();
        }
        let real = batch_barycenter(&pts, nu).unwrap();
        let complex = acc.estimate().unwrap();
        for (a, b) in real.iter().zip(&complex) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_phase_weights_interfere() {
        // Weights 1 and -i: |1 - 2i| / |1 - i| = sqrt(5/2).
        let nu_i = 3.0;
        let nu = WeightExponent::complex(1e-300, nu_i).unwrap();
        let mut acc = ComplexAccumulator::new(1, nu);
        acc.accumulate(&tp(&[1.0], 0.0)).unwrap();
        acc.accumulate(&tp(&[2.0], std::f64::consts::FRAC_PI_2 / nu_i)).unwrap();
        let e = acc.estimate().unwrap();
        assert!((e[0] - 2.5f64.sqrt()).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn negative_coordinates_need_a_translation() {
        let nu = WeightExponent::complex(1.0, 1.0).unwrap();
        let mut acc = ComplexAccumulator::new(2, nu);
        assert!(matches!(
            acc.accumulate(&tp(&[1.0, -0.5], 0.0)),
            Err(Error::NegativeCoordinate { index: 1, .. })
        ));
        let mut shifted = ComplexAccumulator::with_translation(vec![-2.0, -2.0], nu).unwrap();
        shifted.accumulate(&tp(&[1.0, -0.5], 0.0)).unwrap();
        let e = shifted.estimate().unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] + 0.5).abs() < 1e-14);
        assert!(shifted.accumulate(&tp(&[-3.0, 0.0], 0.0)).is_err());
    }

    #[test]
    fn cancellation_is_reported() {
        // Weights 1 and -1 cancel exactly.
        let nu = WeightExponent::complex(1e-300, 1.0).unwrap();
        let mut acc = ComplexAccumulator::new(1, nu);
        assert!(matches!(acc.estimate(), Err(Error::DegenerateInterference { .. })));
        acc.accumulate(&tp(&[1.0], 0.0)).unwrap();
        acc.accumulate(&tp(&[1.0], std::f64::consts::PI)).unwrap();
        assert!(acc.denominator().norm() < 1e-15);
    }

    #[test]
    fn large_values_rescale_without_overflow() {
        let nu = WeightExponent::complex(4.0, 0.5).unwrap();
        let mut acc = ComplexAccumulator::new(1, nu);
        acc.accumulate(&tp(&[1.0], 800.0)).unwrap();
        acc.accumulate(&tp(&[2.0], -800.0)).unwrap();
        assert_eq!(acc.shift(), -3200.0);
        assert!((acc.estimate().unwrap()[0] - 2.0).abs() < 1e-12);
    }
}

use crate::error::{Error, Result};
use crate::oracles::Objective;

/// The gain functions of one barycenter step:
///
/// - `F(z) = w / (m + w)` with `w = exp(-nu f(x̂ + z))` and prior mass `m`,
/// - `F̄(z) = m w / (m + w)^2 = F(z) (1 - F(z))`,
///
/// evaluated through `s = ln m + nu f(x̂ + z)`, so `F = 1 / (1 + e^s)`.
pub struct GainContext<'a> {
    objective: &'a dyn Objective,
    prior_estimate: Vec<f64>,
    prior_log_mass: f64,
    nu: f64,
}

impl<'a> GainContext<'a> {
    /// `prior_log_mass = ln m_{n-1}`; pass `-inf` for an empty prior.
    pub fn new(objective: &'a dyn Objective, prior_estimate: Vec<f64>, prior_log_mass: f64, nu: f64) -> Result<Self> {
        if prior_estimate.len() != objective.dim() {
            return Err(Error::DimensionMismatch { expected: objective.dim(), found: prior_estimate.len() });
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidExponent { re: nu, im: 0.0 });
        }
        if prior_log_mass.is_nan() || prior_log_mass == f64::INFINITY {
            return Err(Error::NonFinite { what: "prior log mass", value: prior_log_mass });
        }
        Ok(Self { objective, prior_estimate, prior_log_mass, nu })
    }

    /// Prior mass equal to `ratio` times the weight of a test at the prior
    /// estimate itself, i.e. `m = ratio * exp(-nu f(x̂))`.
    pub fn with_prior_mass_ratio(objective: &'a dyn Objective, prior_estimate: Vec<f64>, ratio: f64, nu: f64) -> Result<Self> {
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidConfig(format!("prior mass ratio must be >= 0, got {ratio}")));
        }
        let f0 = objective.evaluate(&prior_estimate)?;
        Self::new(objective, prior_estimate, ratio.ln() - nu * f0, nu)
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective
    }

    pub fn prior_estimate(&self) -> &[f64] {
        &self.prior_estimate
    }

    pub fn prior_log_mass(&self) -> f64 {
        self.prior_log_mass
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.prior_estimate.len()
    }

    pub(crate) fn test_point(&self, z: &[f64]) -> Vec<f64> {
        self.prior_estimate.iter().zip(z).map(|(a, b)| a + b).collect()
    }

    /// `(F(z), F̄(z))`.
    pub fn gains(&self, z: &[f64]) -> (f64, f64) {
        let s = self.prior_log_mass + self.nu * self.objective.value(&self.test_point(z));
        if s > 0.0 {
            let e = (-s).exp();
            let f = e / (1.0 + e);
            (f, f / (1.0 + e))
        } else {
            let e = s.exp();
            let f = 1.0 / (1.0 + e);
            (f, f * e / (1.0 + e))
        }
    }

    pub fn gain(&self, z: &[f64]) -> f64 {
        self.gains(z).0
    }

    pub fn gain_bar(&self, z: &[f64]) -> f64 {
        self.gains(z).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{Constant, Quadratic, Rosenbrock};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_prior_has_unit_gain() {
        let ctx = GainContext::new(&Rosenbrock, vec![0.0, 0.0], f64::NEG_INFINITY, 4.0).unwrap();
        for z in [[0.0, 0.0], [3.0, -1.0], [-50.0, 20.0]] {
            assert_eq!(ctx.gains(&z), (1.0, 0.0));
        }
    }

    #[test]
    fn equal_masses_halve_the_gain() {
        let flat = Constant { dim: 2, value: 1.3 };
        let ctx = GainContext::with_prior_mass_ratio(&flat, vec![0.5, 0.5], 1.0, 2.0).unwrap();
        let (f, fbar) = ctx.gains(&[0.7, -0.1]);
        assert!((f - 0.5).abs() < 1e-15);
        assert!((fbar - 0.25).abs() < 1e-15);

        let q = Quadratic::scalar(3.0, 0.0);
        let z = [0.4];
        // m = exp(-nu f(x̂ + z)) exactly.
        let m_log = -1.5 * q.value(&[1.0 + 0.4]);
        let ctx = GainContext::new(&q, vec![1.0], m_log, 1.5).unwrap();
        assert!((ctx.gain(&z) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gain_bar_identity_on_random_contexts() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let nu = rng.random_range(0.1..5.0);
            let x = vec![rng.random_range(-1.5..1.5), rng.random_range(-0.5..2.0)];
            let log_m = rng.random_range(-10.0..10.0) - nu * Rosenbrock.value(&x);
            let ctx = GainContext::new(&Rosenbrock, x.clone(), log_m, nu).unwrap();
            let z = [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)];
            let (f, fbar) = ctx.gains(&z);
            assert!(f > 0.0 && f <= 1.0 && (0.0..1.0).contains(&fbar));
            // Direct evaluation of both definitions.
            let w = (-nu * Rosenbrock.value(&ctx.test_point(&z))).exp();
            let m = log_m.exp();
            if w > 1e-250 {
                assert!((f - w / (m + w)).abs() <= 1e-12 * f);
                let ratio = m / (m + w);
                assert!((fbar / f - ratio).abs() < 1e-14, "{} vs {ratio}", fbar / f);
            }
        }
    }

    #[test]
    fn context_validation() {
        assert!(GainContext::new(&Rosenbrock, vec![0.0], 0.0, 1.0).is_err());
        assert!(GainContext::new(&Rosenbrock, vec![0.0, 0.0], 0.0, 0.0).is_err());
        assert!(GainContext::new(&Rosenbrock, vec![0.0, 0.0], f64::NAN, 1.0).is_err());
        assert!(GainContext::with_prior_mass_ratio(&Rosenbrock, vec![0.0, 0.0], -1.0, 1.0).is_err());
    }
}

use num_complex::Complex64;

use crate::barycenter::{ComplexAccumulator, TestPoint, WeightExponent};
use crate::error::{Error, Result};

use super::report::{Component, Criterion, McReport};

/// `count` equispaced 1-D points of total `width` around `center`, valued on
/// the ramp `f_mean + slope (x - center)`. Every ramp shares the mean value
/// `f_mean`; `slope = 0` gives a locally flat cluster.
pub fn ramp_cluster(center: f64, width: f64, count: usize, f_mean: f64, slope: f64) -> Result<Vec<TestPoint>> {
    if count < 2 {
        return Err(Error::InvalidConfig(format!("a cluster needs at least 2 points, got {count}")));
    }
    (0..count)
        .map(|j| {
            let offset = width * (j as f64 / (count - 1) as f64 - 0.5);
            TestPoint::new(vec![center + offset], f_mean + slope * offset)
        })
        .collect()
}

fn shifted_sum(points: &[TestPoint], nu: Complex64) -> Result<(Complex64, f64, f64)> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    let fmin = points.iter().map(TestPoint::f_value).fold(f64::INFINITY, f64::min);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for p in points {
        let w = (-nu * (p.f_value() - fmin)).exp();
        sum += w;
        abs += w.norm();
    }
    Ok((sum, abs, fmin))
}

/// `|Σ exp(-nu f_i)|` over the cluster.
pub fn aggregate_weight_magnitude(points: &[TestPoint], nu: WeightExponent) -> Result<f64> {
    let (sum, _, fmin) = shifted_sum(points, nu.as_complex())?;
    Ok(sum.norm() * (-nu.re() * fmin).exp())
}

/// `|Σ w_i| / Σ |w_i|`: 1 without phase spread, smaller under
/// destructive interference.
pub fn interference_ratio(points: &[TestPoint], nu: WeightExponent) -> Result<f64> {
    let (sum, abs, _) = shifted_sum(points, nu.as_complex())?;
    Ok(sum.norm() / abs)
}

/// Geometry shared by the interference checks.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSetup {
    pub flat_center: f64,
    pub steep_center: f64,
    pub width: f64,
    pub count: usize,
    pub f_mean: f64,
}

impl Default for InterferenceSetup {
    fn default() -> Self {
        Self { flat_center: 2.0, steep_center: 5.0, width: 1.0, count: 64, f_mean: 1.0 }
    }
}

impl InterferenceSetup {
    pub fn flat(&self) -> Result<Vec<TestPoint>> {
        ramp_cluster(self.flat_center, self.width, self.count, self.f_mean, 0.0)
    }

    pub fn steep(&self, slope: f64) -> Result<Vec<TestPoint>> {
        ramp_cluster(self.steep_center, self.width, self.count, self.f_mean, slope)
    }
}

fn complex_estimate(points: &[TestPoint], nu: WeightExponent) -> Result<Vec<f64>> {
    let mut acc = ComplexAccumulator::new(points[0].dim(), nu);
    for p in points {
        acc.accumulate(p)?;
    }
    acc.estimate()
}

/// Aggregate complex weight of the steep cluster against the flat one along
/// an increasing slope ladder: equal at slope 0 (relative 1e-12), below the
/// flat cluster for every nonzero slope, strictly decreasing along the
/// ladder. Each cluster's complex barycenter is also formed, so a vanished
/// denominator surfaces as an error.
pub fn check_complex_interference(setup: &InterferenceSetup, slopes: &[f64], nu: WeightExponent) -> Result<McReport> {
    let flat = setup.flat()?;
    let flat_mag = aggregate_weight_magnitude(&flat, nu)?;
    complex_estimate(&flat, nu)?;
    let mut report = McReport::new(format!("complex interference [nu={}]", nu.as_complex()), 0, vec![]);
    report.push(Component::new("flat magnitude", flat_mag, 0.0, f64::NAN, flat_mag, Criterion::Info));
    let mut mags = Vec::with_capacity(slopes.len());
    for &g in slopes {
        let steep = setup.steep(g)?;
        let mag = aggregate_weight_magnitude(&steep, nu)?;
        complex_estimate(&steep, nu)?;
        if g == 0.0 {
            report.push(Component::new(
                "slope 0 vs flat (relative)",
                mag,
                0.0,
                flat_mag,
                (mag - flat_mag) / flat_mag,
                Criterion::AbsAtMost(1e-12),
            ));
        } else {
            report.push(Component::new(format!("flat - steep at slope {g}"), mag, 0.0, flat_mag, flat_mag - mag, Criterion::Exceeds(0.0)));
        }
        mags.push(mag);
    }
    for k in 1..slopes.len() {
        report.push(Component::new(
            format!("decrease slope {} -> {}", slopes[k - 1], slopes[k]),
            mags[k],
            0.0,
            mags[k - 1],
            mags[k - 1] - mags[k],
            Criterion::Exceeds(0.0),
        ));
    }
    Ok(report)
}

/// Interference ratio of one steep cluster as `|ν|/ν_r` grows through
/// `imag_parts` (ascending, nonnegative): exactly 1 at `ν_i = 0` (1e-12),
/// strictly decreasing afterwards.
pub fn check_phase_ladder(setup: &InterferenceSetup, slope: f64, nu_re: f64, imag_parts: &[f64]) -> Result<McReport> {
    let steep = setup.steep(slope)?;
    let mut report = McReport::new(format!("phase ladder [slope={slope} nu_r={nu_re}]"), 0, vec![]);
    let mut ratios = Vec::with_capacity(imag_parts.len());
    for &im in imag_parts {
        let nu = WeightExponent::complex(nu_re, im)?;
        let r = interference_ratio(&steep, nu)?;
        complex_estimate(&steep, nu)?;
        let c = if im == 0.0 {
            Component::new("ratio at nu_i=0", r, 0.0, 1.0, r - 1.0, Criterion::AbsAtMost(1e-12))
        } else {
            Component::new(format!("ratio at |nu|/nu_r={:.4}", nu.phase_ratio()), r, 0.0, f64::NAN, r, Criterion::Info)
        };
        report.push(c);
        ratios.push(r);
    }
    for k in 1..imag_parts.len() {
        report.push(Component::new(
            format!("decrease nu_i {} -> {}", imag_parts[k - 1], imag_parts[k]),
            ratios[k],
            0.0,
            ratios[k - 1],
            ratios[k - 1] - ratios[k],
            Criterion::Exceeds(0.0),
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nu(re: f64, im: f64) -> WeightExponent {
        WeightExponent::complex(re, im).unwrap()
    }

    #[test]
    fn clusters_share_mean_value() {
        let c = ramp_cluster(5.0, 1.0, 64, 1.0, 2.0).unwrap();
        let mean = c.iter().map(TestPoint::f_value).sum::<f64>() / 64.0;
        assert!((mean - 1.0).abs() < 1e-14);
        assert!(c.iter().all(|p| p.x()[0] >= 4.5 - 1e-12 && p.x()[0] <= 5.5 + 1e-12));
        assert!(ramp_cluster(0.0, 1.0, 1, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_slope_equals_flat() {
        let setup = InterferenceSetup::default();
        let a = aggregate_weight_magnitude(&setup.flat().unwrap(), nu(1.0, 4.0)).unwrap();
        let b = aggregate_weight_magnitude(&setup.steep(0.0).unwrap(), nu(1.0, 4.0)).unwrap();
        assert!(((a - b) / a).abs() <= 1e-12);
    }

    #[test]
    fn no_phase_no_interference() {
        let steep = InterferenceSetup::default().steep(2.0).unwrap();
        let r = interference_ratio(&steep, nu(1.0, 0.0)).unwrap();
        assert!((r - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn slope_ladder_strictly_decreasing() {
        let rep = check_complex_interference(&InterferenceSetup::default(), &[0.0, 0.5, 1.0, 2.0], nu(1.0, 4.0)).unwrap();
        assert!(rep.pass(), "{rep}");
        let without_zero = check_complex_interference(&InterferenceSetup::default(), &[0.5, 1.0, 2.0], nu(1.0, 4.0)).unwrap();
        assert!(without_zero.pass(), "{without_zero}");
    }

    #[test]
    fn phase_ladder_widens_gap() {
        let rep = check_phase_ladder(&InterferenceSetup::default(), 1.0, 1.0, &[0.0, 1.0, 2.0, 4.0]).unwrap();
        assert!(rep.pass(), "{rep}");
    }

    #[test]
    fn magnitude_survives_large_values() {
        let c = ramp_cluster(5.0, 1.0, 8, 400.0, 1.0).unwrap();
        let m = aggregate_weight_magnitude(&c, nu(1.0, 0.0)).unwrap();
        let direct: f64 = c.iter().map(|p| (-p.f_value()).exp()).sum();
        assert!((m - direct).abs() <= 1e-12 * direct);
    }
}

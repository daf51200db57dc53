use std::fmt;
use std::str::FromStr;

use crate::barycenter::WeightExponent;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

use super::interference::{check_complex_interference, check_phase_ladder, InterferenceSetup};
use super::noise::{check_bias_direction, check_noise_scaling, check_theorem4, theorem4_fixture};
use super::report::McReport;
use super::steps::{
    check_flat_baseline, check_theorem1, check_theorem2, check_variance_ladder, theorem1_grid, theorem2_h_ladder,
    theorem2_nu_ladder, theorem2_scenarios, DEFAULT_PRIOR_MASS_RATIO,
};

/// Base trial count; the mean-step checks use it directly, the variance and
/// noise checks use ten times as many.
pub const DEFAULT_BASE_TRIALS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Thm1, Suite::Thm2, Suite::Thm3, Suite::Thm4, Suite::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Thm3 => "thm3",
            Suite::Thm4 => "thm4",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}; expected thm1, thm2, thm3, thm4 or all")))
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub reports: Vec<McReport>,
    pub notes: Vec<String>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(McReport::pass)
    }

    /// Notes as `#` lines, then the header, then every record.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        out.push_str(McReport::HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.records());
        }
        out
    }
}

pub fn run_suite(suite: Suite, base_trials: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut reports = Vec::new();
    let mut notes = vec![format!("suite {suite}, base trials {base_trials}, seed {seed}")];
    if base_trials < DEFAULT_BASE_TRIALS {
        notes.push(format!(
            "standard errors widened by about {:.1}x relative to the default {DEFAULT_BASE_TRIALS} trials",
            (DEFAULT_BASE_TRIALS as f64 / base_trials as f64).sqrt()
        ));
    }
    let big = base_trials.saturating_mul(10);
    if suite.includes(Suite::Thm1) {
        reports.extend(check_theorem1(&theorem1_grid(), base_trials, derive_seed(seed, 1))?);
    }
    if suite.includes(Suite::Thm2) {
        let s = derive_seed(seed, 2);
        reports.extend(check_theorem2(&theorem2_scenarios(), big, derive_seed(s, 0))?);
        reports.push(check_variance_ladder(&theorem2_h_ladder(), big, derive_seed(s, 1), 3.0)?);
        reports.push(check_variance_ladder(&theorem2_nu_ladder(), big, derive_seed(s, 2), 0.0)?);
        reports.push(check_flat_baseline(1.0, 0.05, DEFAULT_PRIOR_MASS_RATIO, big, derive_seed(s, 3))?);
    }
    if suite.includes(Suite::Thm3) {
        let setup = InterferenceSetup::default();
        reports.push(check_complex_interference(&setup, &[0.0, 0.5, 1.0, 2.0], WeightExponent::complex(1.0, 4.0)?)?);
        reports.push(check_phase_ladder(&setup, 1.0, 1.0, &[0.0, 1.0, 2.0, 4.0])?);
    }
    if suite.includes(Suite::Thm4) {
        let s = derive_seed(seed, 4);
        let pts = theorem4_fixture();
        let (mean, cov) = check_theorem4(&pts, 1.0, 0.05, big, derive_seed(s, 0))?;
        reports.push(mean);
        reports.push(cov);
        reports.push(check_bias_direction(&pts, 1.0, 0.05, big, derive_seed(s, 1))?);
        reports.push(check_noise_scaling(&pts, 1.0, 0.05, big, derive_seed(s, 2))?);
    }
    Ok(SuiteOutcome { reports, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_suites() {
        assert_eq!("thm3".parse::<Suite>().unwrap(), Suite::Thm3);
        assert_eq!("ALL".parse::<Suite>().unwrap(), Suite::All);
        assert!("thm9".parse::<Suite>().is_err());
    }

    #[test]
    fn interference_suite_renders() {
        let out = run_suite(Suite::Thm3, DEFAULT_BASE_TRIALS, 7).unwrap();
        assert!(out.pass());
        let text = out.render();
        assert!(text.lines().any(|l| l == McReport::HEADER));
        assert!(!text.contains("widened"));
        let small = run_suite(Suite::Thm3, 1000, 7).unwrap();
        assert!(small.render().contains("widened by about 10.0x"));
    }
}

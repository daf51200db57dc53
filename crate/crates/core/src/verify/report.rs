use std::fmt;

/// Pass rule for one reported component, applied to its `score`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|score| <= bound`.
    AbsAtMost(f64),
    /// `score > bound`.
    Exceeds(f64),
    /// `lo <= score <= hi`.
    Between(f64, f64),
    /// Reported for context only.
    Info,
}

impl Criterion {
    pub fn accepts(self, score: f64) -> bool {
        match self {
            Criterion::AbsAtMost(b) => score.abs() <= b,
            Criterion::Exceeds(b) => score > b,
            Criterion::Between(lo, hi) => (lo..=hi).contains(&score),
            Criterion::Info => true,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::AbsAtMost(b) => write!(f, "|score|<={b}"),
            Criterion::Exceeds(b) => write!(f, "score>{b}"),
            Criterion::Between(lo, hi) => write!(f, "{lo}<=score<={hi}"),
            Criterion::Info => f.write_str("info"),
        }
    }
}

/// One compared quantity. `score` is usually a z-score, but a relative
/// error, a ratio or a difference where the criterion says so.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: String,
    pub empirical: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub score: f64,
    pub criterion: Criterion,
}

impl Component {
    pub fn new(label: impl Into<String>, empirical: f64, stderr: f64, predicted: f64, score: f64, criterion: Criterion) -> Self {
        Self { label: label.into(), empirical, stderr, predicted, score, criterion }
    }

    /// `(empirical - predicted) / stderr`, required to stay within `bound`.
    pub fn z_score(label: impl Into<String>, empirical: f64, stderr: f64, predicted: f64, bound: f64) -> Self {
        let z = if stderr > 0.0 {
            (empirical - predicted) / stderr
        } else if empirical == predicted {
            0.0
        } else {
            f64::INFINITY.copysign(empirical - predicted)
        };
        Self::new(label, empirical, stderr, predicted, z, Criterion::AbsAtMost(bound))
    }

    pub fn pass(&self) -> bool {
        !self.score.is_nan() && self.criterion.accepts(self.score)
    }
}

/// Outcome of one Monte Carlo check.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub quantity: String,
    pub components: Vec<Component>,
    pub trials: usize,
    pub seeds: Vec<u64>,
}

impl McReport {
    pub fn new(quantity: impl Into<String>, trials: usize, seeds: Vec<u64>) -> Self {
        Self { quantity: quantity.into(), components: Vec::new(), trials, seeds }
    }

    pub fn push(&mut self, c: Component) {
        self.components.push(c);
    }

    pub fn pass(&self) -> bool {
        self.components.iter().all(Component::pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| !c.pass())
    }

    pub const HEADER: &'static str = "quantity\tcomponent\tempirical\tstderr\tpredicted\tscore\tpass\tcriterion";

    /// One tab-separated line per component, matching [`McReport::HEADER`].
    pub fn records(&self) -> String {
        let mut out = String::new();
        for c in &self.components {
            out.push_str(&format!(
                "{}\t{}\t{:.9e}\t{:.3e}\t{:.9e}\t{:.6e}\t{}\t{}\n",
                self.quantity,
                c.label,
                c.empirical,
                c.stderr,
                c.predicted,
                c.score,
                if c.pass() { "pass" } else { "FAIL" },
                c.criterion
            ));
        }
        out
    }
}

impl fmt::Display for McReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.records())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria() {
        assert!(Criterion::AbsAtMost(3.0).accepts(-3.0));
        assert!(!Criterion::AbsAtMost(3.0).accepts(3.01));
        assert!(!Criterion::Exceeds(0.0).accepts(0.0));
        assert!(Criterion::Between(3.0, 5.0).accepts(4.1));
        assert!(!Criterion::Between(3.0, 5.0).accepts(5.2));
        assert!(Criterion::Info.accepts(f64::INFINITY));
    }

    #[test]
    fn zero_stderr_z_score() {
        assert!(Component::z_score("a", 1.0, 0.0, 1.0, 3.0).pass());
        assert!(!Component::z_score("a", 1.0, 0.0, 1.5, 3.0).pass());
        assert!(!Component::new("nan", 0.0, 0.0, 0.0, f64::NAN, Criterion::Info).pass());
    }

    #[test]
    fn records_line_per_component() {
        let mut r = McReport::new("mean step", 1000, vec![1]);
        r.push(Component::z_score("x1", 0.1, 0.01, 0.11, 3.0));
        r.push(Component::z_score("x2", 0.1, 0.01, 0.2, 3.0));
        let text = r.records();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("\tpass\t"));
        assert!(lines[1].contains("\tFAIL\t"));
        assert_eq!(lines[0].split('\t').count(), McReport::HEADER.split('\t').count());
        assert!(!r.pass());
        assert_eq!(r.failures().count(), 1);
    }
}

/// A named hypothesis or bound check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    pub name: String,
    pub ok: bool,
}

impl Flag {
    pub fn new(name: impl Into<String>, ok: bool) -> Self {
        Flag { name: name.into(), ok }
    }
}

pub fn all_ok(flags: &[Flag]) -> bool {
    flags.iter().all(|f| f.ok)
}

/// Outcome of a bound check under hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    BoundFailure,
    HypothesisNotSatisfied,
}

impl Verdict {
    /// Bound failures are reported even when a hypothesis is missing.
    pub fn from_parts(hypotheses_ok: bool, bounds_ok: bool) -> Self {
        match (hypotheses_ok, bounds_ok) {
            (true, true) => Verdict::Pass,
            (true, false) => Verdict::BoundFailure,
            (false, _) => Verdict::HypothesisNotSatisfied,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::BoundFailure => "bound-failure",
            Verdict::HypothesisNotSatisfied => "hypothesis-not-satisfied",
        }
    }
}

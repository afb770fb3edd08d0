//! Check verdicts and the `check,verdict,witness` CSV they are exported as.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    /// Some instance could not be decided (an oracle answered Unknown).
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: String,
    pub verdict: Verdict,
    /// First counterexample (or undecidable instance) found.
    pub witness: Option<String>,
    pub instances: usize,
    pub note: String,
}

impl CheckResult {
    pub fn pass(check: impl Into<String>, instances: usize) -> Self {
        CheckResult {
            check: check.into(),
            verdict: Verdict::Pass,
            witness: None,
            instances,
            note: String::new(),
        }
    }

    pub fn fail(check: impl Into<String>, witness: impl Into<String>) -> Self {
        CheckResult {
            check: check.into(),
            verdict: Verdict::Fail,
            witness: Some(witness.into()),
            instances: 1,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn is_fail(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Accumulates instance outcomes for one named check.
#[derive(Debug)]
pub struct Tally {
    check: String,
    instances: usize,
    failures: usize,
    unknown: usize,
    witness: Option<String>,
    unknown_witness: Option<String>,
}

impl Tally {
    pub fn new(check: impl Into<String>) -> Self {
        Tally {
            check: check.into(),
            instances: 0,
            failures: 0,
            unknown: 0,
            witness: None,
            unknown_witness: None,
        }
    }

    /// `Some(true)` holds, `Some(false)` violated, `None` undecidable.
    pub fn record(&mut self, outcome: Option<bool>, witness: impl FnOnce() -> String) {
        self.instances += 1;
        match outcome {
            Some(true) => {}
            Some(false) => {
                self.failures += 1;
                if self.witness.is_none() {
                    self.witness = Some(witness());
                }
            }
            None => {
                self.unknown += 1;
                if self.unknown_witness.is_none() {
                    self.unknown_witness = Some(witness());
                }
            }
        }
    }

    pub fn pass(&mut self) {
        self.instances += 1;
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn finish(self) -> CheckResult {
        let (verdict, witness) = if self.failures > 0 {
            (Verdict::Fail, self.witness)
        } else if self.unknown > 0 {
            (Verdict::Inconclusive, self.unknown_witness)
        } else {
            (Verdict::Pass, None)
        };
        let mut note = format!("{} instances", self.instances);
        if self.failures > 0 {
            note.push_str(&format!(", {} violations", self.failures));
        }
        if self.unknown > 0 {
            note.push_str(&format!(", {} undecided", self.unknown));
        }
        CheckResult {
            check: self.check,
            verdict,
            witness,
            instances: self.instances,
            note,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: CheckResult) {
        self.results.push(r);
    }

    pub fn extend(&mut self, other: Report) {
        self.results.extend(other.results);
    }

    pub fn get(&self, check: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check)
    }

    pub fn verdict(&self, check: &str) -> Option<Verdict> {
        self.get(check).map(|r| r.verdict)
    }

    pub fn any_fail(&self) -> bool {
        self.results.iter().any(CheckResult::is_fail)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.results.iter().any(|r| r.verdict == Verdict::Inconclusive)
    }

    /// Every check passed outright.
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(CheckResult::is_pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,verdict,witness\n");
        for r in &self.results {
            out.push_str(&csv_field(&r.check));
            out.push(',');
            out.push_str(&r.verdict.to_string());
            out.push(',');
            out.push_str(&csv_field(r.witness.as_deref().unwrap_or("")));
            out.push('\n');
        }
        out
    }
}

impl FromIterator<CheckResult> for Report {
    fn from_iter<I: IntoIterator<Item = CheckResult>>(iter: I) -> Self {
        Report {
            results: iter.into_iter().collect(),
        }
    }
}

/// Quotes a CSV field when it contains separators or quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", x)
    }
}

//! Plain-text verification reports with a `key=value` trailer.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    /// Scope of the claim: caps, margins, valences, seeds.
    pub context: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
    pub inconclusive: Vec<String>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn context(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.context.push((key.to_string(), value.to_string()));
        self
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn fail(&mut self, line: impl Into<String>) {
        self.failures.push(line.into());
    }

    pub fn undecided(&mut self, line: impl Into<String>) {
        self.inconclusive.push(line.into());
    }

    pub fn verdict(&self) -> Verdict {
        if !self.failures.is_empty() {
            Verdict::Fail
        } else if !self.inconclusive.is_empty() {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    /// Folds `other` in, prefixing its lines with its title.
    pub fn absorb(&mut self, other: Report) {
        let tag = other.title.clone();
        self.notes.push(format!("[{tag}] {}", other.verdict().as_str()));
        self.notes.extend(other.notes.into_iter().map(|l| format!("[{tag}] {l}")));
        self.failures.extend(other.failures.into_iter().map(|l| format!("[{tag}] {l}")));
        self.inconclusive.extend(other.inconclusive.into_iter().map(|l| format!("[{tag}] {l}")));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {} ==", self.title);
        for (k, v) in &self.context {
            let _ = writeln!(out, "{k}: {v}");
        }
        for l in &self.notes {
            let _ = writeln!(out, "{l}");
        }
        for l in &self.failures {
            let _ = writeln!(out, "FAIL {l}");
        }
        for l in &self.inconclusive {
            let _ = writeln!(out, "INCONCLUSIVE {l}");
        }
        out.push_str("--\n");
        let _ = writeln!(out, "verdict={}", self.verdict().as_str());
        let _ = writeln!(out, "failures={}", self.failures.len());
        let _ = writeln!(out, "inconclusive={}", self.inconclusive.len());
        for (k, v) in &self.context {
            let _ = writeln!(out, "{}={}", k.replace(' ', "_"), v);
        }
        out
    }
}

/// Quotes a CSV field when it needs quoting.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_precedence() {
        let mut r = Report::new("t");
        assert_eq!(r.verdict(), Verdict::Pass);
        r.undecided("budget");
        assert_eq!(r.verdict(), Verdict::Inconclusive);
        r.fail("boom");
        assert_eq!(r.verdict(), Verdict::Fail);
    }

    #[test]
    fn trailer_is_machine_readable() {
        let mut r = Report::new("t");
        r.context("cap", 3);
        let text = r.render();
        assert!(text.ends_with("verdict=pass\nfailures=0\ninconclusive=0\ncap=3\n"));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}

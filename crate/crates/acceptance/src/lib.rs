//! Bookkeeping for the acceptance report in `tests/acceptance.rs`.

use std::fmt::Display;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

/// Collects and prints one line per check as it is made.
#[derive(Debug)]
pub struct Report {
    lines: Vec<Line>,
    started: Instant,
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

impl Report {
    pub fn new() -> Self {
        Self { lines: Vec::new(), started: Instant::now() }
    }

    pub fn check(&mut self, id: impl Display, pass: bool, detail: impl Display) -> bool {
        let line = Line { id: id.to_string(), pass, detail: detail.to_string() };
        println!("{} {:<6} {}", if pass { "PASS" } else { "FAIL" }, line.id, line.detail);
        self.lines.push(line);
        pass
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn failed(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| !l.pass)
    }

    /// Prints the tally and returns the number of failed lines.
    pub fn finish(&self) -> usize {
        let failed = self.failed().count();
        println!(
            "{} passed, {} failed in {:.1} s",
            self.lines.len() - failed,
            failed,
            self.started.elapsed().as_secs_f64()
        );
        for l in self.failed() {
            println!("  failed: {}", l.id);
        }
        failed
    }
}

/// `true` when `values` never decreases, up to `tol`.
pub fn non_decreasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_counts_failures() {
        let mut r = Report::new();
        assert!(r.check("1", true, "ok"));
        assert!(!r.check("2a", false, "bad"));
        assert_eq!(r.finish(), 1);
        assert_eq!(r.failed().next().unwrap().id, "2a");
    }

    #[test]
    fn monotone_helper() {
        assert!(non_decreasing(&[0.1, 0.1, 0.5], 0.0));
        assert!(!non_decreasing(&[0.2, 0.1], 0.0));
        assert!(non_decreasing(&[], 0.0));
    }
}

//! Report rows and their CSV / JSON renderings.
//!
//! Every campaign and battery emits [`ReportRow`]s with a fixed column set.
//! Floats are rendered with 17 significant digits so a rendered report parses
//! back bit-for-bit, which is what makes byte-identical re-runs a meaningful
//! promise.

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "regime,N,M,x0,y0,runs,statistic,observed,theoretical,tolerance,pass,seed_root,runtime_ms";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub regime: String,
    /// None encodes the infinite interval (rendered "inf").
    pub interval: Option<u64>,
    pub capacity: u64,
    pub x0: u64,
    pub y0: u64,
    pub runs: u64,
    /// Names the comparison and its oracle, e.g. "mean_lifetime_vs_meagre_mean_limit".
    pub statistic: String,
    pub observed: f64,
    pub theoretical: f64,
    /// Absolute or relative depending on the statistic; value rows use 0.
    pub tolerance: f64,
    pub pass: bool,
    pub seed_root: u64,
    pub runtime_ms: u64,
}

impl ReportRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        regime: &str,
        interval: Option<u64>,
        capacity: u64,
        x0: u64,
        y0: u64,
        runs: u64,
        statistic: &str,
        seed_root: u64,
    ) -> Self {
        ReportRow {
            regime: regime.to_string(),
            interval,
            capacity,
            x0,
            y0,
            runs,
            statistic: statistic.to_string(),
            observed: 0.0,
            theoretical: 0.0,
            tolerance: 0.0,
            pass: false,
            seed_root,
            runtime_ms: 0,
        }
    }

    pub fn runtime(mut self, runtime_ms: u64) -> Self {
        self.runtime_ms = runtime_ms;
        self
    }

    /// Two-sided comparison: |observed - theoretical| within an absolute band.
    pub fn within_abs(mut self, observed: f64, theoretical: f64, tolerance: f64) -> Self {
        self.observed = observed;
        self.theoretical = theoretical;
        self.tolerance = tolerance;
        self.pass = (observed - theoretical).abs() <= tolerance;
        self
    }

    /// Two-sided comparison with a relative band around a nonzero target.
    /// The tolerance column records the relative band itself.
    pub fn within_rel(mut self, observed: f64, theoretical: f64, rel_tol: f64) -> Self {
        self.observed = observed;
        self.theoretical = theoretical;
        self.tolerance = rel_tol;
        self.pass = (observed - theoretical).abs() <= rel_tol * theoretical.abs();
        self
    }

    /// One-sided floor (used for concentration masses).
    pub fn at_least(mut self, observed: f64, floor: f64) -> Self {
        self.observed = observed;
        self.theoretical = floor;
        self.tolerance = 0.0;
        self.pass = observed >= floor;
        self
    }
}

/// 17 significant digits: exact round-trip for binary64.
pub fn render_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RegimeReport {
    pub rows: Vec<ReportRow>,
}

impl RegimeReport {
    pub fn new() -> Self {
        RegimeReport::default()
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failed(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn extend(&mut self, other: RegimeReport) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let n = match r.interval {
                Some(n) => n.to_string(),
                None => "inf".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.regime,
                n,
                r.capacity,
                r.x0,
                r.y0,
                r.runs,
                r.statistic,
                render_f64(r.observed),
                render_f64(r.theoretical),
                render_f64(r.tolerance),
                r.pass,
                r.seed_root,
                r.runtime_ms
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        // Rows only hold u64/bool/String/f64; serialization cannot fail.
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

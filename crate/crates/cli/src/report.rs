//! Run reports: per-assertion results plus density tables, rendered to
//! JSON and CSV.
//!
//! All numeric payloads are exact decimal strings — `num`/`den` may exceed
//! machine words (prescribed-density levels carry `p^i (p+1)`), ratios are
//! kept as reduced fractions with a fixed 20-digit truncated decimal
//! alongside. Levels with a zero denominator (the full-group level) are
//! dropped from both renderings.

use hdlab_core::{decimal_string, rat_nat, DensitySequence, HdimEstimate, Rational};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;
use serde_json::Value;

/// Fixed fraction-digit count of the `ratio_decimal` column (truncated,
/// never rounded).
pub const RATIO_DIGITS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub i: u64,
    pub num: String,
    pub den: String,
    /// Reduced exact ratio `num/den`.
    pub ratio: String,
    pub ratio_decimal: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceBlock {
    pub label: String,
    pub levels: Vec<LevelRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_min: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionRow {
    pub name: String,
    pub pass: bool,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub config: Value,
    pub pass: bool,
    pub assertions: Vec<AssertionRow>,
    pub sequences: Vec<SequenceBlock>,
}

fn level_row(i: u64, num: &BigUint, den: &BigUint) -> LevelRow {
    let ratio = rat_nat(num, den);
    LevelRow {
        i,
        num: num.to_string(),
        den: den.to_string(),
        ratio: ratio.to_string(),
        ratio_decimal: decimal_string(&ratio, RATIO_DIGITS),
    }
}

impl Report {
    pub fn new(scenario: &str, config: &Value) -> Self {
        Report {
            scenario: scenario.to_string(),
            config: config.clone(),
            pass: false,
            assertions: Vec::new(),
            sequences: Vec::new(),
        }
    }

    /// Record one assertion outcome; returns `pass` for chaining.
    pub fn check(&mut self, name: &str, pass: bool, data: Value) -> bool {
        self.assertions.push(AssertionRow { name: name.to_string(), pass, data });
        pass
    }

    pub fn push_sequence(
        &mut self,
        label: &str,
        seq: &DensitySequence,
        estimate: Option<&HdimEstimate>,
    ) {
        let rows = seq
            .levels()
            .iter()
            .filter(|l| !l.den.is_zero())
            .map(|l| level_row(l.i, &l.num, &l.den))
            .collect();
        self.push_block(label, rows, estimate);
    }

    /// A sequence re-indexed by `i - shift` (scenarios whose display index
    /// is offset from the series level).
    pub fn push_sequence_shifted(
        &mut self,
        label: &str,
        seq: &DensitySequence,
        shift: u64,
        estimate: Option<&HdimEstimate>,
    ) {
        let rows = seq
            .levels()
            .iter()
            .filter(|l| !l.den.is_zero())
            .map(|l| level_row(l.i - shift, &l.num, &l.den))
            .collect();
        self.push_block(label, rows, estimate);
    }

    /// A table that is not backed by a `DensitySequence`.
    pub fn push_rows(&mut self, label: &str, rows: Vec<(u64, BigUint, BigUint)>) {
        let rows = rows
            .iter()
            .filter(|(_, _, den)| !den.is_zero())
            .map(|(i, num, den)| level_row(*i, num, den))
            .collect();
        self.push_block(label, rows, None);
    }

    fn push_block(&mut self, label: &str, levels: Vec<LevelRow>, estimate: Option<&HdimEstimate>) {
        assert!(
            !label.contains(',') && !label.contains('"') && !label.contains('\n'),
            "sequence labels double as raw CSV fields"
        );
        self.sequences.push(SequenceBlock {
            label: label.to_string(),
            levels,
            window_min: estimate.map(|e| e.window_min.to_string()),
            exact: estimate.and_then(|e| e.exact.as_ref()).map(Rational::to_string),
            certificate: estimate.and_then(|e| e.certificate.clone()),
        });
    }

    /// Fold the assertion outcomes into the report verdict. A report with
    /// no assertions never passes.
    pub fn seal(mut self) -> Self {
        self.pass = !self.assertions.is_empty() && self.assertions.iter().all(|a| a.pass);
        self
    }

    pub fn json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn csv_string(&self) -> String {
        let mut s = String::from("scenario,label,i,num,den,ratio_decimal_20dp\n");
        for block in &self.sequences {
            for row in &block.levels {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.scenario, block.label, row.i, row.num, row.den, row.ratio_decimal
                ));
            }
        }
        s
    }
}

/// `|a - b| <= tol`.
pub fn near(a: &Rational, b: &Rational, tol: &Rational) -> bool {
    let gap = if a >= b { a - b } else { b - a };
    gap <= *tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdlab_core::{rat, DensityLevel};
    use serde_json::json;

    fn sample_sequence() -> DensitySequence {
        let levels = vec![
            DensityLevel::new(0, 0u32, 0u32),
            DensityLevel::new(1, 1u32, 2u32),
            DensityLevel::new(2, 3u32, 4u32),
        ];
        DensitySequence::new(3, levels).unwrap()
    }

    #[test]
    fn zero_denominator_levels_stay_out_of_both_renderings() {
        let mut r = Report::new("demo", &json!({"p": 3}));
        r.push_sequence("seq", &sample_sequence(), None);
        r.check("ok", true, json!({}));
        let r = r.seal();
        assert_eq!(r.sequences[0].levels.len(), 2);
        let csv = r.csv_string();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("scenario,label,i,num,den,ratio_decimal_20dp\n"));
        assert!(csv.contains("demo,seq,1,1,2,0.50000000000000000000"));
    }

    #[test]
    fn truncated_decimals_keep_twenty_digits() {
        let row = level_row(1, &BigUint::from(2u32), &BigUint::from(3u32));
        assert_eq!(row.ratio, "2/3");
        assert_eq!(row.ratio_decimal, "0.66666666666666666666");
    }

    #[test]
    fn reports_without_assertions_never_pass() {
        let r = Report::new("demo", &json!({})).seal();
        assert!(!r.pass);
        let mut r = Report::new("demo", &json!({}));
        r.check("a", true, json!({}));
        r.check("b", false, json!({}));
        assert!(!r.seal().pass);
    }

    #[test]
    fn near_is_symmetric_and_inclusive() {
        assert!(near(&rat(1, 2), &rat(5, 12), &rat(1, 12)));
        assert!(near(&rat(5, 12), &rat(1, 2), &rat(1, 12)));
        assert!(!near(&rat(5, 12), &rat(1, 2), &rat(1, 13)));
    }
}

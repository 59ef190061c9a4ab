//! Verification records and deterministic report rendering.
//!
//! Reports render byte-identically for identical inputs: records are sorted
//! by (suite, check), numbers print in shortest-roundtrip form with explicit
//! `inf`/`nan` spellings, and the CSV/JSON seconds column is pinned to the
//! literal `0.000` so wall-clock jitter never touches the bytes. Measured
//! times stay on the in-memory records for diagnostics.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
        }
    }
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One verification check: where it ran, which documented fact it anchors
/// to (or the literal tag `plumbing`), how it went, and the empirical
/// constant it measured against its tolerance.
#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub suite: String,
    pub check: String,
    pub anchor: String,
    pub status: CheckStatus,
    pub constant: f64,
    pub tolerance: f64,
    /// Present iff the check failed; serialized in JSON only.
    pub witness: Option<String>,
    /// Measured wall time; never serialized (reports pin 0.000).
    pub seconds: f64,
}

impl CheckRecord {
    pub fn pass(suite: &str, check: &str, anchor: &str, constant: f64, tolerance: f64) -> CheckRecord {
        assert!(!anchor.is_empty(), "records must carry an anchor");
        CheckRecord {
            suite: suite.to_string(),
            check: check.to_string(),
            anchor: anchor.to_string(),
            status: CheckStatus::Pass,
            constant,
            tolerance,
            witness: None,
            seconds: 0.0,
        }
    }

    pub fn fail(
        suite: &str,
        check: &str,
        anchor: &str,
        constant: f64,
        tolerance: f64,
        witness: String,
    ) -> CheckRecord {
        CheckRecord {
            status: CheckStatus::Fail,
            witness: Some(witness),
            ..CheckRecord::pass(suite, check, anchor, constant, tolerance)
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// The assembled outcome of a verification run.
#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

/// Deterministic number spelling: shortest roundtrip for finite values,
/// `inf` / `-inf` / `nan` otherwise (no commas, CSV-safe).
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v}")
    }
}

fn parse_number(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s
            .parse()
            .map_err(|_| Error::Config(format!("bad number `{s}` in report"))),
    }
}

fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

pub const CSV_HEADER: &str = "suite,check,anchor,status,constant,tolerance,seconds";

impl VerificationReport {
    pub fn new(mut records: Vec<CheckRecord>) -> VerificationReport {
        records.sort_by(|a, b| (a.suite.as_str(), a.check.as_str()).cmp(&(b.suite.as_str(), b.check.as_str())));
        VerificationReport { records }
    }

    pub fn all_passed(&self) -> bool {
        self.records.iter().all(CheckRecord::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed())
    }

    /// Fixed-column CSV; the seconds column is always the literal 0.000.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            debug_assert!(
                !r.suite.contains(',') && !r.check.contains(',') && !r.anchor.contains(','),
                "CSV fields must stay comma-free"
            );
            out.push_str(&format!(
                "{},{},{},{},{},{},0.000\n",
                r.suite,
                r.check,
                r.anchor,
                r.status,
                format_number(r.constant),
                format_number(r.tolerance),
            ));
        }
        out
    }

    /// Structured-object rendering with the failure witnesses included.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"passed\": {},\n", self.all_passed()));
        out.push_str(&format!("  \"checks\": {},\n", self.records.len()));
        out.push_str("  \"records\": [\n");
        for (i, r) in self.records.iter().enumerate() {
            let witness = match &r.witness {
                Some(w) => format!("\"{}\"", escape_json(w)),
                None => "null".to_string(),
            };
            out.push_str(&format!(
                "    {{\"suite\": \"{}\", \"check\": \"{}\", \"anchor\": \"{}\", \
                 \"status\": \"{}\", \"constant\": \"{}\", \"tolerance\": \"{}\", \
                 \"witness\": {}, \"seconds\": \"0.000\"}}{}\n",
                escape_json(&r.suite),
                escape_json(&r.check),
                escape_json(&r.anchor),
                r.status,
                format_number(r.constant),
                format_number(r.tolerance),
                witness,
                if i + 1 < self.records.len() { "," } else { "" },
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Aligned human summary table with a pass/fail tally and the witnesses
    /// of any failures.
    pub fn human_table(&self) -> String {
        let mut rows: Vec<[String; 6]> = vec![[
            "STATUS".into(),
            "SUITE".into(),
            "CHECK".into(),
            "ANCHOR".into(),
            "CONSTANT".into(),
            "TOLERANCE".into(),
        ]];
        for r in &self.records {
            rows.push([
                r.status.to_string(),
                r.suite.clone(),
                r.check.clone(),
                r.anchor.clone(),
                format_number(r.constant),
                format_number(r.tolerance),
            ]);
        }
        let mut width = [0usize; 6];
        for row in &rows {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for row in &rows {
            let mut line = String::new();
            for (w, cell) in width.iter().zip(row) {
                line.push_str(&format!("{cell:<w$}  "));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let failed: Vec<&CheckRecord> = self.failures().collect();
        out.push('\n');
        out.push_str(&format!(
            "{} checks: {} passed, {} failed\n",
            self.records.len(),
            self.records.len() - failed.len(),
            failed.len()
        ));
        for r in failed {
            out.push_str(&format!(
                "FAILED {}/{}: {}\n",
                r.suite,
                r.check,
                r.witness.as_deref().unwrap_or("(no witness)")
            ));
        }
        out
    }

    /// Re-reads a report from its CSV rendering (witnesses and measured
    /// times are not part of the CSV and come back empty).
    pub fn from_csv(text: &str) -> Result<VerificationReport> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::Config(format!(
                    "report does not start with the header `{CSV_HEADER}`"
                )))
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 7 CSV fields, got {}", fields.len()),
                });
            }
            let status = match fields[3] {
                "PASS" => CheckStatus::Pass,
                "FAIL" => CheckStatus::Fail,
                other => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("unknown status `{other}`"),
                    })
                }
            };
            records.push(CheckRecord {
                suite: fields[0].to_string(),
                check: fields[1].to_string(),
                anchor: fields[2].to_string(),
                status,
                constant: parse_number(fields[4]).map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad constant `{}`", fields[4]),
                })?,
                tolerance: parse_number(fields[5]).map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad tolerance `{}`", fields[5]),
                })?,
                witness: None,
                seconds: 0.0,
            });
        }
        Ok(VerificationReport::new(records))
    }

    /// Writes `<base>.csv` and `<base>.json` (creating parent directories
    /// as needed) and returns the two paths.
    pub fn write_files(
        &self,
        base: &std::path::Path,
    ) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        if let Some(dir) = base.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let with_suffix = |suffix: &str| {
            let mut os = base.as_os_str().to_os_string();
            os.push(suffix);
            std::path::PathBuf::from(os)
        };
        let csv_path = with_suffix(".csv");
        let json_path = with_suffix(".json");
        std::fs::write(&csv_path, self.to_csv())?;
        std::fs::write(&json_path, self.to_json())?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VerificationReport {
        VerificationReport::new(vec![
            CheckRecord::pass("geometry", "cone-lower", "cone-tent-box-inclusions", 0.0, 0.0),
            CheckRecord::fail(
                "measures",
                "balayage-bound",
                "balayage-carleson-bound",
                0.61,
                0.05,
                "value 0.61 above 0.55".to_string(),
            ),
            CheckRecord::pass("functionals", "homogeneity", "quasi-norm-homogeneity", 1.5e-16, 1e-12),
        ])
    }

    #[test]
    fn records_sort_and_render_deterministically() {
        let r = sample();
        assert_eq!(r.records[0].suite, "functionals");
        assert_eq!(r.records[1].suite, "geometry");
        assert_eq!(r.records[2].suite, "measures");
        assert_eq!(r.to_csv(), sample().to_csv());
        assert_eq!(r.to_json(), sample().to_json());
        assert!(r.to_csv().starts_with(CSV_HEADER));
        assert!(r.to_csv().lines().all(|l| l.ends_with("0.000") || l == CSV_HEADER));
        assert!(!r.all_passed());
    }

    #[test]
    fn csv_roundtrips_and_validates() {
        let r = sample();
        let back = VerificationReport::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back.records.len(), 3);
        assert_eq!(back.to_csv(), r.to_csv());
        assert!(VerificationReport::from_csv("nonsense\n").is_err());
        assert!(VerificationReport::from_csv(&format!("{CSV_HEADER}\na,b,c\n")).is_err());
    }

    #[test]
    fn special_numbers_survive_the_csv() {
        let r = VerificationReport::new(vec![CheckRecord::pass(
            "multiplication",
            "ratio",
            "plumbing",
            f64::INFINITY,
            0.0,
        )]);
        let back = VerificationReport::from_csv(&r.to_csv()).unwrap();
        assert!(back.records[0].constant.is_infinite());
    }

    #[test]
    fn json_carries_witnesses_and_human_table_tallies() {
        let r = sample();
        let json = r.to_json();
        assert!(json.contains("\"witness\": \"value 0.61 above 0.55\""));
        assert!(json.contains("\"passed\": false"));
        let table = r.human_table();
        assert!(table.contains("3 checks: 2 passed, 1 failed"));
        assert!(table.contains("FAILED measures/balayage-bound"));
    }
}

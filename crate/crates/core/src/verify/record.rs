use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::report::fmt_f64;

/// How a record's margin is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// `margin = rhs - lhs`, pass iff `margin >= -tolerance`
    Inequality,
    /// `margin = |lhs - rhs|` (possibly scaled), pass iff `margin <= tolerance`
    Identity,
    /// diagnostic only
    Reported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Reported,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Reported => "reported",
        })
    }
}

/// One checked identity or inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub check_id: String,
    pub paper_anchor: String,
    pub measure_id: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl VerificationRecord {
    /// `rhs - lhs >= -tolerance`.
    pub fn inequality(
        check_id: &str,
        anchor: &str,
        measure_id: &str,
        params: String,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let margin = if lhs == rhs { 0.0 } else { rhs - lhs };
        Self::judged(check_id, anchor, measure_id, params, lhs, rhs, margin, tolerance, Semantics::Inequality)
    }

    /// `|lhs - rhs| / scale <= tolerance`.
    #[allow(clippy::too_many_arguments)]
    pub fn identity(
        check_id: &str,
        anchor: &str,
        measure_id: &str,
        params: String,
        lhs: f64,
        rhs: f64,
        scale: f64,
        tolerance: f64,
    ) -> Self {
        let margin = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / scale };
        Self::judged(check_id, anchor, measure_id, params, lhs, rhs, margin, tolerance, Semantics::Identity)
    }

    pub fn reported(
        check_id: &str,
        anchor: &str,
        measure_id: &str,
        params: String,
        lhs: f64,
        rhs: f64,
        margin: f64,
    ) -> Self {
        Self::judged(check_id, anchor, measure_id, params, lhs, rhs, margin, f64::NAN, Semantics::Reported)
    }

    /// A check that could not be evaluated.
    pub fn failed(check_id: &str, anchor: &str, measure_id: &str, params: String, tolerance: f64) -> Self {
        VerificationRecord {
            check_id: check_id.to_string(),
            paper_anchor: anchor.to_string(),
            measure_id: measure_id.to_string(),
            params,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            tolerance,
            status: Status::Fail,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn judged(
        check_id: &str,
        anchor: &str,
        measure_id: &str,
        params: String,
        lhs: f64,
        rhs: f64,
        margin: f64,
        tolerance: f64,
        semantics: Semantics,
    ) -> Self {
        let status = match semantics {
            Semantics::Reported => Status::Reported,
            Semantics::Inequality if margin >= -tolerance => Status::Pass,
            Semantics::Identity if margin <= tolerance => Status::Pass,
            _ => Status::Fail,
        };
        VerificationRecord {
            check_id: check_id.to_string(),
            paper_anchor: anchor.to_string(),
            measure_id: measure_id.to_string(),
            params,
            lhs,
            rhs,
            margin,
            tolerance,
            status,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "check_id",
    "paper_anchor",
    "measure_id",
    "params",
    "lhs",
    "rhs",
    "margin",
    "tolerance",
    "status",
];

pub fn write_report_csv<W: Write>(records: &[VerificationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in records {
        w.write_record([
            r.check_id.clone(),
            r.paper_anchor.clone(),
            r.measure_id.clone(),
            r.params.clone(),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.margin),
            fmt_f64(r.tolerance),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

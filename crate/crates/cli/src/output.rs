//! diagnostics.csv, report.csv and report.json.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nsk_core::consistency::ConvergenceReport;
use nsk_core::diagnostics::DiagnosticsRow;
use serde::Serialize;

use crate::snapshot::{io_err, IoError};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

pub fn diagnostics_csv(rows: &[DiagnosticsRow<f64>]) -> String {
    let mut out = DiagnosticsRow::<f64>::COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cols: Vec<String> = r.values().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow<f64>]) -> Result<(), IoError> {
    fs::write(path, diagnostics_csv(rows)).map_err(io_err(path))
}

pub const REPORT_COLUMNS: [&str; 18] = [
    "level",
    "M",
    "N",
    "h",
    "R1",
    "R2",
    "cauchy_rho",
    "cauchy_m",
    "lambda_h",
    "order_R1",
    "order_R2",
    "order_cauchy_rho",
    "order_cauchy_m",
    "R1_signed",
    "R2_signed",
    "apriori_grad",
    "apriori_lap",
    "steps",
];

/// One row per level. Pairwise columns hold the pair ending at that level
/// and are empty on the first row; Cauchy orders compare the pair ending at
/// that level with the previous pair.
pub fn report_csv(report: &ConvergenceReport<f64>) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    let back = |v: &[f64], k: usize, lag: usize| {
        k.checked_sub(lag)
            .and_then(|i| v.get(i))
            .map(|x| format!("{x:.16e}"))
            .unwrap_or_default()
    };
    let pair = |v: &[f64], k: usize| back(v, k, 1);
    for (k, &(m, n)) in report.levels.iter().enumerate() {
        let e = |v: &[f64]| format!("{:.16e}", v[k]);
        let _ = writeln!(
            out,
            "{k},{m},{n},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e(&report.h),
            e(&report.residual_r1),
            e(&report.residual_r2),
            pair(&report.cauchy_rho, k),
            pair(&report.cauchy_m, k),
            e(&report.lambda_h),
            pair(&report.order_r1, k),
            pair(&report.order_r2, k),
            back(&report.order_cauchy_rho, k, 2),
            back(&report.order_cauchy_m, k, 2),
            e(&report.residual_r1_signed),
            e(&report.residual_r2_signed),
            e(&report.apriori_grad),
            e(&report.apriori_lap),
            report.steps[k],
        );
    }
    out
}

#[derive(Serialize)]
struct ReportLevel {
    m: usize,
    n: usize,
    h: f64,
    r1: f64,
    r2: f64,
    r1_signed: f64,
    r2_signed: f64,
    quadrature_r1: f64,
    quadrature_r2: f64,
    lambda_h: f64,
    apriori_grad: f64,
    apriori_lap: f64,
    steps: usize,
}

#[derive(Serialize)]
struct ReportPair {
    coarse: (usize, usize),
    fine: (usize, usize),
    cauchy_rho: f64,
    cauchy_m: f64,
    order_r1: f64,
    order_r2: f64,
}

#[derive(Serialize)]
struct ReportChecks {
    residuals_decrease: bool,
    lambda_h_decreases: bool,
    apriori_lap_decreases: bool,
    min_order_r1: f64,
    min_order_r2: f64,
    min_cauchy_ratio: f64,
}

#[derive(Serialize)]
struct ReportSummary {
    levels: Vec<ReportLevel>,
    pairs: Vec<ReportPair>,
    /// `log2` ratios of successive Cauchy errors.
    order_cauchy_rho: Vec<f64>,
    order_cauchy_m: Vec<f64>,
    checks: ReportChecks,
}

pub fn report_json(report: &ConvergenceReport<f64>) -> String {
    let r = report;
    let levels = (0..r.levels.len())
        .map(|k| ReportLevel {
            m: r.levels[k].0,
            n: r.levels[k].1,
            h: r.h[k],
            r1: r.residual_r1[k],
            r2: r.residual_r2[k],
            r1_signed: r.residual_r1_signed[k],
            r2_signed: r.residual_r2_signed[k],
            quadrature_r1: r.quadrature_r1[k],
            quadrature_r2: r.quadrature_r2[k],
            lambda_h: r.lambda_h[k],
            apriori_grad: r.apriori_grad[k],
            apriori_lap: r.apriori_lap[k],
            steps: r.steps[k],
        })
        .collect();
    let pairs = (0..r.cauchy_rho.len())
        .map(|k| ReportPair {
            coarse: r.levels[k],
            fine: r.levels[k + 1],
            cauchy_rho: r.cauchy_rho[k],
            cauchy_m: r.cauchy_m[k],
            order_r1: r.order_r1[k],
            order_r2: r.order_r2[k],
        })
        .collect();
    let checks = ReportChecks {
        residuals_decrease: r.residuals_decrease(),
        lambda_h_decreases: r.lambda_h_decreases(),
        apriori_lap_decreases: r.apriori_lap_decreases(),
        min_order_r1: ConvergenceReport::min_order(&r.order_r1),
        min_order_r2: ConvergenceReport::min_order(&r.order_r2),
        min_cauchy_ratio: r.min_cauchy_ratio(),
    };
    let summary = ReportSummary {
        levels,
        pairs,
        order_cauchy_rho: r.order_cauchy_rho.clone(),
        order_cauchy_m: r.order_cauchy_m.clone(),
        checks,
    };
    serde_json::to_string_pretty(&summary).expect("report serializes")
}

pub fn write_report(dir: &Path, report: &ConvergenceReport<f64>) -> Result<(), IoError> {
    let csv = dir.join(REPORT_CSV);
    fs::write(&csv, report_csv(report)).map_err(io_err(&csv))?;
    let json = dir.join(REPORT_JSON);
    fs::write(&json, report_json(report)).map_err(io_err(&json))
}

//! File output: CSV tables (17 significant digits, so values round-trip and
//! re-runs diff clean) and key = value reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rotor_core::scan::{WidthReport, WidthVsN};
use rotor_core::Result;

/// One float, full precision, fixed format.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV file: one header line, then rows of full-precision floats.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Width report as key = value lines. With a lab frequency the detuning
/// resolution and run duration are also given in lab units; their product
/// equals `delta_r * n1` identically.
pub fn width_report_text(
    report: &WidthReport,
    n1: u32,
    delta_p: f64,
    f1_khz: Option<f64>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "delta_r = {}", report.delta_r);
    let _ = writeln!(s, "delta_r_err = {}", report.delta_r_err);
    let _ = writeln!(s, "w = {}", report.w);
    let _ = writeln!(s, "baseline = {}", report.baseline);
    let _ = writeln!(s, "peak = {}", report.peak);
    let _ = writeln!(s, "peak_r = {}", report.peak_r);
    let _ = writeln!(s, "subfourier_factor = {}", report.subfourier_factor);
    let _ = writeln!(s, "n1 = {n1}");
    let _ = writeln!(s, "delta_p = {delta_p}");
    if let Some(f1) = f1_khz {
        let f1_hz = f1 * 1e3;
        let _ = writeln!(s, "delta_f2_hz = {}", report.delta_r * f1_hz);
        let _ = writeln!(s, "duration_s = {}", n1 as f64 / f1_hz);
    }
    s
}

/// Width-vs-N side channel: localization time, reference energies, skips.
pub fn width_vs_n_report_text(result: &WidthVsN) -> String {
    let mut s = String::new();
    match result.n_l {
        Some(n_l) => {
            let _ = writeln!(s, "n_l = {n_l}");
        }
        None => {
            let _ = writeln!(s, "n_l = none");
        }
    }
    for &(n1, p2) in &result.reference_p2 {
        let _ = writeln!(s, "reference_p2_{n1} = {p2}");
    }
    for (n1, reason) in &result.skipped {
        let _ = writeln!(s, "skipped_{n1} = {reason}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_round_trip() {
        for &x in &[0.0, 1.0, -1.5e-300, std::f64::consts::PI, 1.0 / 3.0, 2.144e-4] {
            let back: f64 = fmt(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {}", fmt(x));
        }
    }

    #[test]
    fn lab_lines_satisfy_the_product_identity() {
        let report = WidthReport {
            delta_r: 2.6e-3,
            delta_r_err: 1e-4,
            baseline: 0.0,
            peak: 1.0,
            peak_r: 1.0,
            w: 2.6e-2,
            subfourier_factor: 35.0,
        };
        let text = width_report_text(&report, 10, 5.76, Some(18.0));
        let get = |key: &str| -> f64 {
            text.lines()
                .find(|l| l.starts_with(key))
                .and_then(|l| l.split('=').nth(1))
                .unwrap()
                .trim()
                .parse()
                .unwrap()
        };
        let lhs = get("delta_f2_hz") * get("duration_s");
        let rhs = report.delta_r * 10.0;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
    }
}

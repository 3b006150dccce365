//! Flat result records, their CSV/JSON serializations, and summary statistics.
//!
//! The CSV schema is fixed: the documented header line first, then one row per
//! comparison with floats printed as `{:.16e}` (17 significant digits, always
//! a decimal point, never locale dependent) so repeated runs are byte
//! identical.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::csum;

/// CSV column order; every `ReportRow` field maps to one column.
pub const CSV_HEADER: &str = "experiment,process,base_seed,path_id,t_end,n_steps,n_bins,epsilon,variant,sign_convention,lhs,rhs,abs_err,rel_err";

/// One flat record per comparison.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    /// Process kind with parameters, semicolon separated so the CSV needs no
    /// quoting (e.g. `ornstein_uhlenbeck(1;0.7;0.3)`).
    pub process: String,
    pub base_seed: u64,
    pub path_id: u64,
    pub t_end: f64,
    pub n_steps: usize,
    pub n_bins: usize,
    pub epsilon: f64,
    pub variant: String,
    /// `resolved`, `paper`, or `na` where no convention applies.
    pub sign_convention: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render rows as CSV with the fixed header.
pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.process,
            r.base_seed,
            r.path_id,
            fmt_float(r.t_end),
            r.n_steps,
            r.n_bins,
            fmt_float(r.epsilon),
            r.variant,
            r.sign_convention,
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.abs_err),
            fmt_float(r.rel_err),
        ));
    }
    out
}

/// JSON mirror: rows plus the summary block.
pub fn to_json(rows: &[ReportRow], summary: &[SummaryRow]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        rows: &'a [ReportRow],
        summary: &'a [SummaryRow],
    }
    let mut s = serde_json::to_string_pretty(&Doc { rows, summary }).expect("report serializes");
    s.push('\n');
    s
}

/// Per-(variant, sign, epsilon) aggregate over rows.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub variant: String,
    pub sign_convention: String,
    pub epsilon: f64,
    pub n: usize,
    pub mean_lhs: f64,
    /// Standard error of mean_lhs: sample std (n-1 denominator) / sqrt(n).
    pub se_lhs: f64,
    pub mean_rhs: f64,
    pub mean_abs_err: f64,
    pub median_abs_err: f64,
    pub max_abs_err: f64,
    pub mean_rel_err: f64,
    pub median_rel_err: f64,
    pub max_rel_err: f64,
}

fn mean(xs: &[f64]) -> f64 {
    csum(xs.iter().copied()) / xs.len() as f64
}

fn sample_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = csum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Group rows by (experiment, variant, sign_convention, epsilon) in first-seen
/// order and aggregate.
pub fn summarize(rows: &[ReportRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::invalid("summarize needs at least one row"));
    }
    type Key = (String, String, String, u64);
    let mut keys: Vec<Key> = Vec::new();
    let mut groups: Vec<Vec<&ReportRow>> = Vec::new();
    for r in rows {
        let key = (
            r.experiment.clone(),
            r.variant.clone(),
            r.sign_convention.clone(),
            r.epsilon.to_bits(),
        );
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }

    Ok(groups
        .iter()
        .map(|g| {
            let lhs: Vec<f64> = g.iter().map(|r| r.lhs).collect();
            let rhs: Vec<f64> = g.iter().map(|r| r.rhs).collect();
            let abs: Vec<f64> = g.iter().map(|r| r.abs_err).collect();
            let rel: Vec<f64> = g.iter().map(|r| r.rel_err).collect();
            SummaryRow {
                experiment: g[0].experiment.clone(),
                variant: g[0].variant.clone(),
                sign_convention: g[0].sign_convention.clone(),
                epsilon: g[0].epsilon,
                n: g.len(),
                mean_lhs: mean(&lhs),
                se_lhs: sample_se(&lhs),
                mean_rhs: mean(&rhs),
                mean_abs_err: mean(&abs),
                median_abs_err: median(&abs),
                max_abs_err: abs.iter().copied().fold(0.0, f64::max),
                mean_rel_err: mean(&rel),
                median_rel_err: median(&rel),
                max_rel_err: rel.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect())
}

/// One-line machine-readable summary block.
pub fn summary_json(summary: &[SummaryRow]) -> String {
    serde_json::to_string(summary).expect("summary serializes")
}

/// Human-readable summary table.
pub fn format_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<10} {:<8} {:>12} {:>5} {:>13} {:>10} {:>13} {:>13} {:>13}\n",
        "experiment", "variant", "sign", "epsilon", "n", "mean_lhs", "se_lhs", "mean_rel", "median_rel", "max_rel"
    ));
    for s in summary {
        out.push_str(&format!(
            "{:<16} {:<10} {:<8} {:>12.6e} {:>5} {:>13.6e} {:>10.3e} {:>13.6e} {:>13.6e} {:>13.6e}\n",
            s.experiment,
            s.variant,
            s.sign_convention,
            s.epsilon,
            s.n,
            s.mean_lhs,
            s.se_lhs,
            s.mean_rel_err,
            s.median_rel_err,
            s.max_rel_err
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(path_id: u64, eps: f64, lhs: f64) -> ReportRow {
        ReportRow {
            experiment: "theorem1".into(),
            process: "brownian".into(),
            base_seed: 1,
            path_id,
            t_end: 1.0,
            n_steps: 16,
            n_bins: 8,
            epsilon: eps,
            variant: "forward".into(),
            sign_convention: "resolved".into(),
            lhs,
            rhs: 1.0,
            abs_err: (lhs - 1.0).abs(),
            rel_err: (lhs - 1.0).abs(),
        }
    }

    #[test]
    fn csv_has_fixed_header_and_row_shape() {
        let csv = to_csv(&[row(0, 0.5, 1.25)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[7], "5.0000000000000000e-1");
    }

    #[test]
    fn single_row_summary_has_zero_se() {
        let s = summarize(&[row(0, 0.5, 2.0)]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].n, 1);
        assert_eq!(s[0].mean_lhs, 2.0);
        assert_eq!(s[0].se_lhs, 0.0);
    }

    #[test]
    fn groups_by_epsilon() {
        let rows = vec![row(0, 0.5, 1.0), row(1, 0.5, 3.0), row(0, 0.25, 2.0)];
        let s = summarize(&rows).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].n, 2);
        assert_eq!(s[0].mean_lhs, 2.0);
        // sample sd of {1, 3} is sqrt(2); se = sqrt(2)/sqrt(2) = 1
        assert!((s[0].se_lhs - 1.0).abs() < 1e-14);
        assert_eq!(s[1].n, 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn median_handles_even_counts() {
        assert_eq!(median(&[3.0, 1.0]), 2.0);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn json_mirror_contains_rows_and_summary() {
        let rows = vec![row(0, 0.5, 1.0)];
        let summary = summarize(&rows).unwrap();
        let doc = to_json(&rows, &summary);
        let parsed: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert!(parsed["rows"].is_array());
        assert!(parsed["summary"].is_array());
    }
}

//! Plain-text renderings of reports.

use std::fmt::Display;

use shelf_lab::montecarlo::CltRow;
use shelf_lab::oracle::{AuditReport, AuditStatus, DistributionJson};
use shelf_lab::ratio::format_ratio;
use shelf_lab::ExperimentReport;

pub fn join<T: Display>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

/// `{a,b,c}` notation.
pub fn braces<T: Display>(items: &[T]) -> String {
    format!("{{{}}}", join(items, ","))
}

pub fn report_text(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let mut out = format!(
        "statistic        {}\nn, m             {}, {}\nsamples          {}\nseed             {}\n",
        cfg.statistic,
        cfg.spec.n(),
        cfg.spec.m(),
        cfg.sample_count,
        cfg.seed
    );
    out.push_str(&format!("sample mean      {}\n", report.summary.mean()));
    out.push_str(&format!("sample variance  {}\n", report.summary.variance()));
    out.push_str(&format!("mean std. error  {}\n", report.mean_standard_error));
    if let Some(mean) = &report.bound_values.theory_mean {
        out.push_str(&format!("theory mean      {mean}\n"));
    }
    if let Some(var) = &report.bound_values.theory_variance {
        out.push_str(&format!("theory variance  {var}\n"));
    }
    out.push_str(&format!("empirical KD     {}\n", report.empirical_kd));
    if let Some(bound) = report.bound_values.uniform_kd_bound {
        out.push_str(&format!("KD bound C/sqrtn {bound}\n"));
    }
    if let (Some(dev), Some(bound)) = (report.coupling_max_abs_dev, report.coupling_bound) {
        out.push_str(&format!("coupling |d-B|   max {dev} (bound {bound})\n"));
    }
    if let Some(res) = &report.descent_limit_residuals {
        out.push_str(&format!(
            "std. variance    {} (vs {}: {:+}, vs {}: {:+})\n",
            report.standardized_variance,
            res.coupling_limit,
            res.residual_vs_coupling,
            res.claimed_limit,
            res.residual_vs_claimed
        ));
    }
    out
}

pub fn distribution_text(dist: &DistributionJson) -> String {
    let mut out = format!(
        "{} over all {} words (n={}, m={})\n",
        dist.statistic, dist.total, dist.n, dist.m
    );
    for (value, count) in &dist.counts {
        out.push_str(&format!("{value:>6}  {count}\n"));
    }
    out.push_str(&format!("mean {}\nvariance {}\n", dist.mean, dist.variance));
    out
}

fn audit_rows(report: &AuditReport) -> Vec<[String; 7]> {
    report
        .points
        .iter()
        .flat_map(|p| {
            p.comparisons.iter().map(move |c| {
                let status = match c.status {
                    AuditStatus::Match => "MATCH",
                    AuditStatus::Finding if c.published => "FINDING",
                    AuditStatus::Finding => "FINDING*",
                };
                [
                    p.n.to_string(),
                    p.m.to_string(),
                    c.quantity.clone(),
                    format_ratio(&c.claimed),
                    format_ratio(&c.oracle),
                    format_ratio(&c.difference),
                    status.to_string(),
                ]
            })
        })
        .collect()
}

const AUDIT_HEADER: [&str; 7] = ["n", "m", "quantity", "claimed", "oracle", "difference", "status"];

pub fn audit_table(report: &AuditReport) -> String {
    let rows = audit_rows(report);
    let mut widths = AUDIT_HEADER.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(&AUDIT_HEADER);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
    }
    let findings = report.findings().count();
    let published = report.findings().filter(|(_, c)| c.published).count();
    out.push_str(&format!(
        "\n{} points, {} findings ({} in published formulas; FINDING* marks derived values)\n",
        report.points.len(),
        findings,
        published
    ));
    for skipped in &report.skipped {
        out.push_str(&format!(
            "skipped n={} m={}: {}\n",
            skipped.n, skipped.m, skipped.reason
        ));
    }
    out
}

pub fn audit_csv(report: &AuditReport) -> String {
    let mut out = format!("{}\n", AUDIT_HEADER.join(","));
    for row in audit_rows(report) {
        out.push_str(&format!("{}\n", row.join(",")));
    }
    out
}

pub fn clt_table(rows: &[CltRow]) -> String {
    let mut out = format!("{:>10}  {:>14}  {:>14}\n", "n", "empirical KD", "bound");
    for row in rows {
        out.push_str(&format!(
            "{:>10}  {:>14.6}  {:>14.6}\n",
            row.n, row.empirical_kd, row.bound
        ));
    }
    out
}

//! Human-readable summary tables. Formatting only; the JSON keeps raw values.

use std::fmt::Write;

use super::FullReport;
use crate::trend::Trend;

/// p-values below 0.001 are shown as `< 0.001`.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< 0.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn format_value(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn trend_word(t: Trend) -> &'static str {
    match t {
        Trend::Increasing => "Increasing",
        Trend::Decreasing => "Decreasing",
        Trend::NoTrend => "No trend",
    }
}

/// Markdown table: one row per variable, followed by the written conclusions.
pub fn render_markdown(report: &FullReport) -> String {
    let mut s = String::new();
    let m = &report.model;
    let _ = writeln!(
        s,
        "Model R² = {:.3}, f² = {:.3}, adjustment a = {:.4}\n",
        m.r2, m.f2_global, m.adjustment
    );
    s.push_str("| Variable | f² | Effect | Trend | MK p | Theil-Sen slope | slope p | per unit |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for v in &report.variables {
        let band = v.f2.band.map_or("n/a", |b| b.label());
        let (slope, sp) = match &v.theil_sen {
            Some(t) => (format_value(t.slope), format_p(t.p)),
            None => ("n/a".into(), "n/a".into()),
        };
        let unit = v
            .theil_sen_per_unit
            .as_ref()
            .map_or("n/a".into(), |t| format_value(t.slope));
        let _ = writeln!(
            s,
            "| {} | {:.3} | {} | {} | {} | {} | {} | {} |",
            v.variable,
            v.f2.f2_adjusted,
            band,
            trend_word(v.mann_kendall.trend),
            format_p(v.mann_kendall.p),
            slope,
            sp,
            unit
        );
    }
    s.push('\n');
    for v in &report.variables {
        let _ = writeln!(s, "- **{}**: {}", v.variable, v.narrative);
    }
    s
}

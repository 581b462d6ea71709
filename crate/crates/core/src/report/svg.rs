//! Minimal SVG line chart for one ALE profile.

use std::fmt::Write;

use crate::ale::AleProfile;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 64.0;
const TICKS: usize = 5;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Axis range padded when the data span is zero.
fn span(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        let pad = lo.abs().max(1.0) * 0.5;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn profile_svg(profile: &AleProfile) -> String {
    let (x0, x1) = span(&profile.grid);
    let (y0, y1) = span(&profile.effects);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&profile.variable)
    );

    let bottom = TOP + plot_h;
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{bottom} H{}" fill="none" stroke="black"/>"#,
        LEFT + plot_w
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (cx, cy) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{bottom}" x2="{cx:.2}" y2="{}" stroke="black"/><text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 19.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{cy:.2}" x2="{LEFT}" y2="{cy:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            cy + 4.0,
            tick_label(yv)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let z = py(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{z:.2}" x2="{}" y2="{z:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            LEFT + plot_w
        );
    }

    let points: Vec<String> = profile
        .grid
        .iter()
        .zip(&profile.effects)
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        points.join(" ")
    );

    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(&profile.variable)
    );
    let mid = TOP + plot_h / 2.0;
    let _ = writeln!(
        s,
        r#"<text x="20" y="{mid}" text-anchor="middle" transform="rotate(-90 20 {mid})">accumulated local effect</text>"#
    );
    s.push_str("</svg>\n");
    s
}

/// A file-name stem built from a column name.
pub fn file_stem(variable: &str) -> String {
    let stem: String = variable
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if stem.is_empty() {
        "_".into()
    } else {
        stem
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(name: &str, effects: Vec<f64>) -> AleProfile {
        let n = effects.len();
        AleProfile {
            variable: name.into(),
            grid: (0..n).map(|i| i as f64 * 0.5).collect(),
            grid_model_units: (0..n).map(|i| i as f64).collect(),
            effects,
            bin_counts: vec![1; n - 1],
            requested_bins: n - 1,
            flags: Vec::new(),
        }
    }

    #[test]
    fn parses_as_xml() {
        let svg = profile_svg(&profile("a<&>\"b'", vec![-1.0, 0.5, 2.0]));
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        let texts: Vec<&str> = root.descendants().filter_map(|n| n.text()).collect();
        assert!(texts.contains(&"a<&>\"b'"));
        assert!(texts.contains(&"accumulated local effect"));
        let line = root
            .descendants()
            .find(|n| n.has_tag_name("polyline"))
            .unwrap();
        assert_eq!(line.attribute("points").unwrap().split(' ').count(), 3);
    }

    #[test]
    fn flat_profile_still_renders() {
        let svg = profile_svg(&profile("flat", vec![0.0; 4]));
        roxmltree::Document::parse(&svg).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn stems_are_safe() {
        assert_eq!(file_stem("q1"), "q1");
        assert_eq!(file_stem("a b/c"), "a_b_c");
        assert_eq!(file_stem(""), "_");
    }
}

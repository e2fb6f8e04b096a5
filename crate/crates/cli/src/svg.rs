//! Scatter-plot bifurcation diagram: θ on the abscissa, every solution `x`
//! on the ordinate, colored by classification.

use std::fmt::Write;

use gibbs_tree_core::Classification;

use crate::records::SweepRecord;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn color(c: Classification) -> &'static str {
    match c {
        Classification::TranslationInvariant => "#1f77b4",
        Classification::PeriodTwo => "#d62728",
    }
}

/// `[lo, hi]` padded by 5%, or widened around a single value.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1e-3);
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

pub fn render(records: &[SweepRecord], title: &str) -> String {
    let points: Vec<(f64, f64, Classification)> = records
        .iter()
        .flat_map(|r| r.solutions.iter().map(move |s| (r.theta, s.x, s.classification)))
        .collect();
    let bounds = |f: fn(&(f64, f64, Classification)) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let ((t0, t1), (x0, x1)) = if points.is_empty() {
        ((0.0, 1.0), (0.0, 1.0))
    } else {
        let (a, b) = bounds(|p| p.0);
        let (c, d) = bounds(|p| p.1);
        (padded(a, b), padded(c, d))
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |x: f64| TOP + (x1 - x) / (x1 - x0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let frac = i as f64 / TICKS as f64;
        let (t, x) = (t0 + frac * (t1 - t0), x0 + frac * (x1 - x0));
        let (px, py) = (sx(t), sy(x));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{0:.2}" x2="{px:.2}" y2="{1:.2}" stroke="black"/><text x="{px:.2}" y="{2:.2}" text-anchor="middle">{3}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick_label(t)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{1:.2}" y="{2:.2}" text-anchor="end">{3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(x)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">θ</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">x</text>"#,
        TOP + plot_h / 2.0
    );
    for (t, x, c) in &points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, sx(*t), sy(*x), color(*c));
    }
    for (i, c) in [Classification::TranslationInvariant, Classification::PeriodTwo].into_iter().enumerate() {
        let y = TOP + 15.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT - 60.0;
        let _ = writeln!(
            s,
            r#"<circle cx="{x}" cy="{y}" r="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            color(c),
            x + 10.0,
            y + 4.0,
            c.short()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

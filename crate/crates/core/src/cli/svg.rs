//! Minimal SVG line charts and heatmaps. Numbers are printed with fixed
//! precision so the bytes depend only on the data.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Clone, Copy)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

fn tx(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-300 {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart; `marks` are vertical reference lines in data coordinates.
/// Returns None when there is nothing finite to draw.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], marks: &[f64], axes: Axes) -> Option<String> {
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| (!axes.log_x || p.0 > 0.0) && (!axes.log_y || p.1 > 0.0));
    let (x0, x1) = bounds(pts().map(|p| tx(p.0, axes.log_x)))?;
    let (y0, y1) = bounds(pts().map(|p| tx(p.1, axes.log_y)))?;
    let sx = |x: f64| PAD + (tx(x, axes.log_x) - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (tx(y, axes.log_y) - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let fmt_tick = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3}") };
    let _ = writeln!(out, "<text x=\"{PAD}\" y=\"{:.1}\">{}</text>", H - PAD + 16.0, fmt_tick(x0, axes.log_x));
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", W - PAD, H - PAD + 16.0, fmt_tick(x1, axes.log_x));
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", PAD - 4.0, H - PAD, fmt_tick(y0, axes.log_y));
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", PAD - 4.0, PAD + 10.0, fmt_tick(y1, axes.log_y));
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 16.0, escape(xlabel));
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for &m in marks {
        let x = sx(m);
        if (PAD..=W - PAD).contains(&x) {
            let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{PAD}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#999\" stroke-dasharray=\"2 3\"/>", H - PAD);
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &s.points {
            let ok = x.is_finite() && y.is_finite() && (!axes.log_x || x > 0.0) && (!axes.log_y || y > 0.0);
            if !ok {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, sx(x), sy(y));
            pen_up = false;
        }
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>", d.trim_end());
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            W - PAD - 150.0,
            PAD + 16.0 + 14.0 * k as f64,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// Heatmap of `values[row][col]` with a linear grey-to-blue ramp.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, values: &[Vec<f64>]) -> Option<String> {
    let (lo, hi) = bounds(values.iter().flatten().copied())?;
    let rows = values.len();
    let cols = values.iter().map(Vec::len).max()?;
    let cw = (W - 2.0 * PAD) / cols as f64;
    let ch = (H - 2.0 * PAD) / rows as f64;
    let mut out = String::new();
    header(&mut out, title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if v.is_finite() { (v - lo) / (hi - lo) } else { 0.0 };
            let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#{:02x}{:02x}{:02x}\"/>",
                PAD + j as f64 * cw,
                H - PAD - (i + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                c(240.0, 20.0),
                c(240.0, 60.0),
                c(240.0, 160.0)
            );
        }
    }
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 16.0, escape(xlabel));
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">range {lo:.4e} .. {hi:.4e}</text>", W - PAD, PAD - 8.0);
    out.push_str("</svg>\n");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(points: Vec<(f64, f64)>) -> Series {
        Series { label: "s".into(), points, dashed: false }
    }

    #[test]
    fn empty_input_draws_nothing() {
        assert!(line_chart("t", "x", "y", &[], &[], Axes { log_x: false, log_y: false }).is_none());
        assert!(heatmap("t", "x", "y", &[]).is_none());
    }

    #[test]
    fn output_is_deterministic_and_well_formed() {
        let s = [series((0..20).map(|k| (k as f64, (k as f64).sin())).collect())];
        let a = line_chart("sin", "x", "y", &s, &[3.0], Axes { log_x: false, log_y: false }).unwrap();
        let b = line_chart("sin", "x", "y", &s, &[3.0], Axes { log_x: false, log_y: false }).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<path").count(), 1);
        assert_eq!(a.matches("<line").count(), 1);
    }

    #[test]
    fn log_axes_skip_nonpositive_points() {
        let s = [series(vec![(0.0, 1.0), (1.0, 1.0), (10.0, 0.1)])];
        let svg = line_chart("v", "r", "V", &s, &[], Axes { log_x: true, log_y: true }).unwrap();
        assert!(svg.contains("M") && !svg.contains("NaN"));
    }
}

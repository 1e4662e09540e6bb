//! Static SVG charts for reports: ratio-vs-j lines for the counterexample
//! scan, margin histograms for inequality suites.

use std::collections::BTreeMap;
use std::fmt::Write;

use homog::experiments::{Cell, ExperimentReport};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render(report: &ExperimentReport) -> Option<String> {
    let title = format!("{} ({})", report.name, report.verdict.name());
    if report.column("j").is_some() && report.column("ratio").is_some() {
        Some(lines(report, &title))
    } else if report.column("margin").is_some() {
        Some(histogram(&report.numbers("margin"), &title, "log10 margin"))
    } else if report.column("value").is_some() {
        let v = report.numbers("value");
        let pts: Vec<(f64, f64)> = v.iter().enumerate().filter(|(_, y)| y.is_finite()).map(|(i, &y)| (i as f64, y)).collect();
        Some(chart(&title, "row", "value", &[("value".into(), pts)]))
    } else {
        None
    }
}

fn lines(report: &ExperimentReport, title: &str) -> String {
    let (jc, rc, pc) = (report.column("j").unwrap(), report.column("ratio").unwrap(), report.column("p"));
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &report.rows {
        let key = pc.map_or("ratio".to_string(), |c| format!("p={}", as_f64(&row[c]).unwrap_or(f64::NAN)));
        if let (Some(j), Some(r)) = (as_f64(&row[jc]), as_f64(&row[rc])) {
            series.entry(key).or_default().push((j, r));
        }
    }
    let series: Vec<(String, Vec<(f64, f64)>)> = series.into_iter().collect();
    chart(title, "j", "ratio", &series)
}

fn as_f64(c: &Cell) -> Option<f64> {
    match c {
        Cell::Int(v) => Some(*v as f64),
        Cell::Num(v) => Some(*v),
        Cell::Text(_) => None,
    }
}

fn histogram(values: &[f64], title: &str, xlabel: &str) -> String {
    let logs: Vec<f64> = values.iter().filter(|v| **v > 0.0 && v.is_finite()).map(|v| v.log10()).collect();
    let (lo, hi) = bounds(logs.iter().copied());
    let bins = 20;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &logs {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut s = header(title);
    axes(&mut s, xlabel, "count", (lo, hi), (0.0, top));
    let bw = (W - 2.0 * PAD) / bins as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = (H - 2.0 * PAD) * c as f64 / top;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            PAD + i as f64 * bw,
            H - PAD - h,
            bw - 1.0,
            h,
            COLORS[0]
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xr = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let yr = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let mut s = header(title);
    axes(&mut s, xlabel, ylabel, xr, yr);
    let map = |x: f64, y: f64| {
        (PAD + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * PAD), H - PAD - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD))
    };
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| map(x, y)).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(s, r#"<text x="{:.0}" y="{:.0}" fill="{color}" font-size="12">{}</text>"#, W - PAD - 80.0, PAD + 16.0 * k as f64, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn header(title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD, PAD);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" font-size="11">{}</text>"#, y0 + 16.0, tick(xr.0));
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" font-size="11" text-anchor="end">{}</text>"#, y0 + 16.0, tick(xr.1));
    let _ = writeln!(s, r#"<text x="{}" y="{y0}" font-size="11" text-anchor="end">{}</text>"#, x0 - 4.0, tick(yr.0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, x0 - 4.0, y1 + 4.0, tick(yr.1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 20.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Standalone SVG plots rendered from the CSV artifacts.

use std::fmt::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use uqbench_core::{Error, Result};

use crate::manifest::TOOL_VERSION;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 64.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(svg: &mut String, title: &str, source: &str, csv: &[u8]) {
    let digest = hex_prefix(csv);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<!-- {TOOL_VERSION}; source: {source}; sha256: {digest} -->");
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn hex_prefix(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let x = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let y = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let (px, py) = (f.px(x), f.py(y));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#, b + 18.0);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.2}</text>"#, l - 6.0, py + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn legend(svg: &mut String, entries: &[(String, &str, bool)]) {
    for (i, (label, color, dashed)) in entries.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = W - RIGHT - 190.0;
        let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(label));
    }
}

fn parse_err(path: &Path, line: u64, detail: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        detail: format!("line {line}: {detail}"),
    }
}

fn records(path: &Path, csv_bytes: &[u8], expected_header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::Reader::from_reader(csv_bytes);
    let header = rdr.headers().map_err(|e| parse_err(path, 1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != expected_header {
        return Err(parse_err(path, 1, format!("expected header {}", expected_header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {field:?}")));
    }
    Ok(v)
}

fn parse_opt(path: &Path, line: u64, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(path, line, field).map(Some)
    }
}

/// One step curve per group of a `group,value,cum_frac` CSV. Groups listed
/// in `expected` but absent from the data are named in the legend.
pub fn render_cdf_svg(path: &Path, source: &str, csv_bytes: &[u8], title: &str, expected: &[&str]) -> Result<String> {
    let rows = records(path, csv_bytes, &["group", "value", "cum_frac"])?;
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (line, r) in &rows {
        let (v, f) = (parse_f64(path, *line, &r[1])?, parse_f64(path, *line, &r[2])?);
        match groups.iter_mut().find(|g| g.0 == r[0]) {
            Some(g) => g.1.push((v, f)),
            None => groups.push((r[0].clone(), vec![(v, f)])),
        }
    }
    let (lo, hi) = groups
        .iter()
        .flat_map(|g| g.1.iter().map(|p| p.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (x0, x1) = if lo.is_finite() { padded(lo, hi) } else { (0.0, 1.0) };
    let frame = Frame { x0, x1, y0: 0.0, y1: 1.0 };

    let mut svg = String::new();
    header(&mut svg, title, source, csv_bytes);
    axes(&mut svg, &frame, "uncertainty (nats)", "cumulative fraction");
    let mut entries = Vec::new();
    for (i, (name, pts)) in groups.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = format!("M{:.2},{:.2}", frame.px(x0), frame.py(0.0));
        let mut prev = 0.0;
        for &(v, f) in pts {
            let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", frame.px(v), frame.py(prev), frame.px(v), frame.py(f));
            prev = f;
        }
        let _ = write!(d, " L{:.2},{:.2}", frame.px(x1), frame.py(prev));
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        entries.push((format!("{name} (n={})", pts.len()), color, false));
    }
    for name in expected {
        if !groups.iter().any(|g| g.0 == *name) {
            entries.push((format!("{name} (no samples, omitted)"), "#999999", true));
        }
    }
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Mean uncertainty of correct and wrong predictions with 95% intervals
/// (left axis) and UAR (right axis) over the SNR grid, high SNR on the left.
pub fn render_snr_svg(path: &Path, source: &str, csv_bytes: &[u8], title: &str) -> Result<String> {
    let rows = records(
        path,
        csv_bytes,
        &["snr_db", "uar", "mean_unc_correct", "ci95_correct", "mean_unc_wrong", "ci95_wrong"],
    )?;
    struct Row {
        snr: f64,
        uar: f64,
        correct: Option<(f64, f64)>,
        wrong: Option<(f64, f64)>,
    }
    let mut pts = Vec::with_capacity(rows.len());
    for (line, r) in &rows {
        let pair = |m: &str, c: &str| -> Result<Option<(f64, f64)>> {
            match parse_opt(path, *line, m)? {
                Some(m) => Ok(Some((m, parse_opt(path, *line, c)?.unwrap_or(0.0)))),
                None => Ok(None),
            }
        };
        pts.push(Row {
            snr: parse_f64(path, *line, &r[0])?,
            uar: parse_f64(path, *line, &r[1])?,
            correct: pair(&r[2], &r[3])?,
            wrong: pair(&r[4], &r[5])?,
        });
    }
    if pts.is_empty() {
        return Err(parse_err(path, 2, "no SNR rows"));
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.snr), b.max(p.snr)));
    let (lo, hi) = padded(lo, hi);
    let y_max = pts
        .iter()
        .flat_map(|p| [p.correct, p.wrong])
        .flatten()
        .map(|(m, c)| m + c)
        .fold(0.0f64, f64::max);
    let frame = Frame {
        x0: hi,
        x1: lo,
        y0: 0.0,
        y1: if y_max > 0.0 { y_max * 1.1 } else { 1.0 },
    };
    let uar_frame = Frame { x0: hi, x1: lo, y0: 0.0, y1: 1.0 };

    let mut svg = String::new();
    header(&mut svg, title, source, csv_bytes);
    axes(&mut svg, &frame, "SNR (dB)", "mean uncertainty (nats)");
    let r = W - RIGHT;
    let _ = writeln!(svg, r#"<line x1="{r}" y1="{TOP}" x2="{r}" y2="{}" stroke="black"/>"#, H - BOTTOM);
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        let py = uar_frame.py(y);
        let _ = writeln!(svg, r#"<line x1="{r}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="black"/>"#, r + 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}">{y:.2}</text>"#, r + 6.0, py + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text transform="translate({},{:.2}) rotate(90)" text-anchor="middle">UAR</text>"#,
        W - 16.0,
        (TOP + H - BOTTOM) / 2.0
    );

    let mut entries = Vec::new();
    let series: [(&str, &str, fn(&Row) -> Option<(f64, f64)>); 2] =
        [("correct", COLORS[0], |p| p.correct), ("wrong", COLORS[1], |p| p.wrong)];
    for (name, color, get) in series {
        let present: Vec<(f64, f64, f64)> = pts.iter().filter_map(|p| get(p).map(|(m, c)| (p.snr, m, c))).collect();
        if present.is_empty() {
            entries.push((format!("{name} (no samples, omitted)"), "#999999", true));
            continue;
        }
        let d: Vec<String> = present
            .iter()
            .map(|&(s, m, _)| format!("{:.2},{:.2}", frame.px(s), frame.py(m)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
        for &(s, m, c) in &present {
            let x = frame.px(s);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                frame.py(m - c),
                frame.py(m + c)
            );
        }
        entries.push((format!("uncertainty, {name}"), color, false));
    }
    let d: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.2},{:.2}", uar_frame.px(p.snr), uar_frame.py(p.uar)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="5,3"/>"#,
        d.join(" ")
    );
    entries.push(("UAR (right axis)".to_string(), "black", true));
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_group_noted_in_legend() {
        let csv = b"group,value,cum_frac\ncorrect,0.1,0.5\ncorrect,0.3,1\n";
        let svg = render_cdf_svg(Path::new("x.csv"), "x.csv", csv, "t", &["correct", "wrong"]).unwrap();
        assert!(svg.contains("wrong (no samples, omitted)"));
        assert!(svg.contains("correct (n=2)"));
        assert!(svg.contains("source: x.csv"));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = b"group,value,cum_frac\ncorrect,0.1,0.5\ncorrect,abc,1\n";
        let err = render_cdf_svg(Path::new("x.csv"), "x.csv", csv, "t", &[]).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn snr_plot_is_deterministic() {
        let csv = b"snr_db,uar,mean_unc_correct,ci95_correct,mean_unc_wrong,ci95_wrong\n30,0.9,0.2,0.01,,\n0,0.6,0.5,0.02,0.8,0.05\n";
        let a = render_snr_svg(Path::new("s.csv"), "s.csv", csv, "t").unwrap();
        let b = render_snr_svg(Path::new("s.csv"), "s.csv", csv, "t").unwrap();
        assert_eq!(a, b);
        assert!(a.contains("UAR (right axis)"));
    }
}

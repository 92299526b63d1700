//! Minimal standalone SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::output::write_file;
use super::{HarnessError, SummaryRow};
use crate::sim::Algorithm;

const W: f64 = 760.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * mag >= v {
            return m * mag;
        }
    }
    10.0 * mag
}

fn y_axis(s: &mut String, max: f64, label: &str) {
    let plot_h = H - TOP - BOTTOM;
    for i in 0..=5 {
        let v = max * i as f64 / 5.0;
        let y = H - BOTTOM - plot_h * i as f64 / 5.0;
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            trim(v)
        );
    }
    let _ = writeln!(
        s,
        "<text transform=\"translate(18,{:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        TOP + plot_h / 2.0,
        escape(label)
    );
}

fn trim(v: f64) -> String {
    let t = format!("{v:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn legend(s: &mut String, entries: &[(String, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 15.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            y - 10.0,
            x + 18.0,
            y,
            escape(name)
        );
    }
}

/// Grouped bars of mean time to contact and to max flux per cell, with one
/// standard deviation error bars and a star at the median time to max flux.
pub fn times_chart(rows: &[SummaryRow], title: &str) -> Option<String> {
    if rows.is_empty() {
        return None;
    }
    let top = rows
        .iter()
        .flat_map(|r| [r.contact, r.maxflux])
        .flatten()
        .map(|st| (st.mean + st.std).max(st.median))
        .fold(0.0, f64::max);
    let max = nice_max(top);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let group_w = plot_w / rows.len() as f64;
    let bar_w = group_w * 0.3;
    let ys = |v: f64| H - BOTTOM - plot_h * (v / max).min(1.0);

    let mut s = header(title);
    y_axis(&mut s, max, "minutes (simulated)");
    for (g, r) in rows.iter().enumerate() {
        let gx = LEFT + g as f64 * group_w;
        for (k, (st, color)) in [(r.contact, PALETTE[0]), (r.maxflux, PALETTE[1])]
            .into_iter()
            .enumerate()
        {
            let Some(st) = st else { continue };
            let x = gx + group_w * 0.15 + k as f64 * bar_w;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w:.1}\" height=\"{:.1}\" fill=\"{color}\" fill-opacity=\"0.8\"/>",
                ys(st.mean),
                H - BOTTOM - ys(st.mean)
            );
            let cx = x + bar_w / 2.0;
            let _ = writeln!(
                s,
                "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
                ys((st.mean - st.std).max(0.0)),
                ys(st.mean + st.std)
            );
            if k == 1 {
                let _ = writeln!(
                    s,
                    "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"16\">&#9733;</text>",
                    ys(st.median) + 5.0
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{} N={}</text>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#555\">{}/{} ok</text>",
            gx + group_w / 2.0,
            H - BOTTOM + 16.0,
            r.cell.algorithm,
            r.cell.n,
            gx + group_w / 2.0,
            H - BOTTOM + 32.0,
            r.successes,
            r.trials
        );
    }
    legend(
        &mut s,
        &[
            ("time to contact".to_string(), PALETTE[0]),
            ("time to max flux".to_string(), PALETTE[1]),
        ],
    );
    s.push_str("</svg>\n");
    Some(s)
}

/// Success rate against failure probability on a log axis, one curve per
/// algorithm and failure model.
pub fn success_chart(rows: &[SummaryRow], title: &str) -> Option<String> {
    let points: Vec<(String, f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let (model, p) = if r.cell.p_inplume > 0.0 && r.cell.p_generic == 0.0 {
                ("in-plume", r.cell.p_inplume)
            } else if r.cell.p_generic > 0.0 && r.cell.p_inplume == 0.0 {
                ("generic", r.cell.p_generic)
            } else {
                return None;
            };
            Some((format!("{} ({model})", r.cell.algorithm), p, r.success_rate()))
        })
        .collect();
    if points.is_empty() {
        return None;
    }
    let mut names: Vec<String> = Vec::new();
    for (n, _, _) in &points {
        if !names.contains(n) {
            names.push(n.clone());
        }
    }
    let lo = points.iter().map(|p| p.1.log10()).fold(f64::INFINITY, f64::min).floor();
    let hi = points.iter().map(|p| p.1.log10()).fold(f64::NEG_INFINITY, f64::max).ceil();
    let span = (hi - lo).max(1.0);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let xs = |p: f64| LEFT + plot_w * (p.log10() - lo) / span;
    let ys = |v: f64| H - BOTTOM - plot_h * v;

    let mut s = header(title);
    y_axis(&mut s, 1.0, "success rate");
    let mut e = lo as i32;
    while e as f64 <= hi {
        let x = xs(10f64.powi(e));
        let _ = writeln!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{TOP}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{e}</text>",
            H - BOTTOM,
            H - BOTTOM + 16.0
        );
        e += 1;
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">failure probability per tick</text>",
        LEFT + plot_w / 2.0,
        H - 14.0
    );
    let mut entries = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if name.contains("in-plume") { " stroke-dasharray=\"6 3\"" } else { "" };
        let mut pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| &p.0 == name)
            .map(|p| (p.1, p.2))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts
            .iter()
            .map(|&(p, v)| format!("{:.1},{:.1}", xs(p), ys(v)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            path.join(" ")
        );
        for &(p, v) in &pts {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>",
                xs(p),
                ys(v)
            );
        }
        entries.push((name.clone(), color));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Some(s)
}

fn is_failure_sweep(r: &SummaryRow) -> bool {
    r.cell.p_generic > 0.0 || r.cell.p_inplume > 0.0
}

/// Writes the charts that apply to `rows` under `name` into `dir` and
/// returns their paths; an empty summary writes nothing.
pub fn emit_plots(
    rows: &[SummaryRow],
    dir: &Path,
    name: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    if rows.is_empty() {
        return Ok(written);
    }
    let (sweep, plain): (Vec<SummaryRow>, Vec<SummaryRow>) =
        rows.iter().cloned().partition(is_failure_sweep);
    if let Some(svg) = times_chart(&plain, &format!("{name}: time to contact and to max flux")) {
        let path = dir.join(format!("{name}_times.svg"));
        write_file(&path, &svg)?;
        written.push(path);
    }
    if let Some(svg) = success_chart(&sweep, "success rate under failures (N=20)") {
        let path = dir.join("exp3_4_success.svg");
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Legend order used by the success chart.
pub fn curve_names() -> Vec<String> {
    let mut v = Vec::new();
    for model in ["generic", "in-plume"] {
        for a in Algorithm::ALL {
            v.push(format!("{a} ({model})"));
        }
    }
    v
}

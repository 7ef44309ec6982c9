//! Minimal SVG line plots and heatmaps.

use std::fmt::Write as _;

use skdvb::FieldTrajectory;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    LogLog,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), labels: (&str, &str), log: bool) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x.0 + f * (x.1 - x.0), y.0 + f * (y.1 - y.0));
        let (xv, yv) = if log { (10f64.powf(xv), 10f64.powf(yv)) } else { (xv, yv) };
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(labels.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(labels.1)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Polyline plot of several series with a legend.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], scale: Scale) -> String {
    let log = scale == Scale::LogLog;
    let tr = |v: f64| if log { v.log10() } else { v };
    let usable = |p: &&(f64, f64)| !log || (p.0 > 0.0 && p.1 > 0.0);
    let pts = || series.iter().flat_map(|s| s.points.iter().filter(usable));
    let x = bounds(pts().map(|p| tr(p.0)));
    let y = bounds(pts().map(|p| tr(p.1)));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, W, H, title);
    axes(&mut out, x, y, (xlabel, ylabel), log);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(usable)
            .map(|p| {
                let px = LEFT + (tr(p.0) - x.0) / (x.1 - x.0) * pw;
                let py = TOP + ph - (tr(p.1) - y.0) / (y.1 - y.0) * ph;
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT + 10.0,
            W - RIGHT + 30.0,
            W - RIGHT + 35.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Profiles `u(t, ·)` at up to `count` evenly spaced times.
pub fn slice_plot(title: &str, field: &FieldTrajectory, count: usize) -> String {
    let tg = field.tgrid();
    let n = tg.n_steps();
    let count = count.clamp(1, n + 1);
    let mut idx: Vec<usize> = (0..count)
        .map(|k| if count == 1 { n } else { k * n / (count - 1) })
        .collect();
    idx.dedup();
    let zs: Vec<f64> = field.sgrid().nodes().collect();
    let series: Vec<Series> = idx
        .iter()
        .map(|&i| Series {
            label: format!("t = {:.3}", tg.node(i)),
            points: zs.iter().copied().zip(field.slice(i).iter().copied()).collect(),
        })
        .collect();
    line_plot(title, "z", "u", &series, Scale::Linear)
}

fn color(f: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let f = if f.is_finite() { f.clamp(0.0, 1.0) } else { 0.0 };
    let k = STOPS.iter().rposition(|s| s.0 <= f).unwrap_or(0).min(STOPS.len() - 2);
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let w = (f - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + w * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Space-time heatmap of `u`, subsampled to at most 160 × 120 cells.
pub fn heatmap(title: &str, field: &FieldTrajectory) -> String {
    let (tg, sg) = (field.tgrid(), field.sgrid());
    let (nt, nz) = (tg.n_nodes(), sg.n_points());
    let (ct, cz) = (nt.min(120), nz.min(160));
    let rows: Vec<usize> = (0..ct).map(|k| k * (nt - 1) / (ct - 1).max(1)).collect();
    let cols: Vec<usize> = (0..cz).map(|k| k * (nz - 1) / (cz - 1).max(1)).collect();
    let (lo, hi) = bounds(field.values().iter().copied());
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let (cw, chh) = (pw / cz as f64, ph / ct as f64);
    let mut out = String::new();
    header(&mut out, W, H, title);
    for (r, &i) in rows.iter().enumerate() {
        let y = TOP + ph - (r + 1) as f64 * chh;
        for (c, &j) in cols.iter().enumerate() {
            let v = field.value(i, j);
            let _ = write!(
                out,
                r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + c as f64 * cw,
                cw + 0.05,
                chh + 0.05,
                color((v - lo) / (hi - lo))
            );
        }
        out.push('\n');
    }
    axes(&mut out, (sg.z_min(), sg.z_max()), (tg.t0(), tg.t_end()), ("z", "t"), false);
    for k in 0..=10 {
        let f = k as f64 / 10.0;
        let y = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="16" height="{:.1}" fill="{}"/>"#,
            W - RIGHT + 20.0,
            y - ph / 10.0,
            ph / 10.0 + 0.5,
            color(f)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}">{}</text><text x="{:.1}" y="{:.1}">{}</text>"#,
        W - RIGHT + 42.0,
        TOP + 10.0,
        tick(hi),
        W - RIGHT + 42.0,
        TOP + ph,
        tick(lo)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use skdvb::field::Provenance;
    use skdvb::{SpatialGrid, TimeGrid};

    #[test]
    fn plots_are_well_formed() {
        let tg = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let sg = SpatialGrid::new(0.0, 7.0, 8).unwrap();
        let f = FieldTrajectory::new(tg, sg, (0..40).map(f64::from).collect(), Provenance::Exact).unwrap();
        for svg in [slice_plot("a<b", &f, 3), heatmap("h", &f)] {
            assert!(svg.starts_with("<svg"));
            assert!(svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("NaN"));
        }
        assert!(slice_plot("a<b", &f, 3).contains("a&lt;b"));
        let s = Series {
            label: "e".into(),
            points: vec![(0.1, 1e-3), (0.05, 2e-4), (0.0, 0.0)],
        };
        assert!(!line_plot("c", "dt", "err", &[s], Scale::LogLog).contains("NaN"));
    }

    #[test]
    fn palette_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }
}

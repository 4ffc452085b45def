//! Minimal SVG rendering: polylines and heatmaps on a fixed canvas.
//! The CSV files are the canonical artifacts; these are quick-look
//! companions.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 20.0;
const MB: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn finite_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo < hi) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 0.5, c + 0.5)
    } else {
        (lo, hi)
    }
}

fn open_figure(x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let (x0, y0, x1, y1) = (ML, H - MB, W - MR, MT);
    let _ = writeln!(
        s,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        0.5 * (x0 + x1),
        H - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        xml_escape(y_label)
    );
    s
}

fn axis_labels(s: &mut String, xb: (f64, f64), yb: (f64, f64)) {
    let (x0, y0, x1, y1) = (ML, H - MB, W - MR, MT);
    let _ = writeln!(
        s,
        "<text x=\"{x0}\" y=\"{}\" text-anchor=\"middle\">{:.4}</text>\
         <text x=\"{x1}\" y=\"{}\" text-anchor=\"middle\">{:.4}</text>",
        y0 + 18.0,
        xb.0,
        y0 + 18.0,
        xb.1
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4}</text>\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4}</text>",
        x0 - 6.0,
        y0,
        yb.0,
        x0 - 6.0,
        y1 + 10.0,
        yb.1
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render one or more (x, y) series as colored polylines.
pub fn polyline_figure(
    x_label: &str,
    y_label: &str,
    series: &[(&str, &[f64], &[f64])],
) -> String {
    let mut s = open_figure(x_label, y_label);
    let xb = finite_bounds(series.iter().flat_map(|(_, x, _)| x.iter().copied()));
    let yb = finite_bounds(series.iter().flat_map(|(_, _, y)| y.iter().copied()));
    let (x0, y0, x1, y1) = (ML, H - MB, W - MR, MT);
    let sx = (x1 - x0) / (xb.1 - xb.0);
    let sy = (y0 - y1) / (yb.1 - yb.0);
    for (si, (name, xs, ys)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(ys.iter()) {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let px = x0 + (x - xb.0) * sx;
            let py = y0 - (y - yb.0) * sy;
            let _ = write!(pts, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            x1 - 150.0,
            y1 + 16.0 + 16.0 * si as f64,
            xml_escape(name)
        );
    }
    axis_labels(&mut s, xb, yb);
    s.push_str("</svg>\n");
    s
}

/// Render a dense map `z[row][col]` with rows spanning `y_axis` and
/// columns spanning `x_axis`, on a blue–white–red ramp.
pub fn heatmap_figure(
    x_label: &str,
    y_label: &str,
    x_axis: &[f64],
    y_axis: &[f64],
    z: &[Vec<f64>],
) -> String {
    let mut s = open_figure(x_label, y_label);
    let zb = finite_bounds(z.iter().flat_map(|r| r.iter().copied()));
    let (x0, y0, x1, y1) = (ML, H - MB, W - MR, MT);
    let (nc, nr) = (x_axis.len(), y_axis.len());
    let cw = (x1 - x0) / nc as f64;
    let ch = (y0 - y1) / nr as f64;
    for (ri, row) in z.iter().enumerate() {
        for (ci, &v) in row.iter().enumerate() {
            let t = if v.is_finite() { ((v - zb.0) / (zb.1 - zb.0)).clamp(0.0, 1.0) } else { 0.0 };
            let (r, g, b) = if t < 0.5 {
                let u = 2.0 * t;
                ((40.0 + 215.0 * u) as u8, (60.0 + 195.0 * u) as u8, 255u8)
            } else {
                let u = 2.0 * (t - 0.5);
                (255u8, (255.0 - 195.0 * u) as u8, (255.0 - 215.0 * u) as u8)
            };
            let px = x0 + ci as f64 * cw;
            let py = y0 - (ri + 1) as f64 * ch;
            let _ = writeln!(
                s,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"rgb({r},{g},{b})\"/>",
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axis_labels(
        &mut s,
        finite_bounds(x_axis.iter().copied()),
        finite_bounds(y_axis.iter().copied()),
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_figure_is_wellformed() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.5, 0.25, 0.75];
        let s = polyline_figure("t (ns)", "P1", &[("fringe", &x, &y)]);
        assert!(s.starts_with("<svg"));
        assert!(s.ends_with("</svg>\n"));
        assert!(s.contains("<polyline"));
        assert!(s.matches("<svg").count() == 1);
    }

    #[test]
    fn flat_and_nonfinite_data_do_not_break_scaling() {
        let x = [0.0, 1.0];
        let y = [0.3, 0.3];
        let s = polyline_figure("x", "y", &[("flat", &x, &y)]);
        assert!(!s.contains("NaN"));
        let z = vec![vec![f64::NAN, 1.0], vec![2.0, 3.0]];
        let s = heatmap_figure("x", "y", &[0.0, 1.0], &[0.0, 1.0], &z);
        assert!(!s.contains("NaN"));
        assert!(s.contains("rgb("));
    }
}

//! Minimal static SVG 1.1 line charts: axes, ticks, polylines, legend and
//! optional vertical markers. No external plotting dependency.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliResult;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
    /// Vertical reference lines with labels (e.g. a squeezing bound).
    pub markers: Vec<(f64, String)>,
    pub log_x: bool,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            curves: Vec::new(),
            markers: Vec::new(),
            log_x: false,
        }
    }

    pub fn render(&self) -> String {
        let xs = |x: f64| if self.log_x { x.log10() } else { x };
        let finite = |v: &f64| v.is_finite();
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min: f64 = 0.0;
        let mut y_max = f64::NEG_INFINITY;
        for c in &self.curves {
            for &(x, y) in c.points.iter().filter(|(x, y)| finite(x) && finite(y)) {
                x_min = x_min.min(xs(x));
                x_max = x_max.max(xs(x));
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        for (x, _) in &self.markers {
            x_min = x_min.min(xs(*x));
            x_max = x_max.max(xs(*x));
        }
        if !x_min.is_finite() || x_max <= x_min {
            x_min = 0.0;
            x_max = 1.0;
        }
        if !y_max.is_finite() || y_max <= y_min {
            y_max = y_min + 1.0;
        }
        y_max *= 1.05;

        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let px = |x: f64| MARGIN_L + (xs(x) - x_min) / (x_max - x_min) * plot_w;
        let py = |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
        );
        let _ = writeln!(
            out,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            MARGIN_L + plot_w / 2.0,
            escape(&self.title)
        );

        // frame + ticks
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
             fill=\"none\" stroke=\"black\"/>"
        );
        for i in 0..=8 {
            let fx = x_min + (x_max - x_min) * i as f64 / 8.0;
            let x_px = MARGIN_L + plot_w * i as f64 / 8.0;
            let label = if self.log_x { 10f64.powf(fx) } else { fx };
            let _ = writeln!(
                out,
                "<line x1=\"{x_px:.1}\" y1=\"{:.1}\" x2=\"{x_px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\
                 <text x=\"{x_px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                MARGIN_T + plot_h,
                MARGIN_T + plot_h + 5.0,
                MARGIN_T + plot_h + 20.0,
                tick_label(label)
            );
        }
        for i in 0..=5 {
            let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
            let y_px = py(fy);
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{y_px:.1}\" x2=\"{MARGIN_L}\" y2=\"{y_px:.1}\" stroke=\"black\"/>\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                MARGIN_L - 5.0,
                MARGIN_L - 9.0,
                y_px + 4.0,
                tick_label(fy)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (x, label) in &self.markers {
            let x_px = px(*x);
            let _ = writeln!(
                out,
                "<line x1=\"{x_px:.1}\" y1=\"{MARGIN_T}\" x2=\"{x_px:.1}\" y2=\"{:.1}\" \
                 stroke=\"#999999\" stroke-dasharray=\"2,4\"/>\
                 <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"#666666\">{}</text>",
                MARGIN_T + plot_h,
                x_px + 4.0,
                MARGIN_T + 14.0,
                escape(label)
            );
        }

        for (i, curve) in self.curves.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if curve.dashed {
                " stroke-dasharray=\"7,4\""
            } else {
                ""
            };
            let pts: Vec<String> = curve
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash} points=\"{}\"/>",
                pts.join(" ")
            );
            let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
                 stroke-width=\"1.8\"{dash}/>\
                 <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>",
                MARGIN_L + 10.0,
                MARGIN_L + 40.0,
                MARGIN_L + 46.0,
                ly + 4.0,
                escape(&curve.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write_to(&self, path: &Path) -> CliResult<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.01..10000.0).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_curves_and_markers() {
        let mut chart = Chart::new("demo", "x", "y");
        chart.curves.push(Curve {
            label: "one".into(),
            points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
            dashed: false,
        });
        chart.markers.push((1.5, "bound".into()));
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("bound"));
        assert!(svg.ends_with("</svg>\n"));
    }
}

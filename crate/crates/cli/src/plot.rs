//! Minimal self-contained SVG line plots. One file, no external assets,
//! no scripting — just axes, ticks, and a polyline.

use std::path::Path;

use crate::config::{io_error, AppError};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// Render `ys` against 1-based index as an SVG document.
pub fn render_line_plot(title: &str, x_label: &str, y_label: &str, ys: &[f64]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let y_max = ys.iter().copied().fold(0.0_f64, f64::max).max(1e-300) * 1.05;
    let n = ys.len().max(1);

    let x_of = |i: usize| MARGIN_LEFT + plot_w * (i as f64 / (n.max(2) - 1) as f64);
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v / y_max).clamp(0.0, 1.0));

    let points: Vec<String> = ys
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
        .collect();

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"14\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{:.2}\" x2=\"{x0:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n",
        MARGIN_TOP
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT + plot_w
    ));

    // Y ticks at 0, half, and full scale.
    for frac in [0.0_f64, 0.5, 1.0] {
        let v = y_max * frac;
        let y = y_of(v);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.3e}</text>\n",
            x0 - 9.0,
            y + 5.0,
            v
        ));
    }

    // X ticks at the first, middle, and last sample.
    for i in [0, n.saturating_sub(1) / 2, n.saturating_sub(1)] {
        let x = x_of(i);
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 22.0,
            i + 1
        ));
    }

    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    ));

    if ys.len() == 1 {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f6fb2\"/>\n",
            x_of(0),
            y_of(ys[0])
        ));
    } else if !ys.is_empty() {
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write the plot to disk.
pub fn write_line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    ys: &[f64],
) -> Result<(), AppError> {
    let svg = render_line_plot(title, x_label, y_label, ys);
    std::fs::write(path, svg).map_err(|e| io_error(path, e))
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_well_formed_and_self_contained() {
        let ys = [0.1, 0.4, 0.9, 0.3, 0.05];
        let svg = render_line_plot("conversion per photon", "n", "P_stokes", &ys);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("href"));
        assert!(!svg.contains("script"));
    }

    #[test]
    fn degenerate_series_still_render() {
        assert!(render_line_plot("t", "x", "y", &[]).contains("</svg>"));
        assert!(render_line_plot("t", "x", "y", &[0.5]).contains("circle"));
        assert!(render_line_plot("t", "x", "y", &[0.0, 0.0]).contains("polyline"));
    }
}

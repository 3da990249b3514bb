//! Plot-ready panel output: one CSV and one SVG per reported quantity, each
//! carrying the simulation, adjusted, and measure-zero curves side by side.
//!
//! The SVG renderer is a deliberately small hand-rolled line chart (axes,
//! ticks, legend, one polyline per series) so the crate carries no charting
//! dependency.

use std::path::{Path, PathBuf};

use crate::report::{write_atomic, Comparison, HarnessError, Quantity};

/// One curve on a chart.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [(f64, f64)],
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn nice_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.01..10_000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Renders a minimal line chart as an SVG document.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    // breathing room above and below the data
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // axes
    let x0 = sx(x_min);
    let x1 = sx(x_max);
    let y0 = sy(y_min);
    let y1 = sy(y_max);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));

    // ticks
    const TICKS: usize = 5;
    for k in 0..=TICKS {
        let fx = x_min + (x_max - x_min) * k as f64 / TICKS as f64;
        let px = sx(fx);
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            nice_number(fx)
        ));
        let fy = y_min + (y_max - y_min) * k as f64 / TICKS as f64;
        let py = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 8.0,
            py + 4.0,
            nice_number(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    // series and legend
    for (si, s) in series.iter().enumerate() {
        let mut path = String::new();
        for &(x, y) in s.points {
            if !path.is_empty() {
                path.push(' ');
            }
            path.push_str(&format!("{:.2},{:.2}", sx(x), sy(y)));
        }
        svg.push_str(&format!(
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>\n",
            s.color
        ));
        let ly = MARGIN_TOP + 16.0 * si as f64 + 8.0;
        let lx = WIDTH - MARGIN_RIGHT - 170.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            lx + 24.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 30.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

const SIM_COLOR: &str = "#1f77b4";
const ADJUSTED_COLOR: &str = "#2ca02c";
const MEASURE_ZERO_COLOR: &str = "#d62728";

/// Writes `exp<id>_<quantity>.csv` and `.svg` for every quantity; returns
/// the paths written.
pub fn emit_figures(
    out_dir: &Path,
    stem: &str,
    comparison: &Comparison,
) -> Result<Vec<PathBuf>, HarnessError> {
    let grid = &comparison.sim.grid;
    let mut written = Vec::with_capacity(10);
    for q in Quantity::ALL {
        let sim: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, q.from_stats(&comparison.sim, i)))
            .collect();
        let adj: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, q.from_trajectory(&comparison.adjusted, i)))
            .collect();
        let mz: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, q.from_trajectory(&comparison.measure_zero, i)))
            .collect();

        let mut csv = String::from("t,simulation,adjusted,measure_zero\n");
        for i in 0..grid.len() {
            csv.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                grid[i], sim[i].1, adj[i].1, mz[i].1
            ));
        }
        let csv_path = out_dir.join(format!("{stem}_{}.csv", q.label()));
        write_atomic(&csv_path, csv.as_bytes())?;
        written.push(csv_path);

        let svg = line_chart_svg(
            &format!("{stem}: {}", q.label()),
            "t",
            q.label(),
            &[
                Series {
                    label: "simulation",
                    color: SIM_COLOR,
                    points: &sim,
                },
                Series {
                    label: "adjusted",
                    color: ADJUSTED_COLOR,
                    points: &adj,
                },
                Series {
                    label: "measure_zero",
                    color: MEASURE_ZERO_COLOR,
                    points: &mz,
                },
            ],
        );
        let svg_path = out_dir.join(format!("{stem}_{}.svg", q.label()));
        write_atomic(&svg_path, svg.as_bytes())?;
        written.push(svg_path);
    }
    Ok(written)
}

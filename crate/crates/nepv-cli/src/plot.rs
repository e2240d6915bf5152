//! Self-contained SVG emission for the two standard report figures: the
//! per-track convergence history on a log scale, and the final Ritz values
//! against the verified eigenvalues.

use std::collections::BTreeMap;

use nepv_core::arnoldi::LogRecord;
use nepv_core::Complex64;

pub const CONVERGENCE_PLOT_FILE: &str = "convergence.svg";
pub const SPECTRUM_PLOT_FILE: &str = "spectrum.svg";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Errors below this floor are clamped so converged tracks stay on the
/// canvas.
const LOG_FLOOR: f64 = 1e-17;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, title: &str) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    ));
}

fn axis_labels(out: &mut String, frame: &Frame, x_label: &str, y_label: &str, log_y: bool) {
    for step in 0..=4 {
        let t = step as f64 / 4.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>\n",
            frame.x(xv),
            HEIGHT - MARGIN_BOTTOM + 18.0,
            xv
        ));
        let y_text = if log_y {
            format!("1e{:.0}", yv)
        } else {
            format!("{yv:.2}")
        };
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y_text}</text>\n",
            MARGIN_LEFT - 6.0,
            frame.y(yv) + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
}

/// Per-track `|lambda_k - lambda_final|` against the iteration index, log
/// scale on the error axis.
pub fn convergence_svg(records: &[LogRecord]) -> String {
    let mut tracks: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        if !r.abs_error_vs_final.is_finite() {
            continue;
        }
        let err = r.abs_error_vs_final.max(LOG_FLOOR).log10();
        tracks
            .entry(r.history_id)
            .or_default()
            .push((r.iteration as f64, err));
    }

    let mut frame = Frame {
        x_min: 1.0,
        x_max: 2.0,
        y_min: -16.0,
        y_max: 1.0,
    };
    let mut any = false;
    for points in tracks.values() {
        for &(x, y) in points {
            if !any {
                frame.x_max = x;
                frame.y_min = y;
                frame.y_max = y;
                any = true;
            }
            frame.x_max = frame.x_max.max(x);
            frame.y_min = frame.y_min.min(y);
            frame.y_max = frame.y_max.max(y);
        }
    }
    frame.y_max += 0.5;
    frame.y_min -= 0.5;

    let mut out = String::new();
    open_svg(&mut out, "Ritz value error vs iteration");
    axis_labels(&mut out, &frame, "iteration", "abs error (log10)", true);
    for (id, points) in &tracks {
        let color = PALETTE[id % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Final Ritz values and verified eigenvalues over their sorted index, for
/// an at-a-glance comparison of which Ritz values are genuine.
pub fn spectrum_svg(ritz: &[Complex64], genuine: &[Complex64]) -> String {
    let mut ritz: Vec<f64> = ritz.iter().map(|z| z.re).collect();
    let mut genuine: Vec<f64> = genuine.iter().map(|z| z.re).collect();
    ritz.sort_by(f64::total_cmp);
    genuine.sort_by(f64::total_cmp);

    let lo = ritz
        .iter()
        .chain(&genuine)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = ritz
        .iter()
        .chain(&genuine)
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (lo, hi) = if lo.is_finite() && hi.is_finite() {
        let pad = 0.05 * (hi - lo).max(1.0);
        (lo - pad, hi + pad)
    } else {
        (-1.0, 1.0)
    };
    let frame = Frame {
        x_min: 0.0,
        x_max: ritz.len().max(genuine.len()).max(1) as f64,
        y_min: lo,
        y_max: hi,
    };

    let mut out = String::new();
    open_svg(&mut out, "Ritz values vs verified eigenvalues");
    axis_labels(&mut out, &frame, "index", "Re(lambda)", false);
    for (k, &v) in ritz.iter().enumerate() {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"{}\"/>\n",
            frame.x(k as f64 + 0.5),
            frame.y(v),
            PALETTE[0]
        ));
    }
    for (k, &v) in genuine.iter().enumerate() {
        let x = frame.x(k as f64 + 0.5);
        let y = frame.y(v);
        out.push_str(&format!(
            "<path d=\"M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x - 4.0, y - 4.0, x + 4.0, y + 4.0, x - 4.0, y + 4.0, x + 4.0, y - 4.0,
            PALETTE[1]
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">o Ritz &#160;&#160; x genuine</text>\n",
        MARGIN_LEFT + 8.0,
        MARGIN_TOP + 16.0
    ));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed_svg() {
        let records = vec![
            LogRecord {
                iteration: 1,
                history_id: 0,
                lambda: Complex64::new(1.0, 0.0),
                residual_estimate: 1e-3,
                abs_error_vs_final: 1e-2,
            },
            LogRecord {
                iteration: 2,
                history_id: 0,
                lambda: Complex64::new(1.1, 0.0),
                residual_estimate: 1e-5,
                abs_error_vs_final: 1e-6,
            },
        ];
        let svg = convergence_svg(&records);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));

        let svg = spectrum_svg(
            &[Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.1)],
            &[Complex64::new(2.0, 0.0)],
        );
        assert!(svg.contains("circle"));
        assert!(svg.contains("path"));

        // Degenerate inputs must still produce a valid document.
        let svg = convergence_svg(&[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let svg = spectrum_svg(&[], &[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

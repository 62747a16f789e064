//! Minimal SVG rendering of spectrum panels: measured counts, transmittance,
//! and absorbance stacked vertically, data-first (no styling dependencies).

use ghostspec::Spectrum;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 56.0;

pub struct Panel<'a> {
    pub title: &'a str,
    pub traces: Vec<(&'a str, &'a Spectrum, &'a str)>, // label, data, color
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render(panels: &[Panel<'_>]) -> String {
    let height = panels.len() as f64 * PANEL_H + MARGIN;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, panel) in panels.iter().enumerate() {
        let top = i as f64 * PANEL_H + 24.0;
        let bottom = top + PANEL_H - 56.0;
        let left = MARGIN;
        let right = WIDTH - 24.0;

        let (x_lo, x_hi) = finite_range(
            panel
                .traces
                .iter()
                .flat_map(|(_, s, _)| s.lambda_nm.iter().copied()),
        );
        let (y_lo, y_hi) = finite_range(panel.traces.iter().flat_map(|(_, s, _)| {
            s.values
                .iter()
                .zip(&s.masked)
                .filter(|(_, &m)| !m)
                .map(|(v, _)| *v)
        }));

        out.push_str(&format!(
            "<text x=\"{left}\" y=\"{}\" font-weight=\"bold\">{}</text>\n",
            top - 6.0,
            panel.title
        ));
        out.push_str(&format!(
            "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
            right - left,
            bottom - top
        ));
        out.push_str(&format!(
            "<text x=\"{left}\" y=\"{}\" fill=\"#444\">{x_lo:.1} nm</text>\n\
             <text x=\"{}\" y=\"{}\" fill=\"#444\" text-anchor=\"end\">{x_hi:.1} nm</text>\n\
             <text x=\"{}\" y=\"{}\" fill=\"#444\" text-anchor=\"end\">{y_hi:.3}</text>\n\
             <text x=\"{}\" y=\"{bottom}\" fill=\"#444\" text-anchor=\"end\">{y_lo:.3}</text>\n",
            bottom + 16.0,
            right,
            bottom + 16.0,
            left - 4.0,
            top + 10.0,
            left - 4.0,
        ));

        for (offset, (label, spectrum, color)) in panel.traces.iter().enumerate() {
            let mut path = String::new();
            let mut pen_down = false;
            for i in 0..spectrum.len() {
                if spectrum.masked[i] || !spectrum.values[i].is_finite() {
                    pen_down = false;
                    continue;
                }
                let x = left
                    + (spectrum.lambda_nm[i] - x_lo) / (x_hi - x_lo) * (right - left);
                let y = bottom - (spectrum.values[i] - y_lo) / (y_hi - y_lo) * (bottom - top);
                path.push_str(if pen_down { "L" } else { "M" });
                path.push_str(&format!("{x:.1},{y:.1} "));
                pen_down = true;
            }
            out.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>\n"
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
                right - 160.0,
                top + 14.0 + offset as f64 * 14.0
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

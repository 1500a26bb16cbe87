//! Tiny static SVG plots (box plots and line charts). No external
//! renderer, no timestamps — outputs depend only on the data.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 6] = ["#2b6cb0", "#c05621", "#2f855a", "#9b2c2c", "#6b46c1", "#4a5568"];

struct Canvas {
    body: String,
    y_min: f64,
    y_max: f64,
}

impl Canvas {
    fn new(y_min: f64, y_max: f64, title: &str, y_label: &str) -> Canvas {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            WIDTH / 2.0,
            escape(title)
        ));
        body.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        ));
        // plot frame
        body.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        ));
        let mut c = Canvas { body, y_min, y_max };
        c.y_axis_ticks();
        c
    }

    fn sy(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-300);
        let frac = (v - self.y_min) / span;
        HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)
    }

    fn y_axis_ticks(&mut self) {
        for k in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * k as f64 / 4.0;
            let y = self.sy(v);
            self.body.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"#999\"/>\n",
                MARGIN_L - 5.0
            ));
            self.body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                MARGIN_L - 9.0,
                y + 4.0,
                trim_num(v)
            ));
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn trim_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 < sorted.len() {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        } else {
            sorted[lo]
        }
    };
    (q(0.25), q(0.5), q(0.75))
}

/// One labelled box (median, quartile box, min/max whiskers) per series.
pub fn box_plot(title: &str, y_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let all: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.08).max(1e-12);
    let mut c = Canvas::new(lo - pad, hi + pad, title, y_label);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let slot = plot_w / series.len() as f64;
    let box_w = (slot * 0.4).min(70.0);
    for (k, (label, values)) in series.iter().enumerate() {
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (q1, med, q3) = quartiles(&sorted);
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        let cx = MARGIN_L + slot * (k as f64 + 0.5);
        let color = PALETTE[k % PALETTE.len()];
        // whisker
        c.body.push_str(&format!(
            "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"{color}\"/>\n",
            c.sy(min),
            c.sy(max)
        ));
        for v in [min, max] {
            c.body.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>\n",
                cx - box_w / 4.0,
                c.sy(v),
                cx + box_w / 4.0,
                c.sy(v)
            ));
        }
        // quartile box and median
        c.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{box_w}\" height=\"{}\" fill=\"{color}\" \
             fill-opacity=\"0.25\" stroke=\"{color}\"/>\n",
            cx - box_w / 2.0,
            c.sy(q3),
            (c.sy(q1) - c.sy(q3)).max(0.5)
        ));
        c.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            cx - box_w / 2.0,
            c.sy(med),
            cx + box_w / 2.0,
            c.sy(med)
        ));
        c.body.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 20.0,
            escape(label)
        ));
    }
    c.finish()
}

/// Multi-series line chart over a shared x grid.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let ys: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)).collect();
    let xs: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)).collect();
    let (ylo, yhi) = min_max(&ys);
    let (xlo, xhi) = min_max(&xs);
    let pad = ((yhi - ylo) * 0.08).max(1e-12);
    let mut c = Canvas::new(ylo - pad, yhi + pad, title, y_label);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let sx = |x: f64| MARGIN_L + (x - xlo) / (xhi - xlo).max(1e-300) * plot_w;

    for k in 0..=4 {
        let x = xlo + (xhi - xlo) * k as f64 / 4.0;
        c.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            sx(x),
            HEIGHT - MARGIN_B + 20.0,
            trim_num(x)
        ));
    }
    c.body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    ));

    for (k, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), c.sy(y)))
            .collect();
        c.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in pts {
            c.body.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                c.sy(y)
            ));
        }
        // legend entry
        let ly = MARGIN_T + 16.0 * (k as f64 + 1.0);
        c.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            WIDTH - MARGIN_R - 130.0,
            WIDTH - MARGIN_R - 105.0
        ));
        c.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            WIDTH - MARGIN_R - 100.0,
            ly + 4.0,
            escape(label)
        ));
    }
    c.finish()
}

/// Scatter of (x, y) pairs with the identity line, used for parameter
/// recovery views.
pub fn scatter_identity(title: &str, x_label: &str, y_label: &str, pts: &[(f64, f64)]) -> String {
    let all: Vec<f64> = pts.iter().flat_map(|&(a, b)| [a, b]).collect();
    let (lo, hi) = min_max(&all);
    let pad = ((hi - lo) * 0.08).max(1e-12);
    let mut c = Canvas::new(lo - pad, hi + pad, title, y_label);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let sx = |x: f64| MARGIN_L + (x - (lo - pad)) / ((hi + pad) - (lo - pad)) * plot_w;
    c.body.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#aaa\" stroke-dasharray=\"4 3\"/>\n",
        sx(lo - pad),
        c.sy(lo - pad),
        sx(hi + pad),
        c.sy(hi + pad)
    ));
    for &(x, y) in pts {
        c.body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#2b6cb0\" fill-opacity=\"0.7\"/>\n",
            sx(x),
            c.sy(y)
        ));
    }
    c.body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    ));
    c.finish()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

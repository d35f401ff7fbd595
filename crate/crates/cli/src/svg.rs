//! Static SVG overlay of flexibility regions. Output depends only on the
//! inputs: layers are drawn in the order given and all numbers use fixed
//! precision.

use std::fmt::Write as _;

use pqflex::polytope::Polygon2D;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub struct Layer<'a> {
    pub label: String,
    pub polygon: &'a Polygon2D,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn covering<'a>(points: impl Iterator<Item = &'a [f64; 2]>) -> Frame {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let pad = |lo: f64, hi: f64| {
            let span = hi - lo;
            let d = if span > 1e-9 { 0.05 * span } else { 0.1 };
            (lo - d, hi + d)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    /// SVG y grows downward.
    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

/// Regions on the PQ-plane with the initial operating point marked by ×.
pub fn render(layers: &[Layer<'_>], origin: [f64; 2]) -> String {
    let frame = Frame::covering(layers.iter().flat_map(|l| l.polygon.vertices.iter()).chain(std::iter::once(&origin)));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    axes(&mut s, &frame);
    for (i, layer) in layers.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = layer
            .polygon
            .vertices
            .iter()
            .map(|v| format!("{:.2},{:.2}", frame.sx(v[0]), frame.sy(v[1])))
            .collect();
        match pts.len() {
            0 => {}
            1 => {
                let v = layer.polygon.vertices[0];
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    frame.sx(v[0]),
                    frame.sy(v[1])
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.12" stroke="{color}" stroke-width="1.5"/>"#,
                    pts.join(" ")
                );
            }
        }
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R - 150.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{color}" fill-opacity="0.4" stroke="{color}"/>"#,
            ly - 10.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 18.0, escape(&layer.label));
    }
    let (ox, oy) = (frame.sx(origin[0]), frame.sy(origin[1]));
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="black" stroke-width="2"/>"#,
        ox - 6.0,
        oy - 6.0,
        ox + 6.0,
        oy + 6.0,
        ox - 6.0,
        oy + 6.0,
        ox + 6.0,
        oy - 6.0
    );
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, f: &Frame) {
    let (l, r, t, b) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(s, r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#444"/>"##, r - l, b - t);
    for k in 0..=TICKS {
        let u = k as f64 / TICKS as f64;
        let x = f.x0 + u * (f.x1 - f.x0);
        let y = f.y0 + u * (f.y1 - f.y0);
        let (px, py) = (f.sx(x), f.sy(y));
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{t}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#, b + 16.0);
        let _ = writeln!(s, r##"<line x1="{l}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#, l - 6.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">P at PCC [p.u.]</text>"#, (l + r) / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">Q at PCC [p.u.]</text>"#,
        (t + b) / 2.0
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

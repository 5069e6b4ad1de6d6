//! Standalone SVG line plot of a spectrum.

use std::fmt::Write as _;

use optomech_core::Spectrum;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo > 0.0 {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn polyline(
    out: &mut String,
    xs: &[f64],
    ys: &[f64],
    map: impl Fn(f64, f64) -> (f64, f64),
    colour: &str,
) {
    out.push_str("<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"");
    out.push_str(colour);
    out.push_str("\" points=\"");
    for (&x, &y) in xs.iter().zip(ys) {
        let (px, py) = map(x, y);
        let _ = write!(out, "{px:.2},{py:.2} ");
    }
    out.push_str("\"/>\n");
}

/// Absorption and dispersion against Δ/ω_m on shared axes.
pub fn render_svg(spectrum: &Spectrum, title: &str) -> String {
    let (x0, x1) = range(spectrum.normalized.iter().copied());
    let (y0, y1) = range(
        spectrum
            .absorption
            .iter()
            .chain(&spectrum.dispersion)
            .copied(),
    );
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let map = |x: f64, y: f64| {
        (
            MARGIN + (x - x0) / (x1 - x0) * w,
            MARGIN + (y1 - y) / (y1 - y0) * h,
        )
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, _) = map(xv, y0);
        let (_, py) = map(x0, yv);
        let _ = writeln!(
            s,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.3}</text>",
            HEIGHT - MARGIN + 18.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{py:.2}\" text-anchor=\"end\" dominant-baseline=\"middle\">{yv:.2}</text>",
            MARGIN - 6.0
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let (a, zy) = map(x0, 0.0);
        let (b, _) = map(x1, 0.0);
        let _ = writeln!(
            s,
            "<line x1=\"{a:.2}\" y1=\"{zy:.2}\" x2=\"{b:.2}\" y2=\"{zy:.2}\" stroke=\"#bbb\"/>"
        );
    }
    polyline(
        &mut s,
        &spectrum.normalized,
        &spectrum.absorption,
        map,
        "#1f77b4",
    );
    polyline(
        &mut s,
        &spectrum.normalized,
        &spectrum.dispersion,
        map,
        "#d62728",
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">Δ/ω_m</text>",
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"30\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#1f77b4\">absorption Re E_out</text>",
        WIDTH - MARGIN - 160.0,
        MARGIN + 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#d62728\">dispersion Im E_out</text>",
        WIDTH - MARGIN - 160.0,
        MARGIN + 32.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

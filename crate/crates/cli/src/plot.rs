//! Static SVG rendering of 2-D Poincaré disk embeddings.

use std::fmt::Write as _;

const SIZE: f64 = 600.0;
const RADIUS: f64 = 280.0;

fn to_view(x: &[f64]) -> (f64, f64) {
    let c = SIZE / 2.0;
    (c + RADIUS * x[0], c - RADIUS * x[1])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Disk outline, optional component geodesics, one marker per point and one
/// text node per label. Coordinates map linearly onto the viewport.
pub fn render(points: &[Vec<f64>], labels: Option<&[String]>, traces: &[Vec<Vec<f64>>]) -> String {
    let c = SIZE / 2.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        out,
        r##"<circle class="disk" cx="{c}" cy="{c}" r="{RADIUS}" fill="none" stroke="#444" stroke-width="1.5"/>"##
    );
    for trace in traces {
        let pts: Vec<String> = trace
            .iter()
            .map(|x| {
                let (u, v) = to_view(x);
                format!("{u:.3},{v:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline class="component" points="{}" fill="none" stroke="#c33" stroke-width="1"/>"##,
            pts.join(" ")
        );
    }
    for x in points {
        let (u, v) = to_view(x);
        let _ = writeln!(
            out,
            r##"<circle class="point" cx="{u:.3}" cy="{v:.3}" r="3" fill="#236"/>"##
        );
    }
    if let Some(labels) = labels {
        for (x, l) in points.iter().zip(labels) {
            let (u, v) = to_view(x);
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="10">{}</text>"#,
                u + 4.0,
                v - 4.0,
                escape(l)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

//! SVG biplot of two axes of a decomposition: rows as circles, columns as
//! triangles, each labeled. Output is a pure function of the decomposition.

use std::fmt::Write as _;

use crate::decomposition::Decomposition;
use crate::diagnostics::explained_variation;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 70.0;
const PAD: f64 = 0.05;
const ROW_COLOR: &str = "#1f77b4";
const COL_COLOR: &str = "#d62728";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Coordinate range including the origin, padded by 5% of its span on both sides.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((0.0_f64, 0.0_f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    (lo - PAD * span, hi + PAD * span)
}

fn label_or_index(label: &str, prefix: char, index: usize) -> String {
    if label.is_empty() {
        format!("{prefix}{}", index + 1)
    } else {
        label.to_owned()
    }
}

/// Plots axes `axis_x` and `axis_y` (1-based) of `decomp`.
pub fn emit_svg_biplot(decomp: &Decomposition, axis_x: usize, axis_y: usize) -> Result<String> {
    let available = decomp.axes.len();
    for axis in [axis_x, axis_y] {
        if axis == 0 || axis > available {
            return Err(Error::AxisOutOfRange { axis, available });
        }
    }
    if axis_x == axis_y {
        return Err(Error::DuplicateAxis(axis_x));
    }
    let explained = explained_variation(decomp)?;
    let ax = &decomp.axes[axis_x - 1];
    let ay = &decomp.axes[axis_y - 1];
    let model = &decomp.model;

    let (x0, x1) = padded_range(ax.f.iter().chain(ax.g.iter()).copied());
    let (y0, y1) = padded_range(ay.f.iter().chain(ay.g.iter()).copied());
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    // fmt::Write into a String is infallible
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999999"/>"##
    );
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="16" text-anchor="middle">{} map</text>"#, WIDTH / 2.0, MARGIN / 2.0, decomp.method);

    let (ox, oy) = (px(0.0), py(0.0));
    let _ = writeln!(
        svg,
        r##"<g stroke="#555555" stroke-dasharray="4 3"><line x1="{MARGIN:.2}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}"/><line x1="{ox:.2}" y1="{MARGIN:.2}" x2="{ox:.2}" y2="{:.2}"/></g>"##,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );

    let _ = writeln!(svg, r#"<g fill="{ROW_COLOR}" font-family="sans-serif" font-size="11">"#);
    for (i, label) in model.row_labels.iter().enumerate() {
        let (cx, cy) = (px(ax.f[i]), py(ay.f[i]));
        let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5"/>"#);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, cx + 5.0, cy - 5.0, escape(&label_or_index(label, 'r', i)));
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g fill="{COL_COLOR}" font-family="sans-serif" font-size="11">"#);
    for (j, label) in model.col_labels.iter().enumerate() {
        let (cx, cy) = (px(ax.g[j]), py(ay.g[j]));
        let _ = writeln!(
            svg,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            cx,
            cy - 5.0,
            cx - 4.5,
            cy + 3.5,
            cx + 4.5,
            cy + 3.5
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, cx + 6.0, cy - 6.0, escape(&label_or_index(label, 'c', j)));
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">Axis {axis_x} ({:.1}%)</text>"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN / 3.0,
        explained[axis_x - 1]
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">Axis {axis_y} ({:.1}%)</text>"#,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        explained[axis_y - 1]
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

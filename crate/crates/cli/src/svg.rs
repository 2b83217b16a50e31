//! Hand-rolled, byte-deterministic SVG heatmaps: one annotated rect per
//! grid cell, axes labeled with the parameter values.
//!
//! Color scale (documented in the emitted file): value 0 maps to green
//! `#1a9850`, 0.5 to pale yellow `#ffffbf`, 1 to red `#d73027`, with
//! straight per-channel interpolation and integer rounding, clamped at
//! both ends. Everything is formatted with fixed precision, so identical
//! inputs produce identical bytes.

const CELL_W: i64 = 64;
const CELL_H: i64 = 44;
const MARGIN_LEFT: i64 = 72;
const MARGIN_TOP: i64 = 56;
const MARGIN_BOTTOM: i64 = 44;
const MARGIN_RIGHT: i64 = 16;

const LOW: [f64; 3] = [0x1a as f64, 0x98 as f64, 0x50 as f64];
const MID: [f64; 3] = [0xff as f64, 0xff as f64, 0xbf as f64];
const HIGH: [f64; 3] = [0xd7 as f64, 0x30 as f64, 0x27 as f64];

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// Two-segment green→yellow→red ramp over [0, 1].
fn color(value: f64) -> String {
    let v = value.clamp(0.0, 1.0);
    let rgb = if v <= 0.5 { lerp(LOW, MID, v * 2.0) } else { lerp(MID, HIGH, (v - 0.5) * 2.0) };
    format!(
        "#{:02x}{:02x}{:02x}",
        rgb[0].round() as u8,
        rgb[1].round() as u8,
        rgb[2].round() as u8
    )
}

/// Dark cells get white annotations.
fn text_color(value: f64) -> &'static str {
    let v = value.clamp(0.0, 1.0);
    if !(0.12..=0.88).contains(&v) {
        "#ffffff"
    } else {
        "#1c1c1c"
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a heatmap. `cells` is row-major over `rows x cols`: rows follow
/// `row_values` (bottom row first on screen, matching an ascending y
/// axis), columns follow `col_values` left to right.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    col_values: &[String],
    row_values: &[String],
    cells: &[f64],
) -> String {
    assert_eq!(cells.len(), col_values.len() * row_values.len(), "cell grid shape");
    let cols = col_values.len() as i64;
    let rows = row_values.len() as i64;
    let width = MARGIN_LEFT + cols * CELL_W + MARGIN_RIGHT;
    let height = MARGIN_TOP + rows * CELL_H + MARGIN_BOTTOM;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(
        "<!-- color scale: 0 -> #1a9850, 0.5 -> #ffffbf, 1 -> #d73027, \
         linear per channel, clamped -->\n",
    );
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"28\" font-family=\"monospace\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        width / 2,
        esc(title)
    ));
    for (r, row_name) in row_values.iter().enumerate() {
        // Ascending axis: row 0 sits at the bottom.
        let y = MARGIN_TOP + (rows - 1 - r as i64) * CELL_H;
        for (c, _) in col_values.iter().enumerate() {
            let x = MARGIN_LEFT + c as i64 * CELL_W;
            let value = cells[r * col_values.len() + c];
            out.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                 fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n",
                color(value)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
                 text-anchor=\"middle\" fill=\"{}\">{value:.3}</text>\n",
                x + CELL_W / 2,
                y + CELL_H / 2 + 4,
                text_color(value)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8,
            y + CELL_H / 2 + 4,
            esc(row_name)
        ));
    }
    for (c, col_name) in col_values.iter().enumerate() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + c as i64 * CELL_W + CELL_W / 2,
            MARGIN_TOP + rows * CELL_H + 18,
            esc(col_name)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + cols * CELL_W / 2,
        MARGIN_TOP + rows * CELL_H + 38,
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_TOP + rows * CELL_H / 2,
        MARGIN_TOP + rows * CELL_H / 2,
        esc(y_label)
    ));
    out.push_str("</svg>\n");
    out
}

//! CSV and SVG emission with deterministic number formatting.

use plotters::prelude::*;
use std::path::Path;

/// Rounds to 10 significant digits, then prints the shortest decimal that
/// reads back as the rounded value. Plain notation for magnitudes in
/// `[1e-4, 1e15)`, exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if rounded == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// One line series for [`line_plot`].
pub struct Series<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

const COLOURS: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

/// Writes a static SVG line plot.
pub fn line_plot(path: &Path, title: &str, x_label: &str, series: &[Series<'_>]) -> Result<(), String> {
    let bounds = |values: &mut dyn Iterator<Item = f64>| {
        values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = bounds(&mut series.iter().flat_map(|s| s.xs.iter().copied()));
    let (mut y0, mut y1) = bounds(&mut series.iter().flat_map(|s| s.ys.iter().copied()));
    if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) || x0 >= x1 {
        return Err("nothing to plot".into());
    }
    if y1 - y0 <= f64::EPSILON * y1.abs().max(1.0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    let err = |e: &dyn std::fmt::Display| e.to_string();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .draw()
        .map_err(|e| err(&e))?;
    for (i, s) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        chart
            .draw_series(LineSeries::new(
                s.xs.iter().zip(s.ys).map(|(&x, &y)| (x, y)),
                &colour,
            ))
            .map_err(|e| err(&e))?
            .label(s.label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))
}

//! Self-contained SVG plots of regret curves: mean lines with translucent
//! one-standard-deviation bands, one series per input CSV, optional log-log
//! axes. No external plotting dependency; the emitted file is plain SVG 1.1.

use crate::error::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};

/// One plottable curve: checkpoint rounds with mean and standard deviation
/// of cumulative regret across reps.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// (round, mean, std), rounds strictly increasing.
    pub points: Vec<(f64, f64, f64)>,
}

/// Aggregate a run CSV (schema `rep,round,cum_regret,...`) into a series:
/// group rows by round and take the mean and sample standard deviation of
/// the regret column across reps.
pub fn series_from_run_csv<R: Read>(name: &str, reader: R) -> Result<Series> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Usage("empty CSV: missing header".into()))??;
    if !header.starts_with("rep,round,cum_regret") {
        return Err(Error::Usage(format!(
            "unexpected CSV header {header:?}; expected a run CSV starting with rep,round,cum_regret"
        )));
    }
    // Rounds in first-appearance order; runs emit them ascending per rep.
    let mut rounds: Vec<u64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let bad = |what: &str| {
            Error::Usage(format!("CSV row {}: missing or invalid {what}", i + 2))
        };
        let _rep = cols.next().ok_or_else(|| bad("rep"))?;
        let round: u64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("round"))?;
        let regret: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("cum_regret"))?;
        match rounds.iter().position(|&r| r == round) {
            Some(pos) => values[pos].push(regret),
            None => {
                rounds.push(round);
                values.push(vec![regret]);
            }
        }
    }
    let mut order: Vec<usize> = (0..rounds.len()).collect();
    order.sort_by_key(|&i| rounds[i]);
    let points = order
        .into_iter()
        .map(|i| {
            let vs = &values[i];
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let std = if vs.len() > 1 {
                (vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (rounds[i] as f64, mean, std)
        })
        .collect();
    Ok(Series { name: name.to_string(), points })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    if !(max > min) {
        return vec![min];
    }
    let raw = (max - min) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| raw <= s)
        .unwrap_or(10.0 * mag);
    let mut t = (min / step).ceil() * step;
    let mut out = Vec::new();
    while t <= max + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e7 {
        format!("{:.0}", v)
    } else if v.abs() >= 100.0 {
        format!("{:.0}", v)
    } else {
        format!("{:.2}", v)
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-12);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Render series as one SVG document. With `loglog`, both axes are base-2
/// logarithmic and points with nonpositive coordinates are skipped.
pub fn render_svg(series: &[Series], loglog: bool) -> Result<String> {
    let transformed: Vec<(String, Vec<(f64, f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|&&(x, y, _)| !loglog || (x > 0.0 && y > 0.0))
                .map(|&(x, y, sd)| {
                    if loglog {
                        // Bands stay in value space before transforming.
                        (x.log2(), y.log2(), sd)
                    } else {
                        (x, y, sd)
                    }
                })
                .collect::<Vec<_>>();
            (s.name.clone(), pts)
        })
        .collect();
    if transformed.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::Usage("nothing to plot: all series are empty".into()));
    }

    // Band extents in drawing space. In loglog mode the band is
    // log2(mean +- std), clamped to stay positive.
    let band = |y: f64, sd: f64, up: bool| -> f64 {
        if loglog {
            let v = 2f64.powf(y);
            let b = if up { v + sd } else { (v - sd).max(v * 1e-3) };
            b.log2()
        } else if up {
            y + sd
        } else {
            y - sd
        }
    };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, pts) in &transformed {
        for &(x, y, sd) in pts {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(band(y, sd, false));
            y_max = y_max.max(band(y, sd, true));
        }
    }
    if !(x_max > x_min) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if !(y_max > y_min) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let frame = Frame { x_min, x_max, y_min, y_max };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes with ticks and grid lines.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let tick_label = |v: f64| if loglog { format!("2^{}", fmt_tick(v)) } else { fmt_tick(v) };
    for t in nice_ticks(frame.x_min, frame.x_max, 7) {
        let px = frame.x(t);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{y1:.2}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            tick_label(t)
        ));
    }
    for t in nice_ticks(frame.y_min, frame.y_max, 6) {
        let py = frame.y(t);
        svg.push_str(&format!(
            "<line x1=\"{x0:.2}\" y1=\"{py:.2}\" x2=\"{x1:.2}\" y2=\"{py:.2}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            x0 - 8.0,
            py + 4.0,
            tick_label(t)
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
    ));
    let suffix = if loglog { " (log scale)" } else { "" };
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">round{suffix}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">\
         cumulative regret{suffix}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    for (i, (name, pts)) in transformed.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        // Band polygon: upper edge left to right, lower edge back.
        if pts.iter().any(|&(_, _, sd)| sd > 0.0) {
            let mut poly = String::new();
            for &(x, y, sd) in pts {
                poly.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(band(y, sd, true))));
            }
            for &(x, y, sd) in pts.iter().rev() {
                poly.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(band(y, sd, false))));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
                poly.trim_end()
            ));
        }
        let line: Vec<String> = pts
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            line.join(" ")
        ));
        for &(x, y, _) in pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                frame.x(x),
                frame.y(y)
            ));
        }
        // Legend entry.
        let ly = MARGIN_TOP + 16.0 + i as f64 * 22.0;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            lx + 26.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            lx + 32.0,
            ly + 4.0,
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg<W: Write>(series: &[Series], loglog: bool, mut w: W) -> Result<()> {
    let svg = render_svg(series, loglog)?;
    w.write_all(svg.as_bytes())?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

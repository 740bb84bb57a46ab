//! SVG rendering of trace CSVs and Hessian spectra.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{input, Error, Result};

/// Columns of a trace CSV needed for plotting.
#[derive(Clone, Debug, Default)]
pub struct TraceColumns {
    pub k: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub f: Vec<f64>,
    pub dist_to_init: Vec<Option<f64>>,
    pub dist_to_saddle: Vec<Option<f64>>,
    pub second_order: Vec<usize>,
}

pub fn read_trace_csv(path: &Path) -> Result<TraceColumns> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::Input(format!("missing column `{name}`")));
    let (ik, is, i_f, ig, idi, ids) =
        (col("k")?, col("step_type")?, col("f")?, col("grad_norm")?, col("dist_to_init")?, col("dist_to_saddle")?);
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Input(format!("bad number `{s}`"))) };
    let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut t = TraceColumns::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        t.k.push(num(&rec[ik])?);
        t.f.push(num(&rec[i_f])?);
        t.grad_norm.push(num(&rec[ig])?);
        t.dist_to_init.push(opt(&rec[idi])?);
        t.dist_to_saddle.push(opt(&rec[ids])?);
        if &rec[is] == "second_order" {
            t.second_order.push(row);
        }
    }
    if t.k.is_empty() {
        return input("trace CSV has no rows");
    }
    Ok(t)
}

fn draw_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Input(format!("plot rendering failed: {e}"))
}

fn finite_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Three stacked panels: gradient norm (log scale), `f`, and distance from
/// the initial point with the first `eps`-exit and second-order steps marked.
pub fn render_trace_svg(trace: &TraceColumns, eps: Option<f64>, out: &Path) -> Result<()> {
    let root = SVGBackend::new(out, (900, 960)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let panels = root.split_evenly((3, 1));
    let kmax = trace.k.last().copied().unwrap_or(1.0).max(1.0);

    let positive: Vec<(f64, f64)> =
        trace.k.iter().zip(&trace.grad_norm).filter(|(_, g)| **g > 0.0 && g.is_finite()).map(|(k, g)| (*k, *g)).collect();
    let (glo, ghi) = positive.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), (_, g)| (a.min(*g), b.max(*g)));
    let (glo, ghi) = if positive.is_empty() { (1e-16, 1.0) } else { (glo * 0.5, ghi * 2.0) };
    let mut c = ChartBuilder::on(&panels[0])
        .margin(10)
        .caption("gradient norm", ("sans-serif", 18))
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..kmax, (glo..ghi).log_scale())
        .map_err(draw_err)?;
    c.configure_mesh().draw().map_err(draw_err)?;
    c.draw_series(LineSeries::new(positive, &BLUE)).map_err(draw_err)?;

    let (flo, fhi) = finite_range(trace.f.iter().copied());
    let mut c = ChartBuilder::on(&panels[1])
        .margin(10)
        .caption("f", ("sans-serif", 18))
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..kmax, flo..fhi)
        .map_err(draw_err)?;
    c.configure_mesh().draw().map_err(draw_err)?;
    c.draw_series(LineSeries::new(trace.k.iter().copied().zip(trace.f.iter().copied()), &BLACK)).map_err(draw_err)?;

    let dist: Vec<(f64, f64)> = trace.k.iter().zip(&trace.dist_to_init).filter_map(|(k, d)| d.map(|d| (*k, d))).collect();
    let (dlo, dhi) = finite_range(dist.iter().map(|p| p.1).chain(eps));
    let mut c = ChartBuilder::on(&panels[2])
        .margin(10)
        .caption("distance from initialization", ("sans-serif", 18))
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..kmax, dlo..dhi)
        .map_err(draw_err)?;
    c.configure_mesh().draw().map_err(draw_err)?;
    c.draw_series(LineSeries::new(dist.clone(), &BLUE)).map_err(draw_err)?;
    let marks: Vec<(f64, f64)> = trace
        .second_order
        .iter()
        .filter_map(|&row| trace.dist_to_init.get(row).copied().flatten().map(|d| (trace.k[row], d)))
        .collect();
    c.draw_series(marks.into_iter().map(|p| Cross::new(p, 6, RED.stroke_width(2)))).map_err(draw_err)?;
    if let Some(eps) = eps {
        let exit = trace
            .k
            .iter()
            .zip(trace.dist_to_saddle.iter().zip(&trace.dist_to_init))
            .find(|(_, (s, d))| s.or(**d).is_some_and(|v| v > eps))
            .map(|(k, _)| *k);
        if let Some(k) = exit {
            c.draw_series(LineSeries::new([(k, dlo), (k, dhi)], GREEN.stroke_width(2))).map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Stem plot of initial and final Hessian eigenvalues.
pub fn render_spectrum_svg(initial: &[f64], last: &[f64], out: &Path) -> Result<()> {
    let root = SVGBackend::new(out, (900, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let n = initial.len().max(last.len()).max(1) as f64;
    let (lo, hi) = finite_range(initial.iter().chain(last).copied().chain([0.0]));
    let mut c = ChartBuilder::on(&root)
        .margin(10)
        .caption("Hessian eigenvalues: initial (blue), final (red)", ("sans-serif", 18))
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(-0.5..n - 0.5, lo..hi)
        .map_err(draw_err)?;
    c.configure_mesh().draw().map_err(draw_err)?;
    for (vals, color, shift) in [(initial, BLUE, -0.1), (last, RED, 0.1)] {
        for (i, &v) in vals.iter().enumerate() {
            let x = i as f64 + shift;
            c.draw_series(LineSeries::new([(x, 0.0), (x, v)], color.stroke_width(2))).map_err(draw_err)?;
            c.draw_series([Circle::new((x, v), 4, color.filled())]).map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

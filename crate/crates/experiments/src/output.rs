//! CSV and SVG writers.
//!
//! Every CSV file starts with a comment line naming its schema version and
//! the hash of the configuration that produced it.

use std::fs;
use std::path::Path;

use plotters::prelude::*;

use crate::error::{ExperimentError, Result};
use crate::runs::{GradientCheck, OptimizeReport, PerturbReport, SolveReport, SweepReport};

pub const SCHEMA_VERSION: u32 = 1;

fn header(schema: &str, hash: &str) -> String {
    format!("# grating {schema} v{SCHEMA_VERSION} config-sha256={hash}\n")
}

fn csv_body<F>(columns: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    fill(&mut w)?;
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn solve_csv(r: &SolveReport, hash: &str) -> Result<String> {
    let body = csv_body(&["mode", "kx", "ky", "amplitude_re", "amplitude_im", "efficiency"], |w| {
        for i in 0..r.result.modes.len() {
            let a = r.result.amplitudes[i];
            w.write_record([
                r.result.modes[i].to_string(),
                num(r.kx[i]),
                num(r.ky[i]),
                num(a.re),
                num(a.im),
                num(r.result.efficiencies[i]),
            ])?;
        }
        Ok(())
    })?;
    Ok(format!("{}# elements={} energy_balance={}\n{body}", header("solve", hash), r.elements, num(r.energy_balance())))
}

/// One row per iteration. With `timing = false` the wall-clock column is
/// left empty so that repeated runs produce identical files.
pub fn trace_csv(r: &OptimizeReport, hash: &str, timing: bool) -> Result<String> {
    let columns = [
        "iteration",
        "objective",
        "efficiency",
        "gradient_norm",
        "step",
        "backtracks",
        "solves",
        "negative_fraction",
        "seconds",
    ];
    let body = csv_body(&columns, |w| {
        for (t, e) in r.result.trace.iter().zip(&r.efficiencies) {
            w.write_record([
                t.iteration.to_string(),
                num(t.value),
                num(*e),
                num(t.gradient_norm),
                num(t.step),
                t.backtracks.to_string(),
                t.solves.to_string(),
                opt(t.negative_fraction),
                if timing { format!("{:.3}", t.seconds) } else { String::new() },
            ])?;
        }
        Ok(())
    })?;
    let trailer = format!(
        "# method={} seed={} termination={:?} efficiency={} iterations_to_tolerance={} q={}\n",
        r.method,
        r.seed,
        r.result.termination,
        num(r.efficiency),
        r.iterations_to_tolerance,
        opt(r.rate)
    );
    Ok(format!("{}{body}{trailer}", header("optimize", hash)))
}

pub fn sweep_csv(r: &SweepReport, hash: &str) -> Result<String> {
    let body = csv_body(&["wavelength", "incidence_angle", "efficiency", "energy_balance"], |w| {
        for row in &r.rows {
            w.write_record([num(row.wavelength), num(row.angle), num(row.efficiency), num(row.energy_balance)])?;
        }
        Ok(())
    })?;
    Ok(format!("{}# mode={}\n{body}", header("sweep", hash), r.mode))
}

pub fn perturb_csv(r: &PerturbReport, hash: &str) -> Result<String> {
    let body = csv_body(&["variable", "sign", "value", "efficiency"], |w| {
        for row in &r.rows {
            w.write_record([row.variable.to_string(), row.sign.to_string(), num(row.value), num(row.efficiency)])?;
        }
        Ok(())
    })?;
    Ok(format!(
        "{}# mode={} delta={} base={}\n{body}# worst={}\n",
        header("perturb", hash),
        r.mode,
        r.delta,
        num(r.base),
        num(r.worst())
    ))
}

pub fn gradient_check_csv(r: &GradientCheck, hash: &str) -> Result<String> {
    let n = r.gradient.len();
    let body = csv_body(&["row", "column", "adjoint", "finite_difference"], |w| {
        for i in 0..n {
            w.write_record([i.to_string(), String::new(), num(r.gradient[i]), num(r.fd_gradient[i])])?;
        }
        for i in 0..n {
            for j in 0..n {
                w.write_record([i.to_string(), j.to_string(), num(r.hessian[(i, j)]), num(r.fd_hessian[(i, j)])])?;
            }
        }
        Ok(())
    })?;
    Ok(format!(
        "{}# mode={} efficiency={} gradient_error={} hessian_error={} asymmetry={}\n{body}",
        header("gradient-check", hash),
        r.mode,
        num(r.efficiency),
        num(r.gradient_error),
        num(r.hessian_error),
        num(r.asymmetry)
    ))
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// A named polyline.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of `series` as an SVG file; `log_y` plots `log10 y`.
pub fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> Result<()> {
    let plot_err = |e: &dyn std::fmt::Display| ExperimentError::Plot(e.to_string());
    let transform = |y: f64| if log_y { y.abs().max(1e-300).log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|(_, y)| y.is_finite()).map(|&(x, y)| (x, transform(y))).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(ExperimentError::Plot("nothing to plot".into()));
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let y_label = if log_y { format!("log10 {y_label}") } else { y_label.to_string() };

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| plot_err(&e))?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(|e| plot_err(&e))?;
    for (i, (s, p)) in series.iter().zip(pts).enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(p, color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(s.name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    if series.len() > 1 {
        chart.configure_series_labels().border_style(BLACK).draw().map_err(|e| plot_err(&e))?;
    }
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

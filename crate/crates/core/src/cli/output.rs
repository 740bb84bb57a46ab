//! CSV traces and JSON summaries.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::diagnostics::InvariantReport;
use crate::error::Result;
use crate::optimizer::{Termination, TrajectoryRecord};
use crate::problem::SmoothnessConstants;

pub const CSV_HEADER: [&str; 7] = ["k", "step_type", "f", "grad_norm", "dist_to_init", "dist_to_saddle", "xi_flag"];

pub const SCHEMA_VERSION: u32 = 1;

/// Positional decimal with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let s = format!("{:.16e}", x);
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if x < 0.0 { "-" } else { "" };
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let p = point as usize;
        format!("{}.{}", &digits[..p], &digits[p..])
    };
    format!("{sign}{body}")
}

/// Writes one row per recorded iteration. Distances are blank where the
/// iterate was thinned away; `dist_to_saddle` is blank without a saddle.
pub fn write_trace_csv<W: Write>(out: W, rec: &TrajectoryRecord, saddle: Option<&DVector<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    let x0 = &rec.iterates[0];
    for k in 0..rec.values.len() {
        let x = rec.iterate(k);
        let step = rec.step_types.get(k).map_or("", |s| s.as_str());
        let flag = rec.xi_flags.get(k).map_or(String::new(), |f| f.to_string());
        let d_init = x.map_or(String::new(), |x| fmt17((x - x0).norm()));
        let d_saddle = match (x, saddle) {
            (Some(x), Some(s)) => fmt17((x - s).norm()),
            _ => String::new(),
        };
        w.write_record([k.to_string(), step.to_string(), fmt17(rec.values[k]), fmt17(rec.grad_norms[k]), d_init, d_saddle, flag])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv_file(path: &Path, rec: &TrajectoryRecord, saddle: Option<&DVector<f64>>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_trace_csv(std::io::BufWriter::new(f), rec, saddle)
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub termination: Termination,
    pub steps: usize,
    pub second_order_count: usize,
    pub second_order_iterations: Vec<usize>,
    /// First exit from the `eps`-ball about `exit_reference`.
    pub first_exit: Option<usize>,
    pub first_xi_exit: Option<usize>,
    pub exit_reference: &'static str,
    pub initial_value: f64,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub initial_lambda_min: f64,
    pub initial_lambda_max: f64,
    pub final_lambda_min: f64,
    pub final_lambda_max: f64,
    pub initial_hessian_eigenvalues: Vec<f64>,
    pub final_hessian_eigenvalues: Vec<f64>,
    pub invariants: Option<InvariantReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub problem: String,
    pub dim: usize,
    pub constants: SmoothnessConstants,
    pub eps: f64,
    pub xi: Option<f64>,
    pub eps_max: f64,
    pub p_min: Option<f64>,
    pub initial_point: Vec<f64>,
    pub methods: Vec<MethodSummary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000");
        assert_eq!(fmt17(-0.015625), "-0.015625000000000000");
        assert_eq!(fmt17(123456.0), "123456.00000000000");
        assert_eq!(fmt17(1e20), "100000000000000000000.0");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    }
}

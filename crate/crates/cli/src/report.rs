//! Plot-ready CSV and JSON renderings of results.
//!
//! Numbers use Rust's shortest round-trip formatting, so equal inputs give
//! byte-identical files.

use std::fmt::Write;

use gapkit_core::{RobustnessCurve, TrajectoryRecord};
use serde::Serialize;

pub const CURVE_HEADER: &str = "lambda,gap_norm_after,robustness,clean_accuracy,noisy_accuracy";

pub const TRAJECTORY_HEADER: &str = "iter,loss,gap_norm,mean_abs_cos,var_along_gap_x,var_along_gap_y,\
var_along_init_gap_x,var_along_init_gap_y,var_s,alignment_err";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn curve_csv(curve: &RobustnessCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.lambda,
            p.gap_norm_after,
            p.robustness,
            opt(p.clean_accuracy),
            opt(p.noisy_accuracy)
        )
        .unwrap();
    }
    out
}

pub fn trajectory_csv(log: &[TrajectoryRecord]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in log {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.iter,
            r.loss,
            r.gap_norm,
            r.mean_abs_cos,
            r.var_along_gap_x,
            r.var_along_gap_y,
            r.var_along_init_gap_x,
            r.var_along_init_gap_y,
            r.var_s,
            r.alignment_err
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub n_x: usize,
    pub n_y: usize,
    pub d: usize,
    pub gap: Vec<f64>,
    pub gap_norm: f64,
    /// Absent when the gap is too small for cosines to be defined.
    pub orthogonality: Option<Orthogonality>,
    pub principal: Principal,
    /// Only for paired rows.
    pub recall_at_1: Option<f64>,
    /// Only with `--tau`, which requires paired rows.
    pub contrastive: Option<Contrastive>,
}

#[derive(Debug, Serialize)]
pub struct Orthogonality {
    pub mean_abs_cos: f64,
    pub max_abs_cos: f64,
    pub cos_x: Vec<f64>,
    pub cos_y: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Principal {
    pub rank_x: usize,
    pub rank_y: usize,
    /// Norm of the part of the gap outside X's principal subspace.
    pub orthogonal_gap_norm_x: f64,
    pub orthogonal_gap_norm_y: f64,
}

#[derive(Debug, Serialize)]
pub struct Contrastive {
    pub tau: f64,
    pub loss: f64,
    pub mean_sx: f64,
    pub var_sx: f64,
    pub mean_sy: f64,
    pub var_sy: f64,
}

#[derive(Debug, Serialize)]
pub struct NoiseReport {
    pub clean: String,
    pub results: Vec<NoiseResult>,
}

#[derive(Debug, Serialize)]
pub struct NoiseResult {
    pub noisy: String,
    pub d_c: f64,
    pub c_frobenius: f64,
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports contain only finite numbers and strings");
    s.push('\n');
    s
}
